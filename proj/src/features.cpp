#include "lbas/features.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "lbas/csv.hpp"

namespace lbas {

namespace {

std::unordered_set<std::string> to_set(const std::vector<std::string>& words) {
  return {words.begin(), words.end()};
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing resource list " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_ascii_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_ascii_alpha(char c) { return is_ascii_lower(c) || (c >= 'A' && c <= 'Z'); }

// Content-lemma types of a text fragment: tokens not in the function-word
// list, crudely lemmatized.
std::unordered_set<std::string> content_lemmas(const std::string& fragment,
                                               const std::unordered_set<std::string>& function_words) {
  std::unordered_set<std::string> out;
  for (const auto& tok : tokenize(fragment))
    if (!function_words.count(tok)) out.insert(crude_lemma(tok));
  return out;
}

}  // namespace

Normalization parse_normalization(std::string_view s) {
  if (s == "per100") return Normalization::Per100Words;
  if (s == "perword") return Normalization::PerWord;
  throw std::runtime_error("unknown normalization \"" + std::string(s) + "\"");
}

std::string_view to_string(Normalization norm) {
  return norm == Normalization::Per100Words ? "per100" : "perword";
}

const std::vector<std::string>& lb_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (int n = kMinBundleLength; n <= kMaxBundleLength; ++n) {
      v.push_back("lb" + std::to_string(n) + "_nonprompt");
      v.push_back("lb" + std::to_string(n) + "_prompt");
      v.push_back("lb" + std::to_string(n) + "_total");
    }
    v.push_back("total_prompt");
    v.push_back("total_nonprompt");
    v.push_back("total_overall");
    return v;
  }();
  return names;
}

const std::vector<std::string>& lb_aggregate_names() {
  static const std::vector<std::string> names = {"total_prompt", "total_nonprompt",
                                                 "total_overall"};
  return names;
}

std::vector<double> LBFeatureSet::as_row() const {
  std::vector<double> row;
  row.reserve(24);
  for (int i = 0; i < 7; ++i) {
    row.push_back(nonprompt[i]);
    row.push_back(prompt[i]);
    row.push_back(total[i]);
  }
  row.push_back(total_prompt);
  row.push_back(total_nonprompt);
  row.push_back(total_overall);
  return row;
}

LBFeatureSet compute_lb_features(const TokenizedEssay& essay,
                                 const BundleInventory& inventory,
                                 Normalization norm) {
  if (essay.word_count() == 0)
    throw std::runtime_error("compute_lb_features: empty essay " + essay.meta.essay_id);
  LBFeatureSet fs;
  auto it = inventory.counts_by_essay().find(essay.meta.essay_id);
  if (it != inventory.counts_by_essay().end()) {
    for (const auto& [bundle_idx, count] : it->second) {
      const LexicalBundle& b = inventory.bundles.at(bundle_idx);
      const int slot = b.length - kMinBundleLength;
      if (b.prompt_type == PromptType::Prompt)
        fs.prompt[slot] += static_cast<double>(count);
      else
        fs.nonprompt[slot] += static_cast<double>(count);
    }
  }
  const double scale = (norm == Normalization::Per100Words ? 100.0 : 1.0) /
                       static_cast<double>(essay.word_count());
  for (int i = 0; i < 7; ++i) {
    fs.prompt[i] *= scale;
    fs.nonprompt[i] *= scale;
    fs.total[i] = fs.prompt[i] + fs.nonprompt[i];
    fs.total_prompt += fs.prompt[i];
    fs.total_nonprompt += fs.nonprompt[i];
  }
  fs.total_overall = fs.total_prompt + fs.total_nonprompt;
  return fs;
}

Resources Resources::load(const std::filesystem::path& dir) {
  Resources r;
  r.lexicon = load_word_list(dir / "lexicon.txt");
  r.academic_words = load_word_list(dir / "academic_words.txt");
  r.connectives = load_word_list(dir / "connectives.txt");
  r.function_words = load_word_list(dir / "function_words.txt");
  return r;
}

const std::vector<std::string>& baseline_feature_names() {
  static const std::vector<std::string> names = {
      "misspelling_per_100_words", "adjacent_overlap_all_para_div_seg",
      "lexical_density_type",      "grammar_per_100_words",
      "typographical_per_100_words", "acad_collexeme_ratio_type",
      "adjacent_overlap_binary_all_sent", "nsubj_stdev",
      "pobj_stdev",                "dobj_stdev",
      "all_connective"};
  return names;
}

const std::vector<std::string>& native_baseline_names() {
  static const std::vector<std::string> names = {
      "misspelling_per_100_words", "adjacent_overlap_all_para_div_seg",
      "lexical_density_type",      "typographical_per_100_words",
      "acad_collexeme_ratio_type", "adjacent_overlap_binary_all_sent",
      "all_connective"};
  return names;
}

const std::vector<std::string>& external_only_names() {
  static const std::vector<std::string> names = {
      "grammar_per_100_words", "nsubj_stdev", "pobj_stdev", "dobj_stdev"};
  return names;
}

std::string crude_lemma(const std::string& word) {
  std::string w = word;
  auto drop_doubled_consonant = [](std::string& s) {
    if (s.size() >= 3 && s[s.size() - 1] == s[s.size() - 2] &&
        is_ascii_lower(s.back()) && s.back() != 'l' && s.back() != 's') {
      s.pop_back();
    }
  };
  if (ends_with(w, "ies") && w.size() > 4) {
    w.erase(w.size() - 3);
    w += 'y';
  } else if (ends_with(w, "ing") && w.size() > 5) {
    w.erase(w.size() - 3);
    drop_doubled_consonant(w);
  } else if (ends_with(w, "ed") && w.size() > 4) {
    w.erase(w.size() - 2);
    drop_doubled_consonant(w);
  } else if (ends_with(w, "es") && w.size() > 3 &&
             (ends_with(w.substr(0, w.size() - 2), "s") ||
              ends_with(w.substr(0, w.size() - 2), "x") ||
              ends_with(w.substr(0, w.size() - 2), "z") ||
              ends_with(w.substr(0, w.size() - 2), "ch") ||
              ends_with(w.substr(0, w.size() - 2), "sh"))) {
    w.erase(w.size() - 2);
  } else if (ends_with(w, "s") && !ends_with(w, "ss") && w.size() > 3) {
    w.pop_back();
  }
  return w;
}

BaselineFeatures compute_native_baseline(const TokenizedEssay& essay,
                                         const Resources& resources) {
  BaselineFeatures out;
  const auto lexicon = to_set(resources.lexicon);
  const auto academic = to_set(resources.academic_words);
  const auto connectives = to_set(resources.connectives);
  const auto function_words = to_set(resources.function_words);

  const auto& tokens = essay.tokens;
  const double word_count = static_cast<double>(tokens.size());
  if (tokens.empty())
    throw std::runtime_error("compute_native_baseline: empty essay " +
                             essay.meta.essay_id);

  // Misspellings: tokens absent from the lexicon.
  std::size_t misses = 0;
  for (const auto& tok : tokens)
    if (!lexicon.count(tok)) ++misses;
  out.values["misspelling_per_100_words"] =
      static_cast<double>(misses) * 100.0 / word_count;

  // Typographical errors: repeated terminal-mark runs in the original
  // text, sentence-initial lowercase after repair, unmatched brackets and
  // an odd number of double quotes.
  std::size_t typo = 0;
  const std::string& raw = essay.raw_text;
  for (std::size_t i = 0; i < raw.size();) {
    if (raw[i] == '.' || raw[i] == '!' || raw[i] == '?') {
      std::size_t j = i;
      while (j < raw.size() && (raw[j] == '.' || raw[j] == '!' || raw[j] == '?')) ++j;
      if (j - i >= 2) ++typo;
      i = j;
    } else {
      ++i;
    }
  }
  const std::string repaired = normalize_punctuation(raw);
  const auto sentences = split_sentences(repaired);
  for (const auto& s : sentences) {
    for (char c : s) {
      if (is_ascii_alpha(c)) {
        if (is_ascii_lower(c)) ++typo;
        break;
      }
      if (static_cast<unsigned char>(c) >= 0x80) break;  // non-ASCII initial
    }
  }
  std::vector<char> stack;
  std::size_t quote_count = 0;
  for (char c : raw) {
    if (c == '(' || c == '[' || c == '{') stack.push_back(c);
    else if (c == ')' || c == ']' || c == '}') {
      const char open = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (!stack.empty() && stack.back() == open)
        stack.pop_back();
      else
        ++typo;
    } else if (c == '"') {
      ++quote_count;
    }
  }
  typo += stack.size();
  if (quote_count % 2 != 0) ++typo;
  // capped at one event per word so the rate stays within [0, 100]
  typo = std::min(typo, tokens.size());
  out.values["typographical_per_100_words"] =
      static_cast<double>(typo) * 100.0 / word_count;

  // Type-based ratios.
  std::unordered_set<std::string> types(tokens.begin(), tokens.end());
  std::size_t content_types = 0, academic_types = 0;
  for (const auto& t : types) {
    if (!function_words.count(t)) ++content_types;
    if (academic.count(t)) ++academic_types;
  }
  out.values["lexical_density_type"] =
      static_cast<double>(content_types) / static_cast<double>(types.size());
  out.values["acad_collexeme_ratio_type"] =
      static_cast<double>(academic_types) / static_cast<double>(types.size());

  // Connective density over tokens.
  std::size_t connective_tokens = 0;
  for (const auto& tok : tokens)
    if (connectives.count(tok)) ++connective_tokens;
  out.values["all_connective"] = static_cast<double>(connective_tokens) / word_count;

  // Sentence-to-sentence binary overlap of content lemmas.
  double sent_overlap = 0.0;
  if (sentences.size() < 2) {
    out.warnings.push_back(essay.meta.essay_id +
                           ": fewer than 2 sentences after repair; overlap features 0");
  } else {
    std::vector<std::unordered_set<std::string>> lemma_sets;
    lemma_sets.reserve(sentences.size());
    for (const auto& s : sentences) lemma_sets.push_back(content_lemmas(s, function_words));
    std::size_t hits = 0;
    for (std::size_t i = 0; i + 1 < lemma_sets.size(); ++i) {
      bool shared = false;
      for (const auto& lemma : lemma_sets[i])
        if (lemma_sets[i + 1].count(lemma)) {
          shared = true;
          break;
        }
      if (shared) ++hits;
    }
    sent_overlap = static_cast<double>(hits) / static_cast<double>(lemma_sets.size() - 1);
  }
  out.values["adjacent_overlap_binary_all_sent"] = sent_overlap;

  // Paragraph-to-paragraph overlap: shared content-lemma types divided by
  // the second paragraph's content-lemma types.
  const auto paragraphs = split_paragraphs(raw);
  double para_overlap = 0.0;
  if (paragraphs.size() >= 2) {
    std::vector<std::unordered_set<std::string>> lemma_sets;
    lemma_sets.reserve(paragraphs.size());
    for (const auto& p : paragraphs) lemma_sets.push_back(content_lemmas(p, function_words));
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < lemma_sets.size(); ++i) {
      if (lemma_sets[i + 1].empty()) continue;
      std::size_t shared = 0;
      for (const auto& lemma : lemma_sets[i + 1])
        if (lemma_sets[i].count(lemma)) ++shared;
      sum += static_cast<double>(shared) / static_cast<double>(lemma_sets[i + 1].size());
    }
    para_overlap = sum / static_cast<double>(lemma_sets.size() - 1);
  }
  out.values["adjacent_overlap_all_para_div_seg"] = para_overlap;

  return out;
}

int FeatureTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

std::string FeatureTable::to_csv() const {
  csv::Table t;
  t.header.push_back("essay_id");
  for (const auto& n : names) t.header.push_back(n);
  t.header.push_back("score_level");
  for (std::size_t i = 0; i < essay_ids.size(); ++i) {
    csv::Row row;
    row.push_back(essay_ids[i]);
    for (const auto& col : columns) row.push_back(csv::format_double(col[i]));
    row.push_back(std::string(to_string(levels[i])));
    t.rows.push_back(std::move(row));
  }
  return csv::format(t);
}

FeatureTable FeatureTable::from_csv(const std::string& text) {
  csv::Table t = csv::parse(text);
  if (t.header.size() < 2 || t.header.front() != "essay_id" ||
      t.header.back() != "score_level")
    throw std::runtime_error("feature table must start with essay_id and end with score_level");
  FeatureTable out;
  out.names.assign(t.header.begin() + 1, t.header.end() - 1);
  out.columns.assign(out.names.size(), {});
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw std::runtime_error("feature table row width mismatch");
    out.essay_ids.push_back(row.front());
    out.levels.push_back(parse_score_level(row.back()));
    for (std::size_t j = 0; j < out.names.size(); ++j) {
      const std::string& cell = row[j + 1];
      out.columns[j].push_back(cell.empty() ? missing() : std::stod(cell));
    }
  }
  return out;
}

std::map<std::string, std::map<std::string, double>> read_external_features(
    const std::string& csv_text) {
  csv::Table t = csv::parse(csv_text);
  if (t.header.empty() || t.header.front() != "essay_id")
    throw std::runtime_error("external feature CSV must start with essay_id");
  std::map<std::string, std::map<std::string, double>> out;
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size())
      throw std::runtime_error("external feature row width mismatch");
    auto& per_essay = out[row.front()];
    for (std::size_t j = 1; j < row.size(); ++j)
      if (!row[j].empty()) per_essay[t.header[j]] = std::stod(row[j]);
  }
  return out;
}

FeatureTable merge_features(
    const std::vector<std::string>& essay_ids,
    const std::vector<ScoreLevel>& levels,
    const std::map<std::string, std::map<std::string, double>>& native,
    const std::map<std::string, std::map<std::string, double>>& external,
    const std::vector<std::string>& selection) {
  if (selection.empty()) throw std::runtime_error("empty feature selection");
  if (essay_ids.size() != levels.size())
    throw std::runtime_error("merge_features: ids/levels size mismatch");

  FeatureTable out;
  out.essay_ids = essay_ids;
  out.levels = levels;
  out.names = selection;
  out.columns.assign(selection.size(), std::vector<double>(essay_ids.size()));

  for (std::size_t j = 0; j < selection.size(); ++j) {
    const std::string& name = selection[j];
    std::vector<std::string> missing_ids;
    for (std::size_t i = 0; i < essay_ids.size(); ++i) {
      const std::string& id = essay_ids[i];
      double value = FeatureTable::missing();
      if (auto eit = external.find(id); eit != external.end()) {
        if (auto fit = eit->second.find(name); fit != eit->second.end())
          value = fit->second;
      }
      if (std::isnan(value)) {
        if (auto nit = native.find(id); nit != native.end()) {
          if (auto fit = nit->second.find(name); fit != nit->second.end())
            value = fit->second;
        }
      }
      if (std::isnan(value))
        missing_ids.push_back(id);
      else
        out.columns[j][i] = value;
    }
    if (!missing_ids.empty()) {
      std::string msg = "feature " + name + " missing for essays:";
      for (const auto& id : missing_ids) msg += " " + id;
      throw std::runtime_error(msg);
    }
  }
  return out;
}

}  // namespace lbas
