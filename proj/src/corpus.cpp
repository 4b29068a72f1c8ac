#include "lbas/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "lbas/csv.hpp"
#include "lbas/parallel.hpp"
#include "lbas/rng.hpp"

namespace lbas {

namespace {

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_char(unsigned char c) {
  // UTF-8 continuation/lead bytes count as word characters.
  return std::isalnum(c) != 0 || c >= 0x80;
}

bool is_letter(unsigned char c) { return std::isalpha(c) != 0 || c >= 0x80; }

bool is_final_mark(char c) { return c == '.' || c == '!' || c == '?'; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

ScoreLevel parse_score_level(std::string_view s) {
  std::string t = ascii_lower(s);
  if (t == "low") return ScoreLevel::Low;
  if (t == "medium") return ScoreLevel::Medium;
  if (t == "high") return ScoreLevel::High;
  throw std::runtime_error("unknown score_level \"" + std::string(s) + "\"");
}

std::string_view to_string(ScoreLevel level) {
  switch (level) {
    case ScoreLevel::Low: return "Low";
    case ScoreLevel::Medium: return "Medium";
    case ScoreLevel::High: return "High";
  }
  return "?";
}

std::size_t Corpus::total_words() const {
  std::size_t total = 0;
  for (const auto& e : essays) total += e.word_count();
  return total;
}

int Corpus::find(std::string_view essay_id) const {
  for (std::size_t i = 0; i < essays.size(); ++i)
    if (essays[i].meta.essay_id == essay_id) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < n && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) break;
    std::string_view raw = text.substr(start, i - start);
    std::size_t b = 0, e = raw.size();
    while (b < e && !is_word_char(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && !is_word_char(static_cast<unsigned char>(raw[e - 1]))) --e;
    if (e > b) tokens.push_back(ascii_lower(raw.substr(b, e - b)));
  }
  return tokens;
}

std::string normalize_punctuation(std::string_view text) {
  // (b) collapse runs of sentence-final marks, (c) re-space mark+letter.
  std::string pass1;
  pass1.reserve(text.size() + 16);
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    pass1 += c;
    if (is_final_mark(c)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_final_mark(text[j])) ++j;
      i = j - 1;
      if (j < text.size() && is_letter(static_cast<unsigned char>(text[j])))
        pass1 += ' ';
    }
  }

  // (a) period before a paragraph separator when the paragraph ends on an
  // alphanumeric character. End of text is not a paragraph separator.
  std::string out;
  out.reserve(pass1.size() + 16);
  std::size_t i = 0;
  while (i < pass1.size()) {
    unsigned char c = static_cast<unsigned char>(pass1[i]);
    if (is_space(c)) {
      std::size_t j = i;
      int newlines = 0;
      while (j < pass1.size() && is_space(static_cast<unsigned char>(pass1[j]))) {
        if (pass1[j] == '\n') ++newlines;
        ++j;
      }
      if (newlines >= 2 && j < pass1.size() && !out.empty() &&
          is_word_char(static_cast<unsigned char>(out.back())))
        out += '.';
      out.append(pass1, i, j - i);
      i = j;
    } else {
      out += pass1[i];
      ++i;
    }
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view repaired) {
  std::vector<std::string> sentences;
  std::string current;
  for (char c : repaired) {
    current += c;
    if (is_final_mark(c)) {
      std::string s = trim(current);
      if (!s.empty()) sentences.push_back(std::move(s));
      current.clear();
    }
  }
  std::string tail = trim(current);
  if (!tail.empty()) sentences.push_back(std::move(tail));
  return sentences;
}

std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> paragraphs;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_space(c)) {
      std::size_t j = i;
      int newlines = 0;
      while (j < text.size() && is_space(static_cast<unsigned char>(text[j]))) {
        if (text[j] == '\n') ++newlines;
        ++j;
      }
      if (newlines >= 2) {
        std::string p = trim(current);
        if (!p.empty()) paragraphs.push_back(std::move(p));
        current.clear();
      } else {
        current += ' ';
      }
      i = j;
    } else {
      current += text[i];
      ++i;
    }
  }
  std::string tail = trim(current);
  if (!tail.empty()) paragraphs.push_back(std::move(tail));
  return paragraphs;
}

Corpus load_corpus(const std::filesystem::path& essay_dir,
                   const std::filesystem::path& manifest, unsigned threads) {
  csv::Table table = csv::read_file(manifest);
  const csv::Row expected = {"essay_id", "l1", "prompt_id", "score_level"};
  const csv::Row expected_with_words = {"essay_id", "l1", "prompt_id", "score_level",
                                        "words"};
  // Stage outputs append a words column; it is ignored on load.
  if (table.header != expected && table.header != expected_with_words)
    throw std::runtime_error("manifest header must be essay_id,l1,prompt_id,score_level");
  const std::size_t n_fields = table.header.size();

  // Validate serially in manifest order so error reporting is stable.
  std::vector<EssayMeta> metas;
  std::vector<std::filesystem::path> paths;
  std::unordered_set<std::string> seen;
  metas.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (row.size() != n_fields)
      throw std::runtime_error("manifest row with " + std::to_string(row.size()) +
                               " fields (want " + std::to_string(n_fields) + ")");
    EssayMeta meta;
    meta.essay_id = row[0];
    meta.l1 = row[1];
    meta.prompt_id = row[2];
    meta.score_level = parse_score_level(row[3]);
    if (!seen.insert(meta.essay_id).second)
      throw std::runtime_error("duplicate essay_id " + meta.essay_id);
    std::filesystem::path p = essay_dir / (meta.essay_id + ".txt");
    if (!std::filesystem::exists(p))
      throw std::runtime_error("missing essay file " + meta.essay_id);
    metas.push_back(std::move(meta));
    paths.push_back(std::move(p));
  }

  Corpus corpus;
  corpus.essays.resize(metas.size());
  parallel_for(metas.size(), threads, [&](std::size_t i) {
    std::ifstream in(paths[i], std::ios::binary);
    if (!in) throw std::runtime_error("cannot read essay file " + metas[i].essay_id);
    std::ostringstream ss;
    ss << in.rdbuf();
    TokenizedEssay essay;
    essay.meta = metas[i];
    essay.raw_text = ss.str();
    essay.tokens = tokenize(essay.raw_text);
    corpus.essays[i] = std::move(essay);
  });
  return corpus;
}

Corpus filter_min_words(const Corpus& corpus, std::size_t min_words) {
  Corpus out;
  for (const auto& e : corpus.essays)
    if (e.word_count() >= min_words) out.essays.push_back(e);
  return out;
}

SampleResult stratified_sample(const Corpus& corpus, const SamplingPlan& plan) {
  // Strata keyed by (l1, score_level), essay order preserved inside.
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < corpus.essays.size(); ++i) {
    const auto& m = corpus.essays[i].meta;
    strata[{m.l1, static_cast<int>(m.score_level)}].push_back(i);
  }

  std::size_t target;
  if (plan.target_words) {
    target = *plan.target_words;
  } else {
    target = std::numeric_limits<std::size_t>::max();
    for (const auto& [key, indices] : strata) {
      std::size_t total = 0;
      for (std::size_t i : indices) total += corpus.essays[i].word_count();
      target = std::min(target, total);
    }
    if (strata.empty()) target = 0;
  }

  SampleResult result;
  std::vector<char> selected(corpus.essays.size(), 0);
  for (const auto& [key, indices] : strata) {
    std::string stratum_key =
        key.first + "\x1f" + std::string(to_string(static_cast<ScoreLevel>(key.second)));
    Rng rng(layer_seed(plan.seed, stratum_key));
    std::vector<std::size_t> order = indices;
    shuffle(order, rng);
    std::size_t cumulative = 0;
    std::size_t taken = 0;
    for (std::size_t i : order) {
      std::size_t wc = corpus.essays[i].word_count();
      if (cumulative + wc <= target) {
        cumulative += wc;
        selected[i] = 1;
        ++taken;
      }
    }
    if (taken == 0 && !indices.empty())
      result.warnings.push_back(
          "stratum " + key.first + "/" +
          std::string(to_string(static_cast<ScoreLevel>(key.second))) +
          ": no essay fits target " + std::to_string(target) + "; emitted empty");
  }
  for (std::size_t i = 0; i < corpus.essays.size(); ++i)
    if (selected[i]) result.corpus.essays.push_back(corpus.essays[i]);
  return result;
}

std::string corpus_manifest_csv(const Corpus& corpus) {
  csv::Table t;
  t.header = {"essay_id", "l1", "prompt_id", "score_level", "words"};
  for (const auto& e : corpus.essays)
    t.rows.push_back({e.meta.essay_id, e.meta.l1, e.meta.prompt_id,
                      std::string(to_string(e.meta.score_level)),
                      std::to_string(e.word_count())});
  return csv::format(t);
}

}  // namespace lbas
