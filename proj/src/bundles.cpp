#include "lbas/bundles.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lbas/csv.hpp"
#include "lbas/rng.hpp"

namespace lbas {

namespace {

// n-gram key referencing interned token ids in stable storage.
struct NgramKey {
  const std::uint32_t* tokens = nullptr;
  std::uint32_t n = 0;

  bool operator==(const NgramKey& other) const {
    return n == other.n &&
           std::memcmp(tokens, other.tokens, n * sizeof(std::uint32_t)) == 0;
  }
};

struct NgramKeyHash {
  std::size_t operator()(const NgramKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint32_t i = 0; i < k.n; ++i) {
      h ^= k.tokens[i];
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

// Spans already consumed by longer retained bundles, one set per essay.
// Containment of [s, e) in some single span is answered via starts sorted
// ascending with a running prefix max of ends.
class ConsumedSpans {
 public:
  void add(std::uint32_t start, std::uint32_t end) {
    spans_.emplace_back(start, end);
    dirty_ = true;
  }

  bool contains(std::uint32_t start, std::uint32_t end) const {
    if (dirty_) {
      std::sort(spans_.begin(), spans_.end());
      prefix_max_end_.resize(spans_.size());
      std::uint32_t best = 0;
      for (std::size_t i = 0; i < spans_.size(); ++i) {
        best = std::max(best, spans_[i].second);
        prefix_max_end_[i] = best;
      }
      dirty_ = false;
    }
    if (spans_.empty()) return false;
    // Last span with span.start <= start.
    auto it = std::upper_bound(spans_.begin(), spans_.end(),
                               std::make_pair(start, std::numeric_limits<std::uint32_t>::max()));
    if (it == spans_.begin()) return false;
    std::size_t idx = static_cast<std::size_t>(it - spans_.begin()) - 1;
    return prefix_max_end_[idx] >= end;
  }

 private:
  mutable std::vector<std::pair<std::uint32_t, std::uint32_t>> spans_;
  mutable std::vector<std::uint32_t> prefix_max_end_;
  mutable bool dirty_ = false;
};

// Meets-threshold test, exact: raw * 1e6 / total >= min_freq without
// pre-rounding (both sides integer-exact for integer criteria).
bool meets_frequency(std::int64_t raw_count, std::size_t total_words, double min_freq) {
  return static_cast<double>(raw_count) * 1e6 >=
         min_freq * static_cast<double>(total_words);
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

OverlapPolicy parse_overlap_policy(std::string_view s) {
  if (s == "none") return OverlapPolicy::None;
  if (s == "subsume-longest") return OverlapPolicy::SubsumeLongest;
  if (s == "greedy-within-length") return OverlapPolicy::GreedyWithinLength;
  throw std::runtime_error("unknown overlap policy \"" + std::string(s) + "\"");
}

std::string_view to_string(OverlapPolicy policy) {
  switch (policy) {
    case OverlapPolicy::None: return "none";
    case OverlapPolicy::SubsumeLongest: return "subsume-longest";
    case OverlapPolicy::GreedyWithinLength: return "greedy-within-length";
  }
  return "?";
}

std::string_view to_string(PromptType type) {
  return type == PromptType::Prompt ? "Prompt" : "NonPrompt";
}

BundleCriteria BundleCriteria::defaults() {
  BundleCriteria c;
  c.for_length(3) = {40.0, 5};
  c.for_length(4) = {20.0, 5};
  c.for_length(5) = {10.0, 5};
  for (int n = 6; n <= 9; ++n) c.for_length(n) = {5.0, 5};
  return c;
}

std::string LexicalBundle::text() const { return join_words(words); }

std::size_t BundleInventory::n_prompt() const {
  std::size_t n = 0;
  for (const auto& b : bundles)
    if (b.prompt_type == PromptType::Prompt) ++n;
  return n;
}

std::size_t BundleInventory::n_nonprompt() const { return bundles.size() - n_prompt(); }

void BundleInventory::rebuild_essay_index() {
  counts_by_essay_.clear();
  for (std::uint32_t bi = 0; bi < bundles.size(); ++bi)
    for (const auto& [essay_id, count] : bundles[bi].per_essay_counts)
      counts_by_essay_[essay_id].emplace_back(bi, count);
}

std::map<std::string, NgramStats> count_ngrams(const Corpus& corpus, int n) {
  if (n < kMinBundleLength || n > kMaxBundleLength)
    throw std::runtime_error("n-gram length out of range [3,9]");
  std::map<std::string, NgramStats> out;
  for (std::uint32_t ei = 0; ei < corpus.essays.size(); ++ei) {
    const auto& tokens = corpus.essays[ei].tokens;
    if (tokens.size() < static_cast<std::size_t>(n)) continue;
    for (std::uint32_t start = 0; start + n <= tokens.size(); ++start) {
      std::string key;
      for (int j = 0; j < n; ++j) {
        if (j) key += ' ';
        key += tokens[start + j];
      }
      auto& stats = out[key];
      if (stats.occurrences.empty() || stats.occurrences.back().essay_index != ei)
        ++stats.range;
      stats.occurrences.push_back({ei, start, static_cast<std::uint32_t>(n)});
    }
  }
  return out;
}

std::vector<BundleOccurrences> resolve_overlaps(std::vector<BundleOccurrences> groups,
                                                OverlapPolicy policy) {
  if (policy == OverlapPolicy::None) return groups;

  // Spans of retained bundle occurrences, bucketed per essay and length.
  std::unordered_map<std::uint32_t, std::vector<std::pair<Occurrence, std::uint32_t>>> spans;
  for (const auto& g : groups) {
    if (!g.retained) continue;
    for (const auto& occ : g.occurrences)
      spans[occ.essay_index].emplace_back(occ, occ.length);
  }

  for (auto& g : groups) {
    std::vector<Occurrence> kept;
    kept.reserve(g.occurrences.size());
    std::uint32_t my_len = static_cast<std::uint32_t>(g.words.size());
    for (const auto& occ : g.occurrences) {
      bool subsumed = false;
      auto it = spans.find(occ.essay_index);
      if (it != spans.end()) {
        for (const auto& [other, other_len] : it->second) {
          if (other_len > my_len && other.start <= occ.start &&
              other.start + other_len >= occ.start + occ.length) {
            subsumed = true;
            break;
          }
        }
      }
      if (!subsumed) kept.push_back(occ);
    }
    g.occurrences = std::move(kept);
  }

  if (policy == OverlapPolicy::GreedyWithinLength) {
    for (auto& g : groups) {
      std::sort(g.occurrences.begin(), g.occurrences.end(),
                [](const Occurrence& a, const Occurrence& b) {
                  return a.essay_index != b.essay_index ? a.essay_index < b.essay_index
                                                        : a.start < b.start;
                });
      std::vector<Occurrence> kept;
      std::uint32_t last_essay = std::numeric_limits<std::uint32_t>::max();
      std::uint32_t last_end = 0;
      for (const auto& occ : g.occurrences) {
        if (occ.essay_index != last_essay || occ.start >= last_end) {
          kept.push_back(occ);
          last_essay = occ.essay_index;
          last_end = occ.start + occ.length;
        }
      }
      g.occurrences = std::move(kept);
    }
  }
  return groups;
}

PromptType classify_prompt_type(std::span<const Occurrence> occurrences,
                                const Corpus& corpus) {
  if (occurrences.empty())
    throw std::runtime_error("cannot classify a bundle with zero occurrences");
  const std::string* first = nullptr;
  for (const auto& occ : occurrences) {
    const std::string& prompt = corpus.essays.at(occ.essay_index).meta.prompt_id;
    if (!first)
      first = &prompt;
    else if (*first != prompt)
      return PromptType::NonPrompt;
  }
  return PromptType::Prompt;
}

BundleInventory identify_bundles(const Corpus& corpus, const BundleCriteria& criteria,
                                 OverlapPolicy policy) {
  const std::size_t total_words = corpus.total_words();
  if (total_words == 0) throw std::runtime_error("empty corpus");

  // Intern tokens so window keys are id spans into stable per-essay arrays.
  std::unordered_map<std::string_view, std::uint32_t> intern;
  std::vector<std::vector<std::uint32_t>> ids(corpus.essays.size());
  for (std::size_t ei = 0; ei < corpus.essays.size(); ++ei) {
    const auto& tokens = corpus.essays[ei].tokens;
    ids[ei].reserve(tokens.size());
    for (const auto& tok : tokens) {
      auto [it, inserted] =
          intern.emplace(tok, static_cast<std::uint32_t>(intern.size()));
      ids[ei].push_back(it->second);
    }
  }

  std::vector<ConsumedSpans> consumed(corpus.essays.size());

  struct Candidate {
    std::int64_t count = 0;
    int range = 0;
    std::int64_t last_essay = -1;
    std::uint32_t last_kept_end = 0;  // greedy state, valid for last_essay
  };

  struct Retained {
    std::vector<std::uint32_t> token_ids;
    std::int64_t raw_count = 0;
    int range = 0;
    std::vector<Occurrence> occurrences;
    std::vector<std::int64_t> per_essay;  // dense by essay index, built in pass B
  };

  std::vector<Retained> all_retained;
  std::vector<int> retained_length;  // parallel to all_retained

  for (int n = kMaxBundleLength; n >= kMinBundleLength; --n) {
    const auto& crit = criteria.for_length(n);
    const std::uint32_t un = static_cast<std::uint32_t>(n);

    // Pass A: count eligible windows.
    std::unordered_map<NgramKey, Candidate, NgramKeyHash> counts;
    for (std::uint32_t ei = 0; ei < ids.size(); ++ei) {
      const auto& essay_ids = ids[ei];
      if (essay_ids.size() < un) continue;
      for (std::uint32_t start = 0; start + un <= essay_ids.size(); ++start) {
        if (policy != OverlapPolicy::None &&
            consumed[ei].contains(start, start + un))
          continue;
        NgramKey key{essay_ids.data() + start, un};
        Candidate& cand = counts[key];
        if (policy == OverlapPolicy::GreedyWithinLength &&
            cand.last_essay == static_cast<std::int64_t>(ei) &&
            start < cand.last_kept_end)
          continue;  // overlaps the previous kept occurrence of this n-gram
        ++cand.count;
        if (cand.last_essay != static_cast<std::int64_t>(ei)) {
          ++cand.range;
          cand.last_essay = static_cast<std::int64_t>(ei);
        }
        cand.last_kept_end = start + un;
      }
    }

    // Threshold: exact comparison of the normalized value.
    std::unordered_map<NgramKey, std::uint32_t, NgramKeyHash> retained_lookup;
    std::vector<Retained> retained_here;
    for (const auto& [key, cand] : counts) {
      if (cand.range >= crit.min_range_files &&
          meets_frequency(cand.count, total_words, crit.min_freq_per_million)) {
        Retained r;
        r.token_ids.assign(key.tokens, key.tokens + key.n);
        r.raw_count = cand.count;
        r.range = cand.range;
        retained_here.push_back(std::move(r));
      }
    }
    // Deterministic order regardless of hash-map iteration.
    std::sort(retained_here.begin(), retained_here.end(),
              [](const Retained& a, const Retained& b) { return a.token_ids < b.token_ids; });
    retained_lookup.reserve(retained_here.size());
    for (std::uint32_t ri = 0; ri < retained_here.size(); ++ri)
      retained_lookup.emplace(
          NgramKey{retained_here[ri].token_ids.data(), un}, ri);

    if (!retained_here.empty()) {
      // Pass B: re-scan to collect occurrences of retained n-grams,
      // replaying the same skip logic as pass A.
      std::vector<std::uint32_t> greedy_end(retained_here.size(), 0);
      std::vector<std::int64_t> greedy_essay(retained_here.size(), -1);
      for (auto& r : retained_here) r.per_essay.assign(ids.size(), 0);

      for (std::uint32_t ei = 0; ei < ids.size(); ++ei) {
        const auto& essay_ids = ids[ei];
        if (essay_ids.size() < un) continue;
        for (std::uint32_t start = 0; start + un <= essay_ids.size(); ++start) {
          if (policy != OverlapPolicy::None &&
              consumed[ei].contains(start, start + un))
            continue;
          auto it = retained_lookup.find(NgramKey{essay_ids.data() + start, un});
          if (it == retained_lookup.end()) continue;
          std::uint32_t ri = it->second;
          if (policy == OverlapPolicy::GreedyWithinLength &&
              greedy_essay[ri] == static_cast<std::int64_t>(ei) &&
              start < greedy_end[ri])
            continue;
          greedy_essay[ri] = static_cast<std::int64_t>(ei);
          greedy_end[ri] = start + un;
          retained_here[ri].occurrences.push_back({ei, start, un});
          ++retained_here[ri].per_essay[ei];
        }
      }
      // Kept occurrences consume their spans for shorter lengths.
      if (policy != OverlapPolicy::None)
        for (const auto& r : retained_here)
          for (const auto& occ : r.occurrences)
            consumed[occ.essay_index].add(occ.start, occ.start + occ.length);

      for (auto& r : retained_here) {
        all_retained.push_back(std::move(r));
        retained_length.push_back(n);
      }
    }
  }

  // Reverse interning for output words.
  std::vector<std::string_view> token_names(intern.size());
  for (const auto& [tok, id] : intern) token_names[id] = tok;

  BundleInventory inventory;
  inventory.corpus_total_words = total_words;
  inventory.bundles.reserve(all_retained.size());
  for (std::size_t i = 0; i < all_retained.size(); ++i) {
    const Retained& r = all_retained[i];
    LexicalBundle b;
    b.length = retained_length[i];
    b.words.reserve(r.token_ids.size());
    for (std::uint32_t id : r.token_ids) b.words.emplace_back(token_names[id]);
    b.raw_count = r.raw_count;
    b.range = r.range;
    b.freq_per_million =
        static_cast<double>(r.raw_count) * 1e6 / static_cast<double>(total_words);
    b.prompt_type = classify_prompt_type(r.occurrences, corpus);
    for (std::size_t ei = 0; ei < r.per_essay.size(); ++ei)
      if (r.per_essay[ei] > 0)
        b.per_essay_counts.emplace_back(corpus.essays[ei].meta.essay_id,
                                        r.per_essay[ei]);
    std::sort(b.per_essay_counts.begin(), b.per_essay_counts.end());
    inventory.bundles.push_back(std::move(b));
  }
  std::sort(inventory.bundles.begin(), inventory.bundles.end(),
            [](const LexicalBundle& a, const LexicalBundle& b) {
              if (a.length != b.length) return a.length > b.length;
              return a.words < b.words;
            });
  inventory.rebuild_essay_index();
  return inventory;
}

std::string inventory_csv(const BundleInventory& inventory) {
  csv::Table t;
  t.header = {"words", "length", "raw_count", "range", "freq_per_million", "prompt_type"};
  for (const auto& b : inventory.bundles)
    t.rows.push_back({b.text(), std::to_string(b.length), std::to_string(b.raw_count),
                      std::to_string(b.range), csv::format_double(b.freq_per_million),
                      std::string(to_string(b.prompt_type))});
  return csv::format(t);
}

std::string inventory_counts_csv(const BundleInventory& inventory) {
  csv::Table t;
  t.header = {"essay_id", "bundle_id", "count"};
  for (std::uint32_t bi = 0; bi < inventory.bundles.size(); ++bi)
    for (const auto& [essay_id, count] : inventory.bundles[bi].per_essay_counts)
      t.rows.push_back({essay_id, std::to_string(bi), std::to_string(count)});
  return csv::format(t);
}

BundleInventory read_inventory(const std::string& inventory_csv_text,
                               const std::string& counts_csv_text,
                               std::size_t total_words) {
  csv::Table inv = csv::parse(inventory_csv_text);
  const csv::Row expected = {"words", "length", "raw_count",
                             "range", "freq_per_million", "prompt_type"};
  if (inv.header != expected)
    throw std::runtime_error("bad inventory header");
  BundleInventory inventory;
  inventory.corpus_total_words = total_words;
  for (const auto& row : inv.rows) {
    LexicalBundle b;
    std::istringstream words(row[0]);
    std::string w;
    while (words >> w) b.words.push_back(w);
    b.length = std::stoi(row[1]);
    b.raw_count = std::stoll(row[2]);
    b.range = std::stoi(row[3]);
    b.freq_per_million = std::stod(row[4]);
    if (row[5] == "Prompt")
      b.prompt_type = PromptType::Prompt;
    else if (row[5] == "NonPrompt")
      b.prompt_type = PromptType::NonPrompt;
    else
      throw std::runtime_error("bad prompt_type " + row[5]);
    inventory.bundles.push_back(std::move(b));
  }

  csv::Table counts = csv::parse(counts_csv_text);
  const csv::Row expected_counts = {"essay_id", "bundle_id", "count"};
  if (counts.header != expected_counts)
    throw std::runtime_error("bad bundle counts header");
  for (const auto& row : counts.rows) {
    std::size_t bi = static_cast<std::size_t>(std::stoul(row[1]));
    if (bi >= inventory.bundles.size())
      throw std::runtime_error("bundle_id out of range: " + row[1]);
    inventory.bundles[bi].per_essay_counts.emplace_back(row[0], std::stoll(row[2]));
  }
  for (auto& b : inventory.bundles)
    std::sort(b.per_essay_counts.begin(), b.per_essay_counts.end());
  inventory.rebuild_essay_index();
  return inventory;
}

}  // namespace lbas
