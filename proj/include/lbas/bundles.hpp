// bundles.hpp -- n-gram mining with frequency/range criteria, overlap
// resolution and prompt/non-prompt classification.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "lbas/corpus.hpp"

namespace lbas {

constexpr int kMinBundleLength = 3;
constexpr int kMaxBundleLength = 9;

enum class OverlapPolicy { None, SubsumeLongest, GreedyWithinLength };
enum class PromptType { Prompt, NonPrompt };

OverlapPolicy parse_overlap_policy(std::string_view s);
std::string_view to_string(OverlapPolicy policy);
std::string_view to_string(PromptType type);

struct LengthCriteria {
  double min_freq_per_million = 0.0;
  int min_range_files = 0;
};

struct BundleCriteria {
  std::array<LengthCriteria, kMaxBundleLength - kMinBundleLength + 1> by_length;

  // Lengths 6-9: (5, 5); length 5: (10, 5); length 4: (20, 5); length 3: (40, 5).
  static BundleCriteria defaults();

  LengthCriteria& for_length(int n) { return by_length.at(n - kMinBundleLength); }
  const LengthCriteria& for_length(int n) const { return by_length.at(n - kMinBundleLength); }
};

struct Occurrence {
  std::uint32_t essay_index = 0;  // position in the corpus essay list
  std::uint32_t start = 0;        // token index
  std::uint32_t length = 0;
};

struct LexicalBundle {
  std::vector<std::string> words;
  int length = 0;
  std::int64_t raw_count = 0;  // post-overlap-policy
  int range = 0;               // distinct essays
  double freq_per_million = 0.0;
  PromptType prompt_type = PromptType::NonPrompt;
  // essay_id -> count, sorted by essay_id; entries are nonzero.
  std::vector<std::pair<std::string, std::int64_t>> per_essay_counts;

  std::string text() const;  // words joined by single spaces
};

struct BundleInventory {
  std::vector<LexicalBundle> bundles;  // sorted by (length desc, words asc)
  std::size_t corpus_total_words = 0;  // per-million normalization base

  std::size_t n_prompt() const;
  std::size_t n_nonprompt() const;
  std::size_t n_total() const { return bundles.size(); }

  // essay_id -> list of (bundle index, count); built on construction/load.
  const std::unordered_map<std::string, std::vector<std::pair<std::uint32_t, std::int64_t>>>&
  counts_by_essay() const { return counts_by_essay_; }

  void rebuild_essay_index();

 private:
  std::unordered_map<std::string, std::vector<std::pair<std::uint32_t, std::int64_t>>>
      counts_by_essay_;
};

struct NgramStats {
  std::vector<Occurrence> occurrences;
  int range = 0;
};

// All windows of n consecutive tokens per essay; windows never cross essay
// boundaries. Keyed by the space-joined n-gram.
std::map<std::string, NgramStats> count_ngrams(const Corpus& corpus, int n);

// One bundle's occurrence list, as fed to resolve_overlaps.
struct BundleOccurrences {
  std::vector<std::string> words;
  std::vector<Occurrence> occurrences;
  bool retained = true;  // only retained bundles consume shorter spans
};

// Policy none: identity. Subsume-longest: drops an occurrence whose span is
// fully contained in an occurrence of a retained, strictly longer bundle in
// the same essay. Greedy-within-length: additionally reduces one bundle's
// overlapping occurrences in one essay by left-to-right non-overlapping
// matching.
std::vector<BundleOccurrences> resolve_overlaps(std::vector<BundleOccurrences> groups,
                                                OverlapPolicy policy);

// Distinct prompt_ids over the containing essays: one -> Prompt, two or
// more -> NonPrompt. Throws on an empty occurrence list.
PromptType classify_prompt_type(std::span<const Occurrence> occurrences,
                                const Corpus& corpus);

// Longest-first pipeline: for each length 9..3, counts occurrences not yet
// consumed by a longer retained bundle (per policy), keeps n-grams meeting
// raw_count * 1e6 / total_words >= min_freq AND range >= min_range (exact
// comparison, no pre-rounding), then marks the kept occurrences consumed.
BundleInventory identify_bundles(const Corpus& corpus, const BundleCriteria& criteria,
                                 OverlapPolicy policy = OverlapPolicy::SubsumeLongest);

// CSV: words,length,raw_count,range,freq_per_million,prompt_type.
std::string inventory_csv(const BundleInventory& inventory);
// Sparse CSV: essay_id,bundle_id,count (bundle_id = row index in inventory).
std::string inventory_counts_csv(const BundleInventory& inventory);
// total_words restores the normalization base (kept in the bundles.json
// artifact); pass 0 if unknown.
BundleInventory read_inventory(const std::string& inventory_csv_text,
                               const std::string& counts_csv_text,
                               std::size_t total_words = 0);

}  // namespace lbas
