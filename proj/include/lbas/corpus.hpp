// corpus.hpp -- essay loading, tokenization, punctuation repair and
// word-count-matched stratified sampling.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lbas {

enum class ScoreLevel : int { Low = 1, Medium = 2, High = 3 };

// Case-insensitive; throws on anything but low/medium/high.
ScoreLevel parse_score_level(std::string_view s);
std::string_view to_string(ScoreLevel level);

struct EssayMeta {
  std::string essay_id;
  std::string l1;
  std::string prompt_id;
  ScoreLevel score_level = ScoreLevel::Low;
};

struct TokenizedEssay {
  EssayMeta meta;
  std::vector<std::string> tokens;
  // Original file contents. Bundle counting always works on `tokens`;
  // sentence-based features repair a copy of this text first.
  std::string raw_text;

  std::size_t word_count() const { return tokens.size(); }
};

struct Corpus {
  std::vector<TokenizedEssay> essays;

  std::size_t total_words() const;
  // Index of an essay by id; -1 if absent.
  int find(std::string_view essay_id) const;
};

struct SamplingPlan {
  std::uint64_t seed = 42;
  // Absent: derived as the minimum (l1 x score_level) stratum word total.
  std::optional<std::size_t> target_words;
};

struct SampleResult {
  Corpus corpus;
  std::vector<std::string> warnings;  // e.g. a stratum no essay of which fits
};

// Splits on whitespace, strips leading/trailing non-alphanumerics from each
// raw token, lowercases ASCII letters, keeps internal apostrophes and
// hyphens, drops tokens that become empty. Bytes >= 0x80 count as word
// characters so UTF-8 content passes through unharmed.
std::vector<std::string> tokenize(std::string_view text);

// Deterministic repairs applied only upstream of sentence-based features:
//   (a) an alphanumeric paragraph-final character gets a period appended,
//   (b) runs of 2+ sentence-final marks collapse to the first mark,
//   (c) a sentence-final mark glued to a letter gains a following space.
// The token stream for bundle extraction uses the original text.
std::string normalize_punctuation(std::string_view text);

// Sentence split of repaired text at . ! ? ; a trailing fragment without a
// terminal mark is still a sentence. Whitespace-trimmed, empties dropped.
std::vector<std::string> split_sentences(std::string_view repaired);

// Paragraph split at whitespace runs containing two or more newlines.
std::vector<std::string> split_paragraphs(std::string_view text);

// Loads one TokenizedEssay per manifest row (header
// essay_id,l1,prompt_id,score_level), in manifest order. Errors on a
// missing essay file, an unknown score level or a duplicate essay id.
Corpus load_corpus(const std::filesystem::path& essay_dir,
                   const std::filesystem::path& manifest, unsigned threads = 1);

// Retains exactly the essays with word_count >= min_words, order preserved.
Corpus filter_min_words(const Corpus& corpus, std::size_t min_words = 9);

// Within each (l1, score_level) stratum: shuffle with a PRNG seeded by
// (plan.seed, l1, score_level), then scan the shuffled list adding an essay
// iff the running stratum total stays <= target. Output keeps corpus order.
SampleResult stratified_sample(const Corpus& corpus, const SamplingPlan& plan);

// Manifest-with-words CSV (essay_id,l1,prompt_id,score_level,words).
std::string corpus_manifest_csv(const Corpus& corpus);

}  // namespace lbas
