// helpers.hpp -- corpus builders shared by the test suites.

#pragma once

#include <string>
#include <vector>

#include "lbas/bundles.hpp"
#include "lbas/corpus.hpp"

namespace lbas::testing {

inline TokenizedEssay make_essay(std::string id, std::string text,
                                 std::string l1 = "ARA", std::string prompt = "P1",
                                 ScoreLevel level = ScoreLevel::Low) {
  TokenizedEssay essay;
  essay.meta = {std::move(id), std::move(l1), std::move(prompt), level};
  essay.raw_text = text;
  essay.tokens = tokenize(text);
  return essay;
}

inline Corpus make_corpus(std::vector<TokenizedEssay> essays) {
  Corpus corpus;
  corpus.essays = std::move(essays);
  return corpus;
}

// One flat criteria value across all lengths, for fixtures.
inline BundleCriteria flat_criteria(double freq_per_million, int range) {
  BundleCriteria criteria;
  for (int n = kMinBundleLength; n <= kMaxBundleLength; ++n)
    criteria.for_length(n) = {freq_per_million, range};
  return criteria;
}

// Essay text of `n` globally unique filler tokens (never forms a repeated
// n-gram), sequence number keeps ids distinct across essays.
inline std::string filler_text(int n, int& counter) {
  std::string text;
  for (int i = 0; i < n; ++i) {
    text += "filler" + std::to_string(counter++);
    text += ' ';
  }
  return text;
}

}  // namespace lbas::testing
