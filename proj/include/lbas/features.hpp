// features.hpp -- per-essay bundle-frequency features, native analogs of
// the baseline feature set, external feature ingestion and merging.

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lbas/bundles.hpp"
#include "lbas/corpus.hpp"

namespace lbas {

enum class Normalization { Per100Words, PerWord };

Normalization parse_normalization(std::string_view s);
std::string_view to_string(Normalization norm);

// The 24 bundle-frequency feature names, in canonical column order:
// lb{n}_nonprompt, lb{n}_prompt, lb{n}_total for n = 3..9, then
// total_prompt, total_nonprompt, total_overall.
const std::vector<std::string>& lb_feature_names();

// Names of the three aggregates that extend the baseline model.
const std::vector<std::string>& lb_aggregate_names();

struct LBFeatureSet {
  // Indexed [n - 3]; values already normalized.
  std::array<double, 7> prompt{};
  std::array<double, 7> nonprompt{};
  std::array<double, 7> total{};
  double total_prompt = 0.0;
  double total_nonprompt = 0.0;
  double total_overall = 0.0;

  // Values in canonical lb_feature_names() order.
  std::vector<double> as_row() const;
};

// Occurrence counts come from the inventory's overlap-resolved per-essay
// counts; an essay absent from the inventory gets all zeros.
LBFeatureSet compute_lb_features(const TokenizedEssay& essay,
                                 const BundleInventory& inventory,
                                 Normalization norm = Normalization::Per100Words);

// Word-list resources for the native baseline analogs; all lowercase, one
// entry per line on disk.
struct Resources {
  std::vector<std::string> lexicon;        // spelling reference
  std::vector<std::string> academic_words;
  std::vector<std::string> connectives;
  std::vector<std::string> function_words;

  static Resources load(const std::filesystem::path& dir);
};

// Table 3 feature names. The four parser-derived ones are external-only.
const std::vector<std::string>& baseline_feature_names();
const std::vector<std::string>& native_baseline_names();
const std::vector<std::string>& external_only_names();

struct BaselineFeatures {
  // name -> value for the natively computed subset.
  std::map<std::string, double> values;
  std::vector<std::string> warnings;
};

// Native analogs: misspelling and typographical error rates per 100 words,
// type-based lexical density and academic ratio, connective density, and
// the two adjacent-overlap cohesion features over repaired sentences and
// paragraphs. Parser-derived features are not computed here.
BaselineFeatures compute_native_baseline(const TokenizedEssay& essay,
                                         const Resources& resources);

// Crude suffix stripper (-s/-es/-ies/-ed/-ing) used as the overlap lemma.
std::string crude_lemma(const std::string& word);

// A named, ordered feature matrix; NaN marks a missing cell.
struct FeatureTable {
  std::vector<std::string> essay_ids;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // columns[j][i]
  std::vector<ScoreLevel> levels;

  int column(const std::string& name) const;
  static double missing() { return std::nan(""); }

  // CSV with essay_id first, feature columns in order, score_level last.
  std::string to_csv() const;
  static FeatureTable from_csv(const std::string& text);
};

// External feature CSV: header essay_id,<feature>,...; empty cell = missing.
// Returns essay_id -> (name -> value).
std::map<std::string, std::map<std::string, double>> read_external_features(
    const std::string& csv_text);

// Builds one vector per essay with exactly the selected features in order;
// external values override native on name collision. Throws when a selected
// feature is missing for any essay (listing the essay ids) or when the
// selection is empty.
FeatureTable merge_features(
    const std::vector<std::string>& essay_ids,
    const std::vector<ScoreLevel>& levels,
    const std::map<std::string, std::map<std::string, double>>& native,
    const std::map<std::string, std::map<std::string, double>>& external,
    const std::vector<std::string>& selection);

}  // namespace lbas
