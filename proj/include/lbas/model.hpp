// model.hpp -- scoring-model harness: feature standardization, linear SVM
// (one-vs-rest, hinge loss), stratified k-fold CV, rater-agreement metrics
// and the baseline-vs-extended comparison.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbas/corpus.hpp"
#include "lbas/features.hpp"

namespace lbas {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
};

// Per-feature centering/scaling fit on training folds only. The provenance
// string is recorded so a train+test refit is visible in reports.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation; 1 for zero-variance features
  std::string fit_provenance;
  std::size_t fit_rows = 0;

  void fit(const Matrix& x, std::string provenance);
  Matrix transform(const Matrix& x) const;
};

struct SVMConfig {
  double C = 1.0;
  double tolerance = 1e-4;
  int max_epochs = 1000;
  std::uint64_t seed = 42;
};

// One-vs-rest linear classifiers minimizing (1/(2C))||w||^2 + mean hinge,
// trained by dual coordinate descent with the bias folded in as a
// regularized constant feature. The mean-loss form makes the optimum
// invariant to duplicating every training row.
struct LinearSVMModel {
  std::vector<std::vector<double>> weights;  // per class, size = n_features
  std::vector<double> bias;                  // per class
  SVMConfig config;
  int n_classes = 0;

  std::vector<double> decision_values(std::span<const double> x) const;
  // argmax of decision values; exact ties break toward the lower class.
  int predict(std::span<const double> x) const;
};

// y holds class indices 0..k-1; throws if fewer than 2 classes appear.
// n_classes forces the output width when a fold may miss the top class;
// 0 derives it from y.
LinearSVMModel train_svm(const Matrix& x, const std::vector<int>& y,
                         const SVMConfig& config, int n_classes = 0);

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> fold_of;  // essay_id -> fold
};

// Within each (l1, score_level) stratum: seeded shuffle, then round-robin
// over folds, so per-stratum fold sizes differ by at most one.
FoldAssignment stratified_kfold(std::span<const EssayMeta> metadata, int k,
                                std::uint64_t seed);

struct Confusion {
  std::size_t k = 0;
  std::vector<std::int64_t> cells;  // row-major, rows = human, cols = predicted

  Confusion() = default;
  explicit Confusion(std::size_t classes) : k(classes), cells(classes * classes, 0) {}
  std::int64_t& at(std::size_t human, std::size_t predicted) {
    return cells[human * k + predicted];
  }
  std::int64_t at(std::size_t human, std::size_t predicted) const {
    return cells[human * k + predicted];
  }
  std::int64_t total() const;
  void add(const Confusion& other);
};

double exact_agreement(const Confusion& confusion);
// nullopt when chance agreement is 1 (both marginals in one same class).
std::optional<double> cohens_kappa(const Confusion& confusion);
// Quadratic weights w_ij = (i-j)^2/(k-1)^2; equals Cohen's kappa for k = 2.
std::optional<double> quadratic_weighted_kappa(const Confusion& confusion);

struct LevelMetrics {
  std::optional<double> exact_agreement;  // recall of the level
  std::optional<double> kappa;            // one-vs-rest binarized Cohen's kappa
};

struct EvalReport {
  Confusion confusion;
  double exact = 0.0;
  std::optional<double> kappa;
  std::optional<double> qwk;
  std::vector<LevelMetrics> per_level;
};

EvalReport evaluate_confusion(const Confusion& confusion);

// Predicts x_test (already standardized) and scores against y_test.
EvalReport evaluate(const LinearSVMModel& model, const Matrix& x_test,
                    const std::vector<int>& y_test);

struct CVConfig {
  int k = 3;
  std::uint64_t seed = 42;
  unsigned threads = 1;
};

struct FoldProvenance {
  int fold = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::string standardizer_fit;  // audit: must be the train-only tag
};

struct ModelRun {
  EvalReport report;          // metrics of the fold-pooled confusion
  std::vector<FoldProvenance> folds;
  std::vector<std::string> features;
};

struct ComparisonReport {
  ModelRun baseline;
  ModelRun extended;
  std::size_t n_essays = 0;
  int k_folds = 0;
  std::uint64_t cv_seed = 0;
  SVMConfig svm;
};

double percent_change(double baseline, double extended);

// Runs identical folds for the baseline and extended feature selections,
// pooling confusion matrices across folds. Metadata supplies the (l1,
// score_level) strata; the table supplies features and labels.
ComparisonReport run_experiment(const FeatureTable& table,
                                std::span<const EssayMeta> metadata,
                                const std::vector<std::string>& baseline_selection,
                                const std::vector<std::string>& extended_selection,
                                const CVConfig& cv, const SVMConfig& svm);

}  // namespace lbas
