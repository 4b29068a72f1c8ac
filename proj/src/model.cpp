#include "lbas/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "lbas/parallel.hpp"
#include "lbas/rng.hpp"

namespace lbas {

void Standardizer::fit(const Matrix& x, std::string provenance) {
  if (x.rows == 0) throw std::runtime_error("standardizer: empty fit matrix");
  mean.assign(x.cols, 0.0);
  scale.assign(x.cols, 1.0);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) mean[j] += x.at(i, j);
  for (double& m : mean) m /= static_cast<double>(x.rows);
  std::vector<double> ss(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double d = x.at(i, j) - mean[j];
      ss[j] += d * d;
    }
  for (std::size_t j = 0; j < x.cols; ++j) {
    const double sd = std::sqrt(ss[j] / static_cast<double>(x.rows));
    scale[j] = sd > 0.0 ? sd : 1.0;  // zero variance passes through centered
  }
  fit_provenance = std::move(provenance);
  fit_rows = x.rows;
}

Matrix Standardizer::transform(const Matrix& x) const {
  if (x.cols != mean.size())
    throw std::runtime_error("standardizer: dimension mismatch");
  Matrix out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j)
      out.at(i, j) = (x.at(i, j) - mean[j]) / scale[j];
  return out;
}

std::vector<double> LinearSVMModel::decision_values(std::span<const double> x) const {
  std::vector<double> values(weights.size());
  for (std::size_t c = 0; c < weights.size(); ++c) {
    if (x.size() != weights[c].size())
      throw std::runtime_error("svm: feature dimension mismatch");
    double v = bias[c];
    for (std::size_t j = 0; j < x.size(); ++j) v += weights[c][j] * x[j];
    values[c] = v;
  }
  return values;
}

int LinearSVMModel::predict(std::span<const double> x) const {
  const std::vector<double> values = decision_values(x);
  int best = 0;
  for (int c = 1; c < static_cast<int>(values.size()); ++c)
    if (values[c] > values[best]) best = c;  // strict: ties keep lower class
  return best;
}

namespace {

// Dual coordinate descent for the binary L1-hinge subproblem
// (Hsieh et al. 2008), bias handled as an extra all-ones feature. The box
// constraint is C/n, matching the mean-loss primal.
void train_binary(const Matrix& x, const std::vector<int>& signs, const SVMConfig& config,
                  std::uint64_t seed, std::vector<double>& w_out, double& b_out) {
  const std::size_t n = x.rows;
  const std::size_t dim = x.cols + 1;  // + bias feature
  const double box = config.C / static_cast<double>(n);

  std::vector<double> alpha(n, 0.0);
  std::vector<double> w(dim, 0.0);
  std::vector<double> q_diag(n);
  for (std::size_t i = 0; i < n; ++i) {
    double q = 1.0;  // bias feature
    for (std::size_t j = 0; j < x.cols; ++j) q += x.at(i, j) * x.at(i, j);
    q_diag[i] = q;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    shuffle(order, rng);
    double max_violation = 0.0;
    for (std::size_t idx : order) {
      const double y = static_cast<double>(signs[idx]);
      double wx = w[x.cols];  // bias feature contribution
      for (std::size_t j = 0; j < x.cols; ++j) wx += w[j] * x.at(idx, j);
      const double gradient = y * wx - 1.0;

      double projected = gradient;
      if (alpha[idx] <= 0.0)
        projected = std::min(gradient, 0.0);
      else if (alpha[idx] >= box)
        projected = std::max(gradient, 0.0);
      max_violation = std::max(max_violation, std::fabs(projected));
      if (projected == 0.0) continue;

      const double updated =
          std::clamp(alpha[idx] - gradient / q_diag[idx], 0.0, box);
      const double delta = updated - alpha[idx];
      if (delta == 0.0) continue;
      alpha[idx] = updated;
      for (std::size_t j = 0; j < x.cols; ++j) w[j] += delta * y * x.at(idx, j);
      w[x.cols] += delta * y;
    }
    if (max_violation < config.tolerance) break;
  }

  w_out.assign(w.begin(), w.begin() + x.cols);
  b_out = w[x.cols];
}

}  // namespace

LinearSVMModel train_svm(const Matrix& x, const std::vector<int>& y,
                         const SVMConfig& config, int n_classes) {
  if (x.rows != y.size()) throw std::runtime_error("svm: X/y size mismatch");
  if (x.rows == 0) throw std::runtime_error("svm: empty training set");
  std::set<int> classes(y.begin(), y.end());
  if (classes.size() < 2)
    throw std::runtime_error("svm: single-class training fold");
  n_classes = std::max(n_classes, *classes.rbegin() + 1);

  LinearSVMModel model;
  model.config = config;
  model.n_classes = n_classes;
  model.weights.assign(n_classes, {});
  model.bias.assign(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    std::vector<int> signs(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) signs[i] = y[i] == c ? 1 : -1;
    train_binary(x, signs, config,
                 layer_seed(config.seed, "ovr-class-" + std::to_string(c)),
                 model.weights[c], model.bias[c]);
  }
  return model;
}

FoldAssignment stratified_kfold(std::span<const EssayMeta> metadata, int k,
                                std::uint64_t seed) {
  if (k < 2) throw std::runtime_error("stratified_kfold: k must be >= 2");
  FoldAssignment assignment;
  assignment.k = k;
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < metadata.size(); ++i)
    strata[{metadata[i].l1, static_cast<int>(metadata[i].score_level)}].push_back(i);
  for (const auto& [key, indices] : strata) {
    std::string stratum_key =
        key.first + "\x1f" + std::string(to_string(static_cast<ScoreLevel>(key.second)));
    Rng rng(layer_seed(seed, "kfold\x1f" + stratum_key));
    std::vector<std::size_t> order = indices;
    shuffle(order, rng);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
      assignment.fold_of[metadata[order[pos]].essay_id] =
          static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return assignment;
}

std::int64_t Confusion::total() const {
  std::int64_t t = 0;
  for (std::int64_t c : cells) t += c;
  return t;
}

void Confusion::add(const Confusion& other) {
  if (k != other.k) throw std::runtime_error("confusion: size mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += other.cells[i];
}

double exact_agreement(const Confusion& confusion) {
  const std::int64_t total = confusion.total();
  if (total <= 0) throw std::runtime_error("confusion: empty matrix");
  std::int64_t diagonal = 0;
  for (std::size_t i = 0; i < confusion.k; ++i) diagonal += confusion.at(i, i);
  return static_cast<double>(diagonal) / static_cast<double>(total);
}

std::optional<double> cohens_kappa(const Confusion& confusion) {
  const std::int64_t total = confusion.total();
  if (total <= 0) throw std::runtime_error("confusion: empty matrix");
  const double n = static_cast<double>(total);
  double po = 0.0, pe = 0.0;
  for (std::size_t i = 0; i < confusion.k; ++i) {
    po += static_cast<double>(confusion.at(i, i)) / n;
    double row = 0.0, col = 0.0;
    for (std::size_t j = 0; j < confusion.k; ++j) {
      row += static_cast<double>(confusion.at(i, j));
      col += static_cast<double>(confusion.at(j, i));
    }
    pe += (row / n) * (col / n);
  }
  if (pe >= 1.0) return std::nullopt;
  return (po - pe) / (1.0 - pe);
}

std::optional<double> quadratic_weighted_kappa(const Confusion& confusion) {
  const std::int64_t total = confusion.total();
  if (total <= 0) throw std::runtime_error("confusion: empty matrix");
  if (confusion.k < 2) return std::nullopt;
  const double n = static_cast<double>(total);
  const double denom_scale =
      static_cast<double>((confusion.k - 1) * (confusion.k - 1));
  std::vector<double> row_marginal(confusion.k, 0.0), col_marginal(confusion.k, 0.0);
  for (std::size_t i = 0; i < confusion.k; ++i)
    for (std::size_t j = 0; j < confusion.k; ++j) {
      row_marginal[i] += static_cast<double>(confusion.at(i, j));
      col_marginal[j] += static_cast<double>(confusion.at(i, j));
    }
  double weighted_observed = 0.0, weighted_expected = 0.0;
  for (std::size_t i = 0; i < confusion.k; ++i)
    for (std::size_t j = 0; j < confusion.k; ++j) {
      const double w = static_cast<double>((static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j)) *
                                           (static_cast<std::int64_t>(i) - static_cast<std::int64_t>(j))) /
                       denom_scale;
      weighted_observed += w * static_cast<double>(confusion.at(i, j));
      weighted_expected += w * row_marginal[i] * col_marginal[j] / n;
    }
  if (weighted_expected == 0.0) return std::nullopt;
  return 1.0 - weighted_observed / weighted_expected;
}

EvalReport evaluate_confusion(const Confusion& confusion) {
  EvalReport report;
  report.confusion = confusion;
  report.exact = exact_agreement(confusion);
  report.kappa = cohens_kappa(confusion);
  report.qwk = quadratic_weighted_kappa(confusion);
  report.per_level.resize(confusion.k);
  const std::int64_t total = confusion.total();
  for (std::size_t level = 0; level < confusion.k; ++level) {
    std::int64_t row = 0, col = 0;
    for (std::size_t j = 0; j < confusion.k; ++j) {
      row += confusion.at(level, j);
      col += confusion.at(j, level);
    }
    LevelMetrics metrics;
    if (row > 0)
      metrics.exact_agreement =
          static_cast<double>(confusion.at(level, level)) / static_cast<double>(row);
    Confusion binary(2);
    binary.at(0, 0) = confusion.at(level, level);
    binary.at(0, 1) = row - confusion.at(level, level);
    binary.at(1, 0) = col - confusion.at(level, level);
    binary.at(1, 1) = total - row - col + confusion.at(level, level);
    metrics.kappa = cohens_kappa(binary);
    report.per_level[level] = metrics;
  }
  return report;
}

EvalReport evaluate(const LinearSVMModel& model, const Matrix& x_test,
                    const std::vector<int>& y_test) {
  if (x_test.rows != y_test.size())
    throw std::runtime_error("evaluate: X/y size mismatch");
  if (x_test.rows == 0) throw std::runtime_error("evaluate: empty test fold");
  Confusion confusion(static_cast<std::size_t>(model.n_classes));
  for (std::size_t i = 0; i < x_test.rows; ++i) {
    const int predicted = model.predict(x_test.row(i));
    confusion.at(static_cast<std::size_t>(y_test[i]),
                 static_cast<std::size_t>(predicted)) += 1;
  }
  return evaluate_confusion(confusion);
}

double percent_change(double baseline, double extended) {
  return (extended - baseline) / baseline * 100.0;
}

namespace {

ModelRun run_cv(const FeatureTable& table, const std::vector<int>& labels,
                const FoldAssignment& folds,
                const std::vector<std::string>& selection, const CVConfig& cv,
                const SVMConfig& svm) {
  std::vector<std::size_t> column_index;
  for (const auto& name : selection) {
    const int idx = table.column(name);
    if (idx < 0) throw std::runtime_error("feature not in table: " + name);
    column_index.push_back(static_cast<std::size_t>(idx));
  }

  const std::size_t n = table.essay_ids.size();
  std::vector<int> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = folds.fold_of.find(table.essay_ids[i]);
    if (it == folds.fold_of.end())
      throw std::runtime_error("essay missing from fold assignment: " +
                               table.essay_ids[i]);
    fold_of[i] = it->second;
  }

  ModelRun run;
  run.features = selection;
  run.folds.resize(static_cast<std::size_t>(folds.k));
  std::vector<Confusion> fold_confusions(static_cast<std::size_t>(folds.k));

  parallel_for(static_cast<std::size_t>(folds.k), cv.threads, [&](std::size_t f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i)
      (fold_of[i] == static_cast<int>(f) ? test_rows : train_rows).push_back(i);
    if (train_rows.empty() || test_rows.empty())
      throw std::runtime_error("fold " + std::to_string(f) + " is empty");

    auto build = [&](const std::vector<std::size_t>& rows) {
      Matrix m(rows.size(), column_index.size());
      std::vector<int> y(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < column_index.size(); ++c) {
          const double v = table.columns[column_index[c]][rows[r]];
          if (std::isnan(v))
            throw std::runtime_error("missing feature value in fold " + std::to_string(f));
          m.at(r, c) = v;
        }
        y[r] = labels[rows[r]];
      }
      return std::make_pair(std::move(m), std::move(y));
    };
    auto [x_train, y_train] = build(train_rows);
    auto [x_test, y_test] = build(test_rows);

    Standardizer standardizer;
    standardizer.fit(x_train, "train-fold-" + std::to_string(f));
    LinearSVMModel model =
        train_svm(standardizer.transform(x_train), y_train, svm, 3);
    EvalReport fold_report =
        evaluate(model, standardizer.transform(x_test), y_test);

    fold_confusions[f] = fold_report.confusion;
    run.folds[f] = {static_cast<int>(f), train_rows.size(), test_rows.size(),
                    standardizer.fit_provenance};
  });

  Confusion pooled(3);
  for (const auto& c : fold_confusions) pooled.add(c);
  run.report = evaluate_confusion(pooled);
  return run;
}

}  // namespace

ComparisonReport run_experiment(const FeatureTable& table,
                                std::span<const EssayMeta> metadata,
                                const std::vector<std::string>& baseline_selection,
                                const std::vector<std::string>& extended_selection,
                                const CVConfig& cv, const SVMConfig& svm) {
  if (table.essay_ids.size() != metadata.size())
    throw std::runtime_error("run_experiment: table/metadata size mismatch");
  std::vector<int> labels(table.essay_ids.size());
  for (std::size_t i = 0; i < table.levels.size(); ++i)
    labels[i] = static_cast<int>(table.levels[i]) - 1;  // Low=0, Medium=1, High=2

  const FoldAssignment folds = stratified_kfold(metadata, cv.k, cv.seed);

  ComparisonReport report;
  report.n_essays = table.essay_ids.size();
  report.k_folds = cv.k;
  report.cv_seed = cv.seed;
  report.svm = svm;
  report.baseline = run_cv(table, labels, folds, baseline_selection, cv, svm);
  report.extended = run_cv(table, labels, folds, extended_selection, cv, svm);
  return report;
}

}  // namespace lbas
