// stats.hpp -- nonparametric battery: Shapiro-Wilk screening,
// Kruskal-Wallis with eta-squared, post-hoc Mann-Whitney U with Bonferroni
// flags, and the per-feature grouped report.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lbas/corpus.hpp"

namespace lbas::stats {

// Phi(z), standard normal CDF.
double normal_cdf(double z);
// Upper tail 1 - Phi(z).
double normal_sf(double z);
// Inverse CDF (Wichura's PPND16); throws outside (0, 1).
double normal_quantile(double p);
// Upper-tail chi-square probability, any df >= 1 (regularized upper
// incomplete gamma). For df = 2 this equals exp(-x/2).
double chi_squared_sf(double x, int df);

struct ShapiroResult {
  double W = 0.0;
  double p = 0.0;
};

// Royston's AS R94 approximation; requires 3 <= n <= 5000 and a
// non-degenerate sample.
ShapiroResult shapiro_wilk(std::span<const double> x);

enum class KWStatus { Ok, Degenerate };

struct KWResult {
  double H = 0.0;
  int df = 0;
  double p = 1.0;
  double eta_sq = 0.0;
  KWStatus status = KWStatus::Ok;
};

// Midrank-based H with tie correction; p from the chi-square survival
// function at df = k-1; eta_sq = (H - k + 1)/(N - k). All pooled values
// identical -> Degenerate (the report's N/A path).
KWResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

enum class MWUMode { Auto, Exact, Approx };

struct MWUResult {
  double U = 0.0;  // min(U_a, U_b) from midranks
  double p = 1.0;  // two-sided
  bool exact = false;
};

// Auto: exact enumeration when both n <= 10 and the pooled sample has no
// ties, otherwise normal approximation with tie correction and (by
// default) 0.5 continuity correction.
MWUResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                         MWUMode mode = MWUMode::Auto, bool continuity = true);

struct PairwiseResult {
  double p = 1.0;
  bool exact = false;
  bool significant = false;  // p < 0.017, strict
};

struct FeatureStatRow {
  std::string feature;
  bool not_applicable = false;  // all pooled values identical (e.g. all zero)
  double H = 0.0;
  double p = 1.0;
  double eta_sq = 0.0;
  bool sig_omnibus = false;  // p < 0.05, strict
  double mean_low = 0.0, mean_medium = 0.0, mean_high = 0.0;
  PairwiseResult low_high, low_medium, medium_high;
};

struct NormalityRow {
  std::string feature;
  bool ok = false;  // false when the sample was degenerate or too small
  double W = 0.0;
  double p = 0.0;
};

struct StatReport {
  std::vector<FeatureStatRow> rows;
  std::vector<NormalityRow> normality;  // pooled Shapiro-Wilk pre-check
  std::size_t n_low = 0, n_medium = 0, n_high = 0;
};

// One row per feature column: group means, KW omnibus, three pairwise MWU
// p-values (Low-High, Low-Medium, Medium-High) with significance flags.
// Columns whose pooled values are all identical become N/A rows. NaN cells
// are an error.
StatReport analyze_all(const std::vector<std::string>& feature_names,
                       const std::vector<std::vector<double>>& columns,
                       const std::vector<ScoreLevel>& levels);

// Pearson r of a feature against the ordinal encoding Low=1, Medium=2,
// High=3; nullopt when either side has zero variance.
std::optional<double> feature_score_correlation(std::span<const double> values,
                                                std::span<const ScoreLevel> levels);

}  // namespace lbas::stats
