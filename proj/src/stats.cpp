#include "lbas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>

namespace lbas::stats {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Midranks of the pooled vector, ties averaged.
std::vector<double> midranks(std::vector<double> values, bool* any_ties = nullptr) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  bool ties = false;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    if (j > i) ties = true;
    i = j + 1;
  }
  if (any_ties) *any_ties = ties;
  return ranks;
}

// Sum of (t^3 - t) over tie groups of the pooled sample.
double tie_term(std::vector<double> pooled) {
  std::sort(pooled.begin(), pooled.end());
  double sum = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    sum += t * t * t - t;
    i = j + 1;
  }
  return sum;
}

// Regularized lower incomplete gamma P(a, x) by series expansion.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  double ap = a;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Number of label arrangements with rank-sum statistic u for samples of
// sizes n1, n2 and untied integer ranks (classic Mann-Whitney recurrence).
double mwu_exact_cdf(int n1, int n2, double u_obs) {
  const int max_u = n1 * n2;
  // count[i][j][u]: arrangements of i from group A, j from group B with U = u.
  // Rolled over j to keep the table small; n1, n2 <= 10 so this is tiny.
  std::vector<std::vector<std::vector<double>>> count(
      n1 + 1, std::vector<std::vector<double>>(n2 + 1,
                                               std::vector<double>(max_u + 1, 0.0)));
  for (int j = 0; j <= n2; ++j) count[0][j][0] = 1.0;
  for (int i = 1; i <= n1; ++i)
    for (int j = 0; j <= n2; ++j)
      for (int u = 0; u <= max_u; ++u) {
        double c = (u >= j) ? count[i - 1][j][u - j] : 0.0;
        if (j >= 1) c += count[i][j - 1][u];
        count[i][j][u] = c;
      }
  double total = 0.0, below = 0.0;
  for (int u = 0; u <= max_u; ++u) {
    total += count[n1][n2][u];
    if (static_cast<double>(u) <= u_obs + 1e-12) below += count[n1][n2][u];
  }
  return below / total;
}

bool all_identical(std::span<const double> v) {
  for (double x : v)
    if (x != v.front()) return false;
  return true;
}

void require_finite(std::span<const double> v, const char* who) {
  for (double x : v)
    if (!std::isfinite(x))
      throw std::runtime_error(std::string(who) + ": non-finite value");
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Wichura (1988), algorithm AS 241, PPND16.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::runtime_error("normal_quantile: p outside (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

double chi_squared_sf(double x, int df) {
  if (df < 1) throw std::runtime_error("chi_squared_sf: df < 1");
  if (x <= 0.0) return 1.0;
  const double a = 0.5 * static_cast<double>(df);
  const double half_x = 0.5 * x;
  if (half_x < a + 1.0) return 1.0 - gamma_p_series(a, half_x);
  return gamma_q_cf(a, half_x);
}

ShapiroResult shapiro_wilk(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 3) throw std::runtime_error("shapiro_wilk: need n >= 3");
  if (n > 5000) throw std::runtime_error("shapiro_wilk: n > 5000 unsupported");
  require_finite(x, "shapiro_wilk");
  std::vector<double> v(x.begin(), x.end());
  std::sort(v.begin(), v.end());
  if (v.front() == v.back()) throw std::runtime_error("shapiro_wilk: degenerate sample");

  // Blom scores and normalized coefficients (Royston 1995).
  const double dn = static_cast<double>(n);
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i)
    m[i] = normal_quantile((static_cast<double>(i + 1) - 0.375) / (dn + 0.25));
  double ssq_m = 0.0;
  for (double mi : m) ssq_m += mi * mi;

  std::vector<double> a(n);
  const double rsn = 1.0 / std::sqrt(dn);
  if (n == 3) {
    a[0] = -std::sqrt(0.5);
    a[1] = 0.0;
    a[2] = std::sqrt(0.5);
  } else {
    const double c_n = m[n - 1] / std::sqrt(ssq_m);
    const double a_n = c_n + rsn * (0.221157 +
                       rsn * (-0.147981 +
                       rsn * (-2.071190 +
                       rsn * (4.434685 + rsn * -2.706056))));
    if (n <= 5) {
      const double phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * a_n * a_n);
      for (std::size_t i = 1; i + 1 < n; ++i) a[i] = m[i] / std::sqrt(phi);
      a[n - 1] = a_n;
      a[0] = -a_n;
    } else {
      const double c_n1 = m[n - 2] / std::sqrt(ssq_m);
      const double a_n1 = c_n1 + rsn * (0.042981 +
                          rsn * (-0.293762 +
                          rsn * (-1.752461 +
                          rsn * (5.682633 + rsn * -3.582633))));
      const double phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                         (1.0 - 2.0 * a_n * a_n - 2.0 * a_n1 * a_n1);
      for (std::size_t i = 2; i + 2 < n; ++i) a[i] = m[i] / std::sqrt(phi);
      a[n - 1] = a_n;
      a[n - 2] = a_n1;
      a[0] = -a_n;
      a[1] = -a_n1;
    }
  }

  double mean = 0.0;
  for (double xi : v) mean += xi;
  mean /= dn;
  double numerator = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    numerator += a[i] * v[i];
    ss += (v[i] - mean) * (v[i] - mean);
  }
  double W = numerator * numerator / ss;
  W = std::min(W, 1.0);

  ShapiroResult result;
  result.W = W;
  if (n == 3) {
    const double stqr = std::asin(std::sqrt(0.75));
    double p = (6.0 / kPi) * (std::asin(std::sqrt(W)) - stqr);
    result.p = std::clamp(p, 0.0, 1.0);
  } else if (n <= 11) {
    const double g = -2.273 + 0.459 * dn;
    const double mu = 0.5440 + dn * (-0.39978 + dn * (0.025054 + dn * -0.0006714));
    const double sigma = std::exp(1.3822 + dn * (-0.77857 + dn * (0.062767 + dn * -0.0020322)));
    const double w = -std::log(g - std::log1p(-W));
    result.p = normal_sf((w - mu) / sigma);
  } else {
    const double ln_n = std::log(dn);
    const double mu = -1.5861 + ln_n * (-0.31082 + ln_n * (-0.083751 + ln_n * 0.0038915));
    const double sigma = std::exp(-0.4803 + ln_n * (-0.082676 + ln_n * 0.0030302));
    const double w = std::log1p(-W);
    result.p = normal_sf((w - mu) / sigma);
  }
  return result;
}

KWResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  const std::size_t k = groups.size();
  if (k < 2) throw std::runtime_error("kruskal_wallis: need k >= 2 groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw std::runtime_error("kruskal_wallis: empty group");
    require_finite(g, "kruskal_wallis");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const std::size_t N = pooled.size();
  if (N < k + 1) throw std::runtime_error("kruskal_wallis: need total n >= k + 1");

  KWResult result;
  result.df = static_cast<int>(k) - 1;

  const double dn = static_cast<double>(N);
  const double correction = 1.0 - tie_term(pooled) / (dn * dn * dn - dn);
  if (correction == 0.0) {
    result.status = KWStatus::Degenerate;
    return result;
  }

  std::vector<double> ranks = midranks(pooled);
  double h = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
    h += rank_sum * rank_sum / static_cast<double>(g.size());
    offset += g.size();
  }
  h = 12.0 / (dn * (dn + 1.0)) * h - 3.0 * (dn + 1.0);
  h /= correction;

  result.H = h;
  result.p = chi_squared_sf(h, result.df);
  result.eta_sq = (h - static_cast<double>(k) + 1.0) / (dn - static_cast<double>(k));
  return result;
}

MWUResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                         MWUMode mode, bool continuity) {
  if (a.empty() || b.empty()) throw std::runtime_error("mann_whitney_u: empty sample");
  require_finite(a, "mann_whitney_u");
  require_finite(b, "mann_whitney_u");
  const std::size_t n1 = a.size(), n2 = b.size();
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  bool ties = false;
  std::vector<double> ranks = midranks(pooled, &ties);

  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < n1; ++i) rank_sum_a += ranks[i];
  const double nm = static_cast<double>(n1) * static_cast<double>(n2);
  const double u_a = rank_sum_a - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  const double u_b = nm - u_a;
  const double u_min = std::min(u_a, u_b);

  MWUResult result;
  result.U = u_min;

  bool use_exact;
  switch (mode) {
    case MWUMode::Exact: use_exact = true; break;
    case MWUMode::Approx: use_exact = false; break;
    case MWUMode::Auto: use_exact = n1 <= 10 && n2 <= 10 && !ties; break;
  }
  if (use_exact && ties)
    throw std::runtime_error("mann_whitney_u: exact mode requires untied data");
  if (use_exact && (n1 > 25 || n2 > 25))
    throw std::runtime_error("mann_whitney_u: exact mode infeasible for n > 25");

  if (use_exact) {
    // Two-sided p doubles the lower tail of the symmetric null distribution.
    const double cdf = mwu_exact_cdf(static_cast<int>(n1), static_cast<int>(n2), u_min);
    result.p = std::min(1.0, 2.0 * cdf);
    result.exact = true;
    return result;
  }

  const double N = static_cast<double>(n1 + n2);
  const double variance =
      nm / 12.0 * ((N + 1.0) - tie_term(pooled) / (N * (N - 1.0)));
  if (variance <= 0.0) {
    result.p = 1.0;  // fully tied pooled sample carries no evidence
    return result;
  }
  const double cc = continuity ? 0.5 : 0.0;
  const double z = (u_min - nm / 2.0 + cc) / std::sqrt(variance);
  result.p = std::min(1.0, 2.0 * normal_cdf(z));
  return result;
}

StatReport analyze_all(const std::vector<std::string>& feature_names,
                       const std::vector<std::vector<double>>& columns,
                       const std::vector<ScoreLevel>& levels) {
  if (feature_names.size() != columns.size())
    throw std::runtime_error("analyze_all: names/columns size mismatch");
  StatReport report;
  for (ScoreLevel level : levels) {
    if (level == ScoreLevel::Low) ++report.n_low;
    if (level == ScoreLevel::Medium) ++report.n_medium;
    if (level == ScoreLevel::High) ++report.n_high;
  }

  for (std::size_t f = 0; f < columns.size(); ++f) {
    const auto& col = columns[f];
    if (col.size() != levels.size())
      throw std::runtime_error("analyze_all: column " + feature_names[f] +
                               " has wrong length");
    for (double v : col)
      if (std::isnan(v))
        throw std::runtime_error("analyze_all: missing value in feature " +
                                 feature_names[f]);

    std::vector<double> low, medium, high;
    for (std::size_t i = 0; i < col.size(); ++i) {
      switch (levels[i]) {
        case ScoreLevel::Low: low.push_back(col[i]); break;
        case ScoreLevel::Medium: medium.push_back(col[i]); break;
        case ScoreLevel::High: high.push_back(col[i]); break;
      }
    }
    if (low.empty() || medium.empty() || high.empty())
      throw std::runtime_error("analyze_all: a score level has no essays");

    FeatureStatRow row;
    row.feature = feature_names[f];
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    row.mean_low = mean(low);
    row.mean_medium = mean(medium);
    row.mean_high = mean(high);

    if (all_identical(col)) {
      row.not_applicable = true;
      report.rows.push_back(std::move(row));
      report.normality.push_back({feature_names[f], false, 0.0, 0.0});
      continue;
    }

    KWResult kw = kruskal_wallis({low, medium, high});
    if (kw.status == KWStatus::Degenerate) {
      row.not_applicable = true;
      report.rows.push_back(std::move(row));
      report.normality.push_back({feature_names[f], false, 0.0, 0.0});
      continue;
    }
    row.H = kw.H;
    row.p = kw.p;
    row.eta_sq = kw.eta_sq;
    row.sig_omnibus = kw.p < 0.05;

    auto pairwise = [&](const std::vector<double>& x, const std::vector<double>& y) {
      MWUResult r = mann_whitney_u(x, y);
      PairwiseResult pr;
      pr.p = r.p;
      pr.exact = r.exact;
      pr.significant = r.p < 0.017;
      return pr;
    };
    row.low_high = pairwise(low, high);
    row.low_medium = pairwise(low, medium);
    row.medium_high = pairwise(medium, high);
    report.rows.push_back(std::move(row));

    NormalityRow norm;
    norm.feature = feature_names[f];
    if (col.size() >= 3 && col.size() <= 5000) {
      norm.ok = true;
      ShapiroResult sw = shapiro_wilk(col);
      norm.W = sw.W;
      norm.p = sw.p;
    }
    report.normality.push_back(std::move(norm));
  }
  return report;
}

std::optional<double> feature_score_correlation(std::span<const double> values,
                                                std::span<const ScoreLevel> levels) {
  if (values.size() != levels.size() || values.size() < 3)
    throw std::runtime_error("feature_score_correlation: need >= 3 paired essays");
  const double n = static_cast<double>(values.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    mx += values[i];
    my += static_cast<double>(static_cast<int>(levels[i]));
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double dx = values[i] - mx;
    const double dy = static_cast<double>(static_cast<int>(levels[i])) - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace lbas::stats
