#include "lbas/report.hpp"

#include <cstdio>
#include <sstream>

#include "lbas/csv.hpp"
#include "lbas/features.hpp"

namespace lbas::report {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt_fixed(const std::optional<double>& v, int digits) {
  return v ? fixed(*v, digits) : "N/A";
}

std::string p_with_flag(double p, bool flag, const char* mark) {
  return fixed(p, 3) + (flag ? mark : "");
}

// Pads every column of a row table to its widest cell.
std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i)
      width[i] = std::max(width[i], row[i].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::string cell = row[i];
      cell.resize(width[i], ' ');
      out += cell;
      if (i + 1 < row.size()) out += "  ";
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string lb_row_label(const std::string& feature_name) {
  if (feature_name == "total_prompt") return "Total (prompt)";
  if (feature_name == "total_nonprompt") return "Total (non-prompt)";
  if (feature_name == "total_overall") return "Total (overall)";
  if (feature_name.rfind("lb", 0) == 0 && feature_name.size() > 3) {
    const char digit = feature_name[2];
    const std::string rest = feature_name.substr(4);
    std::string label(1, digit);
    label += "-word ";
    if (rest == "nonprompt") label += "non-prompt bundles";
    else if (rest == "prompt") label += "prompt bundles";
    else label += "total";
    return label;
  }
  return feature_name;
}

std::string stat_report_text(const stats::StatReport& report) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Feature", "H", "p", "eta^2", "Low", "Medium", "High",
                  "Low vs High p", "Low vs Med p", "Med vs High p"});
  for (const auto& r : report.rows) {
    std::vector<std::string> row;
    row.push_back(lb_row_label(r.feature));
    if (r.not_applicable) {
      row.insert(row.end(), {"N/A", "N/A", "N/A"});
      row.push_back(fixed(r.mean_low, 4));
      row.push_back(fixed(r.mean_medium, 4));
      row.push_back(fixed(r.mean_high, 4));
      row.insert(row.end(), {"N/A", "N/A", "N/A"});
    } else {
      row.push_back(fixed(r.H, 3));
      row.push_back(p_with_flag(r.p, r.sig_omnibus, "*"));
      row.push_back(fixed(r.eta_sq, 3));
      row.push_back(fixed(r.mean_low, 4));
      row.push_back(fixed(r.mean_medium, 4));
      row.push_back(fixed(r.mean_high, 4));
      row.push_back(p_with_flag(r.low_high.p, r.low_high.significant, "**"));
      row.push_back(p_with_flag(r.low_medium.p, r.low_medium.significant, "**"));
      row.push_back(p_with_flag(r.medium_high.p, r.medium_high.significant, "**"));
    }
    rows.push_back(std::move(row));
  }
  std::string out = "Analysis of bundle-frequency features by score level\n";
  out += "(n: Low=" + std::to_string(report.n_low) +
         ", Medium=" + std::to_string(report.n_medium) +
         ", High=" + std::to_string(report.n_high) + ")\n\n";
  out += align(rows);
  out += "\n*p < .05. **p < .017 (Bonferroni corrected for pairwise comparisons)\n";
  return out;
}

std::string stat_report_csv(const stats::StatReport& report) {
  csv::Table t;
  t.header = {"feature", "H", "p", "eta_sq", "mean_low", "mean_medium", "mean_high",
              "p_low_high", "p_low_medium", "p_medium_high",
              "sig_omnibus", "sig_low_high", "sig_low_medium", "sig_medium_high"};
  for (const auto& r : report.rows) {
    csv::Row row;
    row.push_back(r.feature);
    if (r.not_applicable) {
      row.insert(row.end(), {"", "", ""});
      row.push_back(csv::format_double(r.mean_low));
      row.push_back(csv::format_double(r.mean_medium));
      row.push_back(csv::format_double(r.mean_high));
      row.insert(row.end(), {"", "", "", "", "", "", ""});
    } else {
      row.push_back(csv::format_double(r.H));
      row.push_back(csv::format_double(r.p));
      row.push_back(csv::format_double(r.eta_sq));
      row.push_back(csv::format_double(r.mean_low));
      row.push_back(csv::format_double(r.mean_medium));
      row.push_back(csv::format_double(r.mean_high));
      row.push_back(csv::format_double(r.low_high.p));
      row.push_back(csv::format_double(r.low_medium.p));
      row.push_back(csv::format_double(r.medium_high.p));
      row.push_back(r.sig_omnibus ? "1" : "0");
      row.push_back(r.low_high.significant ? "1" : "0");
      row.push_back(r.low_medium.significant ? "1" : "0");
      row.push_back(r.medium_high.significant ? "1" : "0");
    }
    t.rows.push_back(std::move(row));
  }
  return csv::format(t);
}

nlohmann::json stat_report_json(const stats::StatReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row;
    row["feature"] = r.feature;
    row["label"] = lb_row_label(r.feature);
    row["means"] = {{"low", r.mean_low}, {"medium", r.mean_medium}, {"high", r.mean_high}};
    if (r.not_applicable) {
      row["status"] = "N/A";
    } else {
      row["status"] = "ok";
      row["H"] = r.H;
      row["p"] = r.p;
      row["eta_sq"] = r.eta_sq;
      row["sig_omnibus"] = r.sig_omnibus;
      auto pairwise = [](const stats::PairwiseResult& pr) {
        return nlohmann::json{{"p", pr.p},
                              {"significant", pr.significant},
                              {"method", pr.exact ? "exact" : "approx"}};
      };
      row["low_high"] = pairwise(r.low_high);
      row["low_medium"] = pairwise(r.low_medium);
      row["medium_high"] = pairwise(r.medium_high);
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json normality = nlohmann::json::array();
  for (const auto& n : report.normality) {
    nlohmann::json row;
    row["feature"] = n.feature;
    if (n.ok) {
      row["W"] = n.W;
      row["p"] = n.p;
    } else {
      row["status"] = "N/A";
    }
    normality.push_back(std::move(row));
  }
  return nlohmann::json{{"group_sizes",
                         {{"low", report.n_low},
                          {"medium", report.n_medium},
                          {"high", report.n_high}}},
                        {"rows", rows},
                        {"normality_precheck", normality}};
}

namespace {

struct MetricRow {
  std::string metric;
  std::optional<double> baseline;
  std::optional<double> extended;
};

std::optional<double> row_change(const MetricRow& row) {
  if (!row.baseline || !row.extended || *row.baseline == 0.0) return std::nullopt;
  return percent_change(*row.baseline, *row.extended);
}

std::vector<MetricRow> overall_rows(const ComparisonReport& report) {
  return {{"Exact Agreement", report.baseline.report.exact, report.extended.report.exact},
          {"Cohen's K", report.baseline.report.kappa, report.extended.report.kappa},
          {"Quadratic Cohen's K", report.baseline.report.qwk, report.extended.report.qwk}};
}

struct LevelRow {
  std::string level;
  std::string metric;
  std::optional<double> baseline;
  std::optional<double> extended;
};

std::vector<LevelRow> level_rows(const ComparisonReport& report) {
  static const char* kLevels[] = {"Low", "Medium", "High"};
  std::vector<LevelRow> rows;
  for (std::size_t level = 0; level < 3; ++level) {
    const auto& b = report.baseline.report.per_level[level];
    const auto& e = report.extended.report.per_level[level];
    rows.push_back({kLevels[level], "Exact Agreement", b.exact_agreement, e.exact_agreement});
    rows.push_back({kLevels[level], "Cohen's K", b.kappa, e.kappa});
  }
  return rows;
}

}  // namespace

std::string comparison_text(const ComparisonReport& report) {
  std::string out = "Overall comparison of baseline and extended models\n\n";
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Metric", "Baseline Model", "Extended Model", "Change (%)"});
  for (const auto& r : overall_rows(report)) {
    auto change = row_change(r);
    rows.push_back({r.metric, opt_fixed(r.baseline, 3), opt_fixed(r.extended, 3),
                    change ? fixed(*change, 2) : "N/A"});
  }
  out += align(rows);

  out += "\nScore-specific comparison of baseline and extended models\n\n";
  rows.clear();
  rows.push_back({"Proficiency Level", "Metric", "Baseline Model", "Extended Model", "Change (%)"});
  for (const auto& r : level_rows(report)) {
    MetricRow m{r.metric, r.baseline, r.extended};
    auto change = row_change(m);
    rows.push_back({r.level, r.metric, opt_fixed(r.baseline, 3), opt_fixed(r.extended, 3),
                    change ? fixed(*change, 2) : "N/A"});
  }
  out += align(rows);

  out += "\nNotes: linear SVM, one-vs-rest over 3 classes; metrics pooled over " +
         std::to_string(report.k_folds) +
         " stratified folds (confusions summed, then scored). Per-level Cohen's K "
         "is computed on one-vs-rest binarized labels; per-level exact agreement "
         "is the recall of that level.\n";
  return out;
}

std::string comparison_csv(const ComparisonReport& report) {
  csv::Table t;
  t.header = {"level", "metric", "baseline", "extended", "change_pct"};
  auto emit = [&](const std::string& level, const MetricRow& row) {
    auto change = row_change(row);
    t.rows.push_back({level, row.metric,
                      row.baseline ? csv::format_double(*row.baseline) : "",
                      row.extended ? csv::format_double(*row.extended) : "",
                      change ? csv::format_double(*change) : ""});
  };
  for (const auto& r : overall_rows(report)) emit("Overall", r);
  for (const auto& r : level_rows(report)) emit(r.level, {r.metric, r.baseline, r.extended});
  return csv::format(t);
}

nlohmann::json comparison_json(const ComparisonReport& report) {
  auto run_json = [](const ModelRun& run) {
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t i = 0; i < run.report.confusion.k; ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < run.report.confusion.k; ++j)
        row.push_back(run.report.confusion.at(i, j));
      confusion.push_back(std::move(row));
    }
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : run.folds)
      folds.push_back({{"fold", f.fold},
                       {"train_rows", f.train_rows},
                       {"test_rows", f.test_rows},
                       {"standardizer_fit", f.standardizer_fit}});
    nlohmann::json per_level = nlohmann::json::array();
    static const char* kLevels[] = {"Low", "Medium", "High"};
    for (std::size_t level = 0; level < run.report.per_level.size(); ++level) {
      const auto& m = run.report.per_level[level];
      nlohmann::json entry{{"level", kLevels[level]}};
      if (m.exact_agreement) entry["exact_agreement"] = *m.exact_agreement;
      if (m.kappa) entry["cohens_kappa"] = *m.kappa;
      per_level.push_back(std::move(entry));
    }
    nlohmann::json out{{"features", run.features},
                       {"confusion", confusion},
                       {"exact_agreement", run.report.exact},
                       {"per_level", per_level},
                       {"folds", folds}};
    if (run.report.kappa) out["cohens_kappa"] = *run.report.kappa;
    if (run.report.qwk) out["qwk"] = *run.report.qwk;
    return out;
  };

  nlohmann::json overall = nlohmann::json::array();
  for (const auto& r : overall_rows(report)) {
    nlohmann::json row{{"metric", r.metric}};
    if (r.baseline) row["baseline"] = *r.baseline;
    if (r.extended) row["extended"] = *r.extended;
    if (auto change = row_change(r)) row["change_pct"] = *change;
    overall.push_back(std::move(row));
  }
  nlohmann::json per_level = nlohmann::json::array();
  for (const auto& r : level_rows(report)) {
    nlohmann::json row{{"level", r.level}, {"metric", r.metric}};
    if (r.baseline) row["baseline"] = *r.baseline;
    if (r.extended) row["extended"] = *r.extended;
    MetricRow m{r.metric, r.baseline, r.extended};
    if (auto change = row_change(m)) row["change_pct"] = *change;
    per_level.push_back(std::move(row));
  }

  return nlohmann::json{
      {"n_essays", report.n_essays},
      {"k_folds", report.k_folds},
      {"cv_seed", report.cv_seed},
      {"svm", {{"C", report.svm.C},
               {"tolerance", report.svm.tolerance},
               {"max_epochs", report.svm.max_epochs},
               {"seed", report.svm.seed},
               {"strategy", "one-vs-rest linear"}}},
      {"pooling", "confusion matrices summed across folds"},
      {"per_level_kappa_definition", "Cohen's kappa of one-vs-rest binarized labels"},
      {"overall", overall},
      {"per_level", per_level},
      {"baseline", run_json(report.baseline)},
      {"extended", run_json(report.extended)}};
}

}  // namespace lbas::report
