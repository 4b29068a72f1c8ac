// report.hpp -- renders the statistical battery and the model comparison
// as aligned text tables, CSV and JSON.

#pragma once

#include <string>

#include <json.hpp>

#include "lbas/model.hpp"
#include "lbas/stats.hpp"

namespace lbas::report {

// Human-readable row labels for the 24 bundle-feature columns
// ("3-word non-prompt bundles", ..., "Total (overall)").
std::string lb_row_label(const std::string& feature_name);

// Kruskal-Wallis / means / pairwise-MWU table. * flags omnibus p < .05,
// ** flags pairwise p < .017 (strict comparisons).
std::string stat_report_text(const stats::StatReport& report);
std::string stat_report_csv(const stats::StatReport& report);
nlohmann::json stat_report_json(const stats::StatReport& report);

// Overall and score-specific baseline-vs-extended comparisons with
// percent change columns.
std::string comparison_text(const ComparisonReport& report);
std::string comparison_csv(const ComparisonReport& report);
nlohmann::json comparison_json(const ComparisonReport& report);

}  // namespace lbas::report
