// lbas -- lexical-bundle corpus analytics and scoring-model pipeline.
//
// Stage-file architecture: each subcommand reads the previous stage's
// artifacts from the output directory and writes its own atomically, so a
// licensed-corpus user can re-run only downstream stages.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "lbas/bundles.hpp"
#include "lbas/corpus.hpp"
#include "lbas/csv.hpp"
#include "lbas/features.hpp"
#include "lbas/model.hpp"
#include "lbas/report.hpp"
#include "lbas/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct PipelineConfig {
  fs::path essays;
  fs::path manifest;  // explicit override; stages otherwise chain on out/
  fs::path out = "out";
  fs::path resources;
  fs::path external;  // external feature CSV, optional

  std::uint64_t seed = 42;
  unsigned threads = 1;
  std::size_t min_words = 9;
  std::optional<std::size_t> target_words;
  lbas::OverlapPolicy overlap_policy = lbas::OverlapPolicy::SubsumeLongest;
  lbas::Normalization norm = lbas::Normalization::Per100Words;
  lbas::BundleCriteria criteria = lbas::BundleCriteria::defaults();
  std::vector<std::string> feature_selection;  // baseline features for evaluate
  lbas::SVMConfig svm;
  int cv_folds = 3;

  json effective() const {
    json criteria_json;
    for (int n = lbas::kMinBundleLength; n <= lbas::kMaxBundleLength; ++n) {
      const auto& c = criteria.for_length(n);
      criteria_json[std::to_string(n)] = {{"freq", c.min_freq_per_million},
                                          {"range", c.min_range_files}};
    }
    // threads is an execution detail, not part of provenance: artifacts
    // must be byte-identical across thread counts.
    return json{{"seed", seed},
                {"min_words", min_words},
                {"target_words", target_words ? json(*target_words) : json(nullptr)},
                {"overlap_policy", std::string(lbas::to_string(overlap_policy))},
                {"norm", std::string(lbas::to_string(norm))},
                {"criteria", criteria_json},
                {"features", feature_selection},
                {"svm", {{"C", svm.C},
                         {"tolerance", svm.tolerance},
                         {"max_epochs", svm.max_epochs},
                         {"seed", svm.seed}}},
                {"cv", {{"k", cv_folds}, {"seed", seed}}}};
  }
};

// Criteria override string: "3:freq=40,range=5;4:freq=20,range=5".
void apply_criteria_spec(lbas::BundleCriteria& criteria, const std::string& spec) {
  std::istringstream stream(spec);
  std::string clause;
  while (std::getline(stream, clause, ';')) {
    if (clause.empty()) continue;
    const auto colon = clause.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("bad criteria clause \"" + clause + "\"");
    const int n = std::stoi(clause.substr(0, colon));
    auto& c = criteria.for_length(n);
    std::istringstream fields(clause.substr(colon + 1));
    std::string field;
    while (std::getline(fields, field, ',')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("bad criteria field \"" + field + "\"");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "freq")
        c.min_freq_per_million = std::stod(value);
      else if (key == "range")
        c.min_range_files = std::stoi(value);
      else
        throw std::runtime_error("unknown criteria key \"" + key + "\"");
    }
  }
}

void apply_config_file(PipelineConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j = json::parse(in);
  if (j.contains("essays")) config.essays = j["essays"].get<std::string>();
  if (j.contains("manifest")) config.manifest = j["manifest"].get<std::string>();
  if (j.contains("out")) config.out = j["out"].get<std::string>();
  if (j.contains("resources")) config.resources = j["resources"].get<std::string>();
  if (j.contains("external")) config.external = j["external"].get<std::string>();
  if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) config.threads = j["threads"].get<unsigned>();
  if (j.contains("min_words")) config.min_words = j["min_words"].get<std::size_t>();
  if (j.contains("target_words") && !j["target_words"].is_null())
    config.target_words = j["target_words"].get<std::size_t>();
  if (j.contains("overlap_policy"))
    config.overlap_policy = lbas::parse_overlap_policy(j["overlap_policy"].get<std::string>());
  if (j.contains("norm")) config.norm = lbas::parse_normalization(j["norm"].get<std::string>());
  if (j.contains("criteria"))
    for (const auto& [key, value] : j["criteria"].items()) {
      auto& c = config.criteria.for_length(std::stoi(key));
      if (value.contains("freq")) c.min_freq_per_million = value["freq"].get<double>();
      if (value.contains("range")) c.min_range_files = value["range"].get<int>();
    }
  if (j.contains("features"))
    config.feature_selection = j["features"].get<std::vector<std::string>>();
  if (j.contains("svm")) {
    const auto& s = j["svm"];
    if (s.contains("C")) config.svm.C = s["C"].get<double>();
    if (s.contains("tolerance")) config.svm.tolerance = s["tolerance"].get<double>();
    if (s.contains("max_epochs")) config.svm.max_epochs = s["max_epochs"].get<int>();
    if (s.contains("seed")) config.svm.seed = s["seed"].get<std::uint64_t>();
  }
  if (j.contains("cv") && j["cv"].contains("k")) config.cv_folds = j["cv"]["k"].get<int>();
}

// Collects artifacts and renames them into place only when every write
// succeeded, so a failing command never leaves partial outputs.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }
  ~ArtifactWriter() {
    for (const auto& tmp : pending_) {
      std::error_code ec;
      fs::remove(tmp, ec);
    }
  }

  void stage(const std::string& name, const std::string& content) {
    const fs::path tmp = dir_ / (name + ".tmp");
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.close();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
    pending_.push_back(tmp);
    names_.push_back(name);
  }

  void commit() {
    for (std::size_t i = 0; i < pending_.size(); ++i)
      fs::rename(pending_[i], dir_ / names_[i]);
    pending_.clear();
    names_.clear();
  }

 private:
  fs::path dir_;
  std::vector<fs::path> pending_;
  std::vector<std::string> names_;
};

std::string read_file(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing " + what + " (" + path.string() + ")");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The manifest a downstream stage should read: explicit flag if given,
// otherwise sampled.csv when present, otherwise corpus.csv.
fs::path stage_manifest(const PipelineConfig& config) {
  if (!config.manifest.empty()) return config.manifest;
  const fs::path sampled = config.out / "sampled.csv";
  if (fs::exists(sampled)) return sampled;
  const fs::path ingested = config.out / "corpus.csv";
  if (fs::exists(ingested)) return ingested;
  throw std::runtime_error("no manifest: run ingest first or pass --manifest");
}

fs::path resource_dir(const PipelineConfig& config) {
  if (!config.resources.empty()) return config.resources;
  if (const char* env = std::getenv("LBAS_RESOURCES")) return fs::path(env);
  return fs::path("data") / "resources";
}

lbas::Corpus load_stage_corpus(const PipelineConfig& config) {
  if (config.essays.empty())
    throw std::runtime_error("no essay directory: pass --essays");
  return lbas::load_corpus(config.essays, stage_manifest(config), config.threads);
}

int cmd_ingest(const PipelineConfig& config) {
  if (config.essays.empty() || config.manifest.empty())
    throw std::runtime_error("ingest needs --essays and --manifest");
  lbas::Corpus corpus =
      lbas::load_corpus(config.essays, config.manifest, config.threads);
  const std::size_t before = corpus.essays.size();
  lbas::Corpus kept = lbas::filter_min_words(corpus, config.min_words);

  ArtifactWriter writer(config.out);
  writer.stage("corpus.csv", lbas::corpus_manifest_csv(kept));
  json summary{{"config", config.effective()},
               {"essays_in", before},
               {"essays_kept", kept.essays.size()},
               {"essays_dropped_short", before - kept.essays.size()},
               {"total_words", kept.total_words()}};
  writer.stage("corpus.json", summary.dump(2) + "\n");
  writer.commit();
  std::cout << "ingest: kept " << kept.essays.size() << "/" << before << " essays, "
            << kept.total_words() << " words\n";
  return 0;
}

int cmd_sample(const PipelineConfig& config) {
  lbas::Corpus corpus = load_stage_corpus(config);
  lbas::SamplingPlan plan;
  plan.seed = config.seed;
  plan.target_words = config.target_words;
  lbas::SampleResult result = lbas::stratified_sample(corpus, plan);
  for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";

  ArtifactWriter writer(config.out);
  writer.stage("sampled.csv", lbas::corpus_manifest_csv(result.corpus));
  json summary{{"config", config.effective()},
               {"essays", result.corpus.essays.size()},
               {"total_words", result.corpus.total_words()},
               {"warnings", result.warnings}};
  writer.stage("sampled.json", summary.dump(2) + "\n");
  writer.commit();
  std::cout << "sample: " << result.corpus.essays.size() << " essays, "
            << result.corpus.total_words() << " words\n";
  return 0;
}

int cmd_bundles(const PipelineConfig& config) {
  lbas::Corpus corpus = load_stage_corpus(config);
  lbas::BundleInventory inventory =
      lbas::identify_bundles(corpus, config.criteria, config.overlap_policy);

  ArtifactWriter writer(config.out);
  writer.stage("inventory.csv", lbas::inventory_csv(inventory));
  writer.stage("bundle_counts.csv", lbas::inventory_counts_csv(inventory));
  json summary{{"config", config.effective()},
               {"n_total", inventory.n_total()},
               {"n_prompt", inventory.n_prompt()},
               {"n_nonprompt", inventory.n_nonprompt()},
               {"total_words", inventory.corpus_total_words}};
  writer.stage("bundles.json", summary.dump(2) + "\n");
  writer.commit();
  std::cout << "bundles: " << inventory.n_total() << " bundles ("
            << inventory.n_prompt() << " prompt, " << inventory.n_nonprompt()
            << " non-prompt) from " << inventory.corpus_total_words << " words\n";
  return 0;
}

int cmd_features(const PipelineConfig& config) {
  const fs::path inv_path = config.out / "inventory.csv";
  const fs::path counts_path = config.out / "bundle_counts.csv";
  if (!fs::exists(inv_path) || !fs::exists(counts_path))
    throw std::runtime_error("missing bundle inventory (run bundles first)");

  lbas::Corpus corpus = load_stage_corpus(config);
  std::size_t total_words = 0;
  {
    const fs::path bundles_json = config.out / "bundles.json";
    if (fs::exists(bundles_json)) {
      json j = json::parse(read_file(bundles_json, "bundles.json"));
      if (j.contains("total_words")) total_words = j["total_words"].get<std::size_t>();
    }
  }
  lbas::BundleInventory inventory =
      lbas::read_inventory(read_file(inv_path, "bundle inventory"),
                           read_file(counts_path, "bundle counts"), total_words);

  const lbas::Resources resources = lbas::Resources::load(resource_dir(config));

  std::map<std::string, std::map<std::string, double>> native;
  std::vector<std::string> warnings;
  for (const auto& essay : corpus.essays) {
    lbas::LBFeatureSet lb = lbas::compute_lb_features(essay, inventory, config.norm);
    lbas::BaselineFeatures baseline = lbas::compute_native_baseline(essay, resources);
    auto& values = native[essay.meta.essay_id];
    const auto row = lb.as_row();
    for (std::size_t i = 0; i < row.size(); ++i)
      values[lbas::lb_feature_names()[i]] = row[i];
    for (const auto& [name, value] : baseline.values) values[name] = value;
    warnings.insert(warnings.end(), baseline.warnings.begin(), baseline.warnings.end());
  }

  std::map<std::string, std::map<std::string, double>> external;
  if (!config.external.empty())
    external = lbas::read_external_features(
        read_file(config.external, "external feature CSV"));

  // Full matrix: LB columns, then the Table-3 names that are resolvable
  // for every essay (external columns may be absent entirely).
  std::vector<std::string> columns = lbas::lb_feature_names();
  std::vector<std::string> missing_baseline;
  for (const auto& name : lbas::baseline_feature_names()) {
    bool complete = true;
    for (const auto& essay : corpus.essays) {
      const auto& id = essay.meta.essay_id;
      const bool in_external = external.count(id) && external.at(id).count(name);
      const bool in_native = native.at(id).count(name) > 0;
      if (!in_external && !in_native) {
        complete = false;
        break;
      }
    }
    if (complete)
      columns.push_back(name);
    else
      missing_baseline.push_back(name);
  }

  std::vector<std::string> ids;
  std::vector<lbas::ScoreLevel> levels;
  for (const auto& essay : corpus.essays) {
    ids.push_back(essay.meta.essay_id);
    levels.push_back(essay.meta.score_level);
  }
  lbas::FeatureTable table = lbas::merge_features(ids, levels, native, external, columns);

  // Table-3-style correlation of each feature with the ordinal score.
  json correlations;
  if (ids.size() >= 3)
    for (std::size_t j = 0; j < table.names.size(); ++j) {
      auto r = lbas::stats::feature_score_correlation(table.columns[j], table.levels);
      correlations[table.names[j]] = r ? json(*r) : json(nullptr);
    }

  ArtifactWriter writer(config.out);
  writer.stage("features.csv", table.to_csv());
  json summary{{"config", config.effective()},
               {"essays", ids.size()},
               {"columns", columns},
               {"baseline_features_unavailable", missing_baseline},
               {"correlation_with_score", correlations},
               {"warnings", warnings}};
  writer.stage("features.json", summary.dump(2) + "\n");
  writer.commit();
  std::cout << "features: " << ids.size() << " essays x " << columns.size()
            << " features";
  if (!missing_baseline.empty())
    std::cout << " (" << missing_baseline.size() << " baseline features unavailable)";
  std::cout << "\n";
  return 0;
}

int cmd_stats(const PipelineConfig& config) {
  const fs::path features_path = config.out / "features.csv";
  if (!fs::exists(features_path))
    throw std::runtime_error("missing feature matrix (run features first)");
  lbas::FeatureTable table =
      lbas::FeatureTable::from_csv(read_file(features_path, "feature matrix"));

  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (const auto& name : lbas::lb_feature_names()) {
    const int idx = table.column(name);
    if (idx < 0) throw std::runtime_error("feature matrix lacks column " + name);
    names.push_back(name);
    columns.push_back(table.columns[static_cast<std::size_t>(idx)]);
  }
  lbas::stats::StatReport report = lbas::stats::analyze_all(names, columns, table.levels);

  json stats_json = lbas::report::stat_report_json(report);
  stats_json["config"] = config.effective();

  ArtifactWriter writer(config.out);
  writer.stage("stats.csv", lbas::report::stat_report_csv(report));
  writer.stage("stats.json", stats_json.dump(2) + "\n");
  writer.commit();

  std::size_t significant = 0, na = 0;
  for (const auto& row : report.rows) {
    if (row.not_applicable)
      ++na;
    else if (row.sig_omnibus)
      ++significant;
  }
  std::cout << "stats: " << report.rows.size() << " features, " << significant
            << " significant at .05, " << na << " N/A\n";
  return 0;
}

int cmd_evaluate(const PipelineConfig& config) {
  const fs::path features_path = config.out / "features.csv";
  if (!fs::exists(features_path))
    throw std::runtime_error("missing feature matrix (run features first)");
  lbas::FeatureTable table =
      lbas::FeatureTable::from_csv(read_file(features_path, "feature matrix"));

  // Metadata for the CV strata comes from the stage manifest.
  lbas::csv::Table manifest = lbas::csv::read_file(stage_manifest(config));
  std::map<std::string, lbas::EssayMeta> meta_by_id;
  for (const auto& row : manifest.rows) {
    lbas::EssayMeta meta{row[0], row[1], row[2], lbas::parse_score_level(row[3])};
    meta_by_id[meta.essay_id] = meta;
  }
  std::vector<lbas::EssayMeta> metadata;
  for (const auto& id : table.essay_ids) {
    auto it = meta_by_id.find(id);
    if (it == meta_by_id.end())
      throw std::runtime_error("essay " + id + " missing from manifest");
    metadata.push_back(it->second);
  }

  // Baseline selection: explicit list, else every complete non-LB column.
  std::vector<std::string> baseline = config.feature_selection;
  if (baseline.empty()) {
    const auto& lb = lbas::lb_feature_names();
    for (const auto& name : table.names) {
      if (std::find(lb.begin(), lb.end(), name) != lb.end()) continue;
      const auto& col = table.columns[static_cast<std::size_t>(table.column(name))];
      if (std::none_of(col.begin(), col.end(), [](double v) { return std::isnan(v); }))
        baseline.push_back(name);
    }
  }
  if (baseline.empty())
    throw std::runtime_error("no baseline features available for evaluation");
  std::vector<std::string> extended = baseline;
  for (const auto& name : lbas::lb_aggregate_names())
    if (std::find(extended.begin(), extended.end(), name) == extended.end())
      extended.push_back(name);

  lbas::CVConfig cv;
  cv.k = config.cv_folds;
  cv.seed = config.seed;
  cv.threads = config.threads;
  lbas::ComparisonReport comparison =
      lbas::run_experiment(table, metadata, baseline, extended, cv, config.svm);

  json eval_json = lbas::report::comparison_json(comparison);
  eval_json["config"] = config.effective();

  ArtifactWriter writer(config.out);
  writer.stage("eval.json", eval_json.dump(2) + "\n");
  writer.stage("eval.csv", lbas::report::comparison_csv(comparison));
  writer.commit();

  std::cout << "evaluate: baseline exact "
            << lbas::csv::format_double(comparison.baseline.report.exact)
            << ", extended exact "
            << lbas::csv::format_double(comparison.extended.report.exact) << "\n";
  return 0;
}

// Reads stats.json back into the report structures so the text rendering
// never recomputes statistics.
lbas::stats::StatReport stats_from_json(const json& stats_json) {
  lbas::stats::StatReport report;
  report.n_low = stats_json["group_sizes"]["low"].get<std::size_t>();
  report.n_medium = stats_json["group_sizes"]["medium"].get<std::size_t>();
  report.n_high = stats_json["group_sizes"]["high"].get<std::size_t>();
  for (const auto& row : stats_json["rows"]) {
    lbas::stats::FeatureStatRow r;
    r.feature = row["feature"].get<std::string>();
    r.mean_low = row["means"]["low"].get<double>();
    r.mean_medium = row["means"]["medium"].get<double>();
    r.mean_high = row["means"]["high"].get<double>();
    if (row["status"] == "N/A") {
      r.not_applicable = true;
    } else {
      r.H = row["H"].get<double>();
      r.p = row["p"].get<double>();
      r.eta_sq = row["eta_sq"].get<double>();
      r.sig_omnibus = row["sig_omnibus"].get<bool>();
      auto pairwise = [](const json& j) {
        lbas::stats::PairwiseResult pr;
        pr.p = j["p"].get<double>();
        pr.significant = j["significant"].get<bool>();
        pr.exact = j["method"] == "exact";
        return pr;
      };
      r.low_high = pairwise(row["low_high"]);
      r.low_medium = pairwise(row["low_medium"]);
      r.medium_high = pairwise(row["medium_high"]);
    }
    report.rows.push_back(std::move(r));
  }
  return report;
}

std::string render_aligned(const std::vector<std::vector<std::string>>& rows) {
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

int cmd_report(const PipelineConfig& config) {
  const fs::path stats_path = config.out / "stats.json";
  const fs::path eval_path = config.out / "eval.json";
  if (!fs::exists(stats_path) || !fs::exists(eval_path))
    throw std::runtime_error("missing stats/eval artifacts (run stats and evaluate first)");

  json stats_json = json::parse(read_file(stats_path, "stats.json"));
  json eval_json = json::parse(read_file(eval_path, "eval.json"));

  std::string text =
      lbas::report::stat_report_text(stats_from_json(stats_json)) + "\n\n";

  auto fixed = [](const json& j, const char* key, int digits) -> std::string {
    if (!j.contains(key)) return "N/A";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, j[key].get<double>());
    return buf;
  };

  std::vector<std::vector<std::string>> rows;
  rows.push_back({"Metric", "Baseline Model", "Extended Model", "Change (%)"});
  for (const auto& row : eval_json["overall"])
    rows.push_back({row["metric"].get<std::string>(), fixed(row, "baseline", 3),
                    fixed(row, "extended", 3), fixed(row, "change_pct", 2)});
  text += "Overall comparison of baseline and extended models\n\n";
  text += render_aligned(rows);

  rows.clear();
  rows.push_back(
      {"Proficiency Level", "Metric", "Baseline Model", "Extended Model", "Change (%)"});
  for (const auto& row : eval_json["per_level"])
    rows.push_back({row["level"].get<std::string>(), row["metric"].get<std::string>(),
                    fixed(row, "baseline", 3), fixed(row, "extended", 3),
                    fixed(row, "change_pct", 2)});
  text += "\nScore-specific comparison of baseline and extended models\n\n";
  text += render_aligned(rows);

  text += "\nNotes: " + eval_json["svm"]["strategy"].get<std::string>() +
          "; pooling: " + eval_json["pooling"].get<std::string>() +
          "; per-level kappa: " +
          eval_json["per_level_kappa_definition"].get<std::string>() + ".\n";
  text += "\nEffective configuration:\n" + config.effective().dump(2) + "\n";

  json combined{{"config", config.effective()},
                {"stats", stats_json},
                {"evaluation", eval_json}};

  ArtifactWriter writer(config.out);
  writer.stage("report.txt", text);
  writer.stage("report.json", combined.dump(2) + "\n");
  writer.commit();
  std::cout << "report: wrote report.txt and report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lexical-bundle corpus analytics and scoring pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  PipelineConfig config;
  std::string config_path, criteria_spec, policy_str, norm_str, features_csv;
  std::string essays_str, manifest_str, out_str, resources_str, external_str;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--essays", essays_str, "essay directory (<id>.txt files)");
  app.add_option("--manifest", manifest_str, "manifest CSV");
  app.add_option("--out", out_str, "output directory for stage artifacts");
  app.add_option("--resources", resources_str,
                 "word-list directory (or env LBAS_RESOURCES)");
  auto* seed_opt = app.add_option("--seed", config.seed, "master random seed");
  auto* threads_opt = app.add_option("--threads", config.threads, "worker thread cap");
  app.add_option("--overlap-policy", policy_str,
                 "none | subsume-longest | greedy-within-length");
  app.add_option("--norm", norm_str, "per100 | perword");
  app.add_option("--features", features_csv,
                 "comma-separated baseline feature selection");

  auto* ingest = app.add_subcommand("ingest", "load, tokenize and filter essays");
  auto* min_words_opt =
      ingest->add_option("--min-words", config.min_words, "minimum essay length");

  auto* sample = app.add_subcommand("sample", "word-count-matched stratified sample");
  std::size_t target = 0;
  auto* target_opt = sample->add_option("--target", target, "stratum word target");

  auto* bundles = app.add_subcommand("bundles", "mine the lexical-bundle inventory");
  bundles->add_option("--criteria", criteria_spec,
                      "overrides, e.g. \"3:freq=40,range=5;4:freq=20\"");

  auto* features = app.add_subcommand("features", "compute the feature matrix");
  features->add_option("--external", external_str, "external feature CSV");

  app.add_subcommand("stats", "score-level statistical battery");

  auto* evaluate = app.add_subcommand("evaluate", "baseline-vs-extended CV comparison");
  auto* c_opt = evaluate->add_option("--c", config.svm.C, "SVM cost parameter");
  auto* k_opt = evaluate->add_option("--k", config.cv_folds, "CV folds");

  app.add_subcommand("report", "render text and JSON reports");

  CLI11_PARSE(app, argc, argv);

  try {
    // Resolution order: defaults < config file < flags.
    std::uint64_t flag_seed = config.seed;
    unsigned flag_threads = config.threads;
    std::size_t flag_min_words = config.min_words;
    double flag_c = config.svm.C;
    int flag_k = config.cv_folds;
    if (!config_path.empty()) apply_config_file(config, config_path);
    if (*seed_opt) config.seed = flag_seed;
    if (*threads_opt) config.threads = flag_threads;
    if (*min_words_opt) config.min_words = flag_min_words;
    if (*c_opt) config.svm.C = flag_c;
    if (*k_opt) config.cv_folds = flag_k;
    if (!essays_str.empty()) config.essays = essays_str;
    if (!manifest_str.empty()) config.manifest = manifest_str;
    if (!out_str.empty()) config.out = out_str;
    if (!resources_str.empty()) config.resources = resources_str;
    if (!external_str.empty()) config.external = external_str;
    if (!policy_str.empty()) config.overlap_policy = lbas::parse_overlap_policy(policy_str);
    if (!norm_str.empty()) config.norm = lbas::parse_normalization(norm_str);
    if (!criteria_spec.empty()) apply_criteria_spec(config.criteria, criteria_spec);
    if (*target_opt) config.target_words = target;
    if (!features_csv.empty()) {
      config.feature_selection.clear();
      std::istringstream stream(features_csv);
      std::string name;
      while (std::getline(stream, name, ','))
        if (!name.empty()) config.feature_selection.push_back(name);
    }

    if (app.got_subcommand(ingest)) return cmd_ingest(config);
    if (app.got_subcommand(sample)) return cmd_sample(config);
    if (app.got_subcommand(bundles)) return cmd_bundles(config);
    if (app.got_subcommand(features)) return cmd_features(config);
    if (app.got_subcommand("stats")) return cmd_stats(config);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(config);
    if (app.got_subcommand("report")) return cmd_report(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
