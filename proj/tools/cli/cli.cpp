#include "cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pseudosurv/dataset.hpp"
#include "pseudosurv/error.hpp"
#include "pseudosurv/report.hpp"
#include "pseudosurv/ssl_engine.hpp"
#include "pseudosurv/stats.hpp"
#include "pseudosurv/survival.hpp"
#include "pseudosurv/survival_pipeline.hpp"

namespace pseudosurv::cli {
namespace {

using Clock = std::chrono::steady_clock;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidSpec, "'" + path + "' is not valid JSON: " + e.what());
  }
}

// A JSON config mirrors the flags: {"pca-var": 0.9, "svg": true, ...}.
// Its entries become tokens placed before the user's own, and every option
// keeps its last value, so explicit flags win.
std::vector<std::string> config_tokens(const nlohmann::json& config) {
  if (!config.is_object()) throw Error(Errc::InvalidSpec, "config file must hold a JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : config.items()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (flag == "config") throw Error(Errc::InvalidSpec, "config files cannot include other config files");
    flag = "--" + flag;
    auto scalar = [](const nlohmann::json& v) {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      if (v.is_number()) return format_number(v.get<double>());
      throw Error(Errc::InvalidSpec, "unsupported config value " + v.dump());
    };
    if (value.is_boolean()) {
      if (value.get<bool>()) tokens.push_back(flag);
    } else if (value.is_array()) {
      if (value.size() != 1) throw Error(Errc::InvalidSpec, "config key '" + key + "' takes a single value");
      tokens.push_back(flag);
      tokens.push_back(scalar(value.front()));
    } else {
      tokens.push_back(flag);
      tokens.push_back(scalar(value));
    }
  }
  return tokens;
}

std::optional<std::string> find_config_path(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::Data: return kExitData;
    case ErrorCategory::Numerical: return kExitNumerical;
    case ErrorCategory::Config:
    case ErrorCategory::Io: return kExitConfig;
  }
  return kExitInternal;
}

FeatureTable load_auxiliary(const std::string& path) {
  auto aux = load_feature_table(path, false, false);
  // Outcome columns in the auxiliary cohort are never read.
  aux.labels.reset();
  aux.survival.reset();
  return aux;
}

void finish_report(RunReport& report, const std::string& out_dir, bool timing, Clock::time_point start,
                   std::ostream& out) {
  if (timing) report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  const auto manifest = emit_report(report, out_dir);
  for (const auto& name : manifest) out << "wrote " << (std::filesystem::path(out_dir) / name).string() << '\n';
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---- subcommands --------------------------------------------------------------

struct ValidateArgs {
  std::string features;
  bool labels = false;
  bool survival = false;
  std::string out;
};

int cmd_validate(const ValidateArgs& a, std::ostream& out) {
  nlohmann::json doc{{"features", a.features}};
  int code = kExitOk;
  try {
    const auto table = load_feature_table(a.features, a.labels, a.survival);
    const auto report = validate_table(table);
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks) {
      nlohmann::json issues = nlohmann::json::array();
      for (const auto& i : c.issues) {
        issues.push_back({{"detail", i.detail},
                          {"row", i.row ? nlohmann::json(*i.row) : nlohmann::json()},
                          {"col", i.col ? nlohmann::json(*i.col) : nlohmann::json()}});
      }
      checks.push_back({{"name", c.name}, {"passed", c.passed}, {"issues", std::move(issues)}});
    }
    doc["parsed"] = true;
    doc["rows"] = table.rows();
    doc["features_count"] = table.cols();
    doc["checks"] = std::move(checks);
    doc["ok"] = report.ok();
    if (!report.ok()) code = kExitData;
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::Data) throw;
    doc["parsed"] = false;
    doc["error"] = e.what();
    doc["ok"] = false;
    code = kExitData;
  }
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!a.out.empty()) {
    std::filesystem::create_directories(a.out);
    std::ofstream f(std::filesystem::path(a.out) / "validation.json", std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot write validation.json into '" + a.out + "'");
    f << text;
  }
  return code;
}

struct SynthArgs {
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  a.spec.validate();
  const auto cohort = generate_synthetic_cohort(a.spec, a.seed);
  std::filesystem::create_directories(a.out);
  const std::filesystem::path dir(a.out);
  save_feature_table(cohort.labeled, dir / "labeled.csv");
  out << "wrote " << (dir / "labeled.csv").string() << '\n';
  if (cohort.auxiliary.rows() > 0) {
    save_feature_table(cohort.auxiliary, dir / "auxiliary.csv");
    out << "wrote " << (dir / "auxiliary.csv").string() << '\n';
  }
  std::ofstream meta(dir / "synth.json", std::ios::binary);
  if (!meta) throw Error(Errc::IoError, "cannot write synth.json into '" + a.out + "'");
  meta << nlohmann::json{{"spec", a.spec}, {"seed", a.seed}, {"version", tool_version()}}.dump(2) << '\n';
  out << "wrote " << (dir / "synth.json").string() << '\n';
  return kExitOk;
}

struct ClassifyArgs {
  std::string features;
  std::string aux;
  std::string mode = "sl";
  std::string model = "knn";
  std::optional<double> pca_var;
  std::optional<std::size_t> pca_components;
  std::size_t folds = 5;
  std::size_t inner_folds = 3;
  double test_fraction = 0.2;
  double threshold = 0.0;
  std::size_t labeler_trees = 100;
  std::string grid;
  std::string feature_set = "features";
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 1;
  bool timing = false;
  bool svg = false;
};

PcaPolicy pca_policy(const std::optional<double>& var, const std::optional<std::size_t>& count) {
  if (var && count) throw Error(Errc::InvalidSpec, "--pca-var and --pca-components are mutually exclusive");
  if (count) return ComponentCount{*count};
  return VarianceThreshold{var.value_or(0.95)};
}

int cmd_classify(const ClassifyArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  RunConfig config;
  config.labeled_path = a.features;
  config.strategy = parse_strategy(a.mode);
  if (config.strategy == Strategy::SemiSupervised && a.aux.empty()) {
    throw Error(Errc::MissingAuxiliary, "--mode ssl requires --aux");
  }
  if (!a.aux.empty()) config.auxiliary_path = a.aux;
  config.hmls = parse_hmls(a.model);
  config.pca = pca_policy(a.pca_var, a.pca_components);
  config.folds = a.folds;
  config.inner_folds = a.inner_folds;
  config.test_fraction = a.test_fraction;
  config.confidence_threshold = a.threshold;
  config.labeler.n_trees = a.labeler_trees;
  config.feature_set = a.feature_set;
  config.seed = a.seed;
  config.jobs = a.jobs;
  if (!a.grid.empty()) {
    const auto grid = read_json(a.grid);
    if (!grid.is_array()) throw Error(Errc::InvalidSpec, "--grid file must hold a JSON array of classifier specs");
    for (const auto& spec : grid) config.grid.push_back(spec.get<ClassifierSpec>());
  }
  config.validate();

  const auto labeled = load_feature_table(a.features, true, false);
  std::optional<FeatureTable> aux;
  if (config.strategy == Strategy::SemiSupervised) aux = load_auxiliary(a.aux);

  RunTrace trace;
  const auto result = run_strategy(config, labeled, aux ? &*aux : nullptr, &trace);

  RunReport report;
  report.command = "classify";
  report.config = config;
  report.cells.push_back(result);
  report.traces.push_back(trace);
  report.notes.push_back("external accuracy: one model refit on all training folds, scored once on the holdout");
  if (config.strategy == Strategy::SemiSupervised) {
    report.notes.push_back("pseudo-labels: single pass by a random forest fitted on each phase's training rows");
  }
  report.svg = a.svg;

  out << result.hmls_name << ' ' << to_string(result.strategy) << ": "
      << format_mean_std(result.mean_accuracy, result.std_accuracy) << " (external " << fixed(result.external_accuracy, 2)
      << ")\n";
  finish_report(report, a.out, a.timing, start, out);
  return kExitOk;
}

struct SurviveArgs {
  std::string features;
  std::string model = "coxr";
  std::string risk_rule;
  std::optional<double> pca_var;
  std::optional<std::size_t> pca_components;
  std::size_t folds = 5;
  double test_fraction = 0.2;
  SurvivalHyperparams hyper;
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 1;
  bool timing = false;
  bool svg = false;
};

int cmd_survive(const SurviveArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  SurvivalRunConfig config;
  config.features_path = a.features;
  config.kind = parse_survival_kind(a.model);
  config.risk_rule = parse_risk_rule(a.risk_rule);
  config.pca = pca_policy(a.pca_var, a.pca_components);
  config.folds = a.folds;
  config.test_fraction = a.test_fraction;
  config.hyperparams = a.hyper;
  config.seed = a.seed;
  config.jobs = a.jobs;
  config.validate();

  const auto table = load_feature_table(a.features, false, true);
  const auto result = run_survival(config, table);

  RunReport report;
  report.command = "survive";
  report.config = config;
  report.survival.push_back(result);
  if (result.n_high > 0) report.km_curves.emplace_back("high", result.km_high);
  if (result.n_low > 0) report.km_curves.emplace_back("low", result.km_low);
  if (result.log_rank) report.log_rank.push_back({"high_vs_low", *result.log_rank});
  report.notes.push_back("risk groups: holdout samples with predicted risk above the " +
                         std::string(to_string(config.risk_rule)) + " training-set risk are high risk");
  report.svg = a.svg;

  out << result.model << ": C-index " << format_mean_std(result.mean_c_index, result.std_c_index) << " (external "
      << fixed(result.external_c_index, 2) << ")";
  if (result.log_rank) out << ", log-rank p = " << std::setprecision(4) << result.log_rank->p_value;
  out << '\n';
  finish_report(report, a.out, a.timing, start, out);
  return kExitOk;
}

struct HdtsArgs {
  std::string features;
  std::string group_by = "label";
  std::string risk_rule = "median";
  std::size_t permutations = 999;
  double shrinkage = 0.1;
  bool exhaustive = false;
  std::uint64_t seed = 0;
  std::string out;
  bool timing = false;
};

int cmd_hdts(const HdtsArgs& a, std::ostream& out) {
  const auto start = Clock::now();
  if (a.group_by != "label" && a.group_by != "risk") {
    throw Error(Errc::InvalidSpec, "--group-by must be 'label' or 'risk'");
  }
  const bool by_risk = a.group_by == "risk";
  const auto rule = parse_risk_rule(a.risk_rule);
  const auto table = load_feature_table(a.features, !by_risk, by_risk);
  std::vector<std::size_t> rows_a, rows_b;
  std::string name;
  if (by_risk) {
    const auto groups = assign_risk_groups(*table.survival, rule);
    for (std::size_t i = 0; i < groups.groups.size(); ++i) {
      (groups.groups[i] == RiskGroup::High ? rows_a : rows_b).push_back(i);
    }
    name = "high_vs_low";
  } else {
    for (std::size_t i = 0; i < table.rows(); ++i) {
      ((*table.labels)[i] == OutcomeLabel::Deceased ? rows_a : rows_b).push_back(i);
    }
    name = "label2_vs_label1";
  }
  HdtsOptions options;
  options.permutations = a.permutations;
  options.shrinkage = a.shrinkage;
  options.exhaustive = a.exhaustive;
  options.seed = a.seed;
  const auto result = hdts_test(select_rows(table.values, rows_a), select_rows(table.values, rows_b), options);

  RunReport report;
  report.command = "hdts";
  report.config = {{"features_path", a.features},
                   {"group_by", a.group_by},
                   {"risk_rule", by_risk ? nlohmann::json(to_string(rule)) : nlohmann::json()},
                   {"permutations", a.permutations},
                   {"shrinkage", a.shrinkage},
                   {"exhaustive", a.exhaustive},
                   {"seed", a.seed},
                   {"group_sizes", {rows_a.size(), rows_b.size()}}};
  report.hdts.push_back({name, result});
  report.notes.push_back(
      "statistic: ridge-regularised two-sample Hotelling T^2, ridge = shrinkage * mean pooled variance; p-value from "
      "label permutations");
  out << name << ": T = " << format_number(result.statistic) << ", p = " << format_number(result.p_value) << '\n';
  if (!a.out.empty()) finish_report(report, a.out, a.timing, start, out);
  return kExitOk;
}

struct KmArgs {
  std::string features;
  std::string group_by = "none";
  std::string risk_rule = "median";
  std::string out;
  bool svg = false;
};

int cmd_km(const KmArgs& a, std::ostream& out) {
  if (a.group_by != "none" && a.group_by != "label" && a.group_by != "risk") {
    throw Error(Errc::InvalidSpec, "--group-by must be 'none', 'label' or 'risk'");
  }
  const auto table = load_feature_table(a.features, a.group_by == "label", true);
  const auto& records = *table.survival;
  std::map<std::string, std::vector<SurvivalRecord>> groups;
  if (a.group_by == "none") {
    groups["all"] = records;
  } else if (a.group_by == "label") {
    for (std::size_t i = 0; i < records.size(); ++i) {
      groups["label" + std::to_string(class_code((*table.labels)[i]))].push_back(records[i]);
    }
  } else {
    const auto assignment = assign_risk_groups(records, parse_risk_rule(a.risk_rule));
    for (std::size_t i = 0; i < records.size(); ++i) {
      groups[std::string(to_string(assignment.groups[i]))].push_back(records[i]);
    }
  }

  RunReport report;
  report.command = "km";
  report.config = {{"features_path", a.features}, {"group_by", a.group_by}};
  if (a.group_by == "risk") report.config["risk_rule"] = a.risk_rule;
  for (const auto& [name, members] : groups) {
    const auto curve = kaplan_meier(members);
    out << name << ": n = " << curve.n << ", event times = " << curve.times.size() << '\n';
    report.km_curves.emplace_back(name, curve);
  }
  if (groups.size() == 2) {
    const auto& first = groups.begin()->second;
    const auto& second = std::next(groups.begin())->second;
    const auto result = log_rank(first, second);
    report.log_rank.push_back({groups.begin()->first + "_vs_" + std::next(groups.begin())->first, result});
    out << "log-rank: chi2 = " << format_number(result.statistic) << ", p = " << format_number(result.p_value) << '\n';
  }
  report.svg = a.svg;
  finish_report(report, a.out, false, Clock::now(), out);
  return kExitOk;
}

struct CompareArgs {
  std::string report_a;
  std::string report_b;
  std::string out;
};

std::vector<StrategyResult> cells_of(const std::string& path) {
  const auto doc = read_json(path);
  if (!doc.contains("cells") || !doc.at("cells").is_array() || doc.at("cells").empty()) {
    throw Error(Errc::InvalidSpec, "'" + path + "' holds no strategy results");
  }
  return doc.at("cells").get<std::vector<StrategyResult>>();
}

int cmd_compare(const CompareArgs& a, std::ostream& out) {
  const auto cells_a = cells_of(a.report_a);
  const auto cells_b = cells_of(a.report_b);
  RunReport report;
  report.command = "compare";
  report.config = {{"report_a", a.report_a}, {"report_b", a.report_b}};

  auto key = [](const StrategyResult& r) { return r.feature_set_name + "/" + r.hmls_name; };
  std::vector<std::pair<const StrategyResult*, const StrategyResult*>> pairs;
  if (cells_a.size() == 1 && cells_b.size() == 1) {
    pairs.emplace_back(&cells_a[0], &cells_b[0]);
  } else {
    for (const auto& ca : cells_a) {
      for (const auto& cb : cells_b) {
        if (key(ca) == key(cb)) pairs.emplace_back(&ca, &cb);
      }
    }
  }
  if (pairs.empty()) throw Error(Errc::InvalidSpec, "no cells with matching feature set and model");

  out << std::left << std::setw(28) << "cell" << std::setw(10) << "mean_a" << std::setw(10) << "mean_b"
      << std::setw(12) << "t" << std::setw(12) << "p" << "verdict\n";
  for (const auto& [ca, cb] : pairs) {
    const auto result = compare_strategies(*ca, *cb);
    const std::string name = key(*ca) + ":" + std::string(to_string(ca->strategy)) + "_vs_" +
                             std::string(to_string(cb->strategy));
    report.comparisons.push_back({name, result});
    const char* verdict = result.p_value >= 0.05 ? "no difference"
                          : ca->mean_accuracy > cb->mean_accuracy ? "a better"
                                                                  : "b better";
    out << std::setw(28) << key(*ca) << std::setw(10) << fixed(ca->mean_accuracy, 4) << std::setw(10)
        << fixed(cb->mean_accuracy, 4) << std::setw(12) << fixed(result.statistic, 4) << std::setw(12)
        << fixed(result.p_value, 6) << verdict << '\n';
  }
  if (!a.out.empty()) finish_report(report, a.out, false, Clock::now(), out);
  return kExitOk;
}

}  // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pseudo-labeling classification and survival analysis toolkit", "pseudosurv"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;  // consumed before parsing; declared so it is a known flag
  int jobs = 1;
  bool timing = false;
  bool svg = false;
  auto add_common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--config", config_path, "JSON file of flag values; explicit flags override it");
    if (with_jobs) sub->add_option("--jobs", jobs, "Worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  };

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Parse and check a feature table");
  validate->add_option("--features", va.features, "Feature table")->required();
  validate->add_flag("--labels", va.labels, "Require a label column");
  validate->add_flag("--survival", va.survival, "Require time and event columns");
  validate->add_option("--out", va.out, "Also write validation.json here");
  add_common(validate, false);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic cohort");
  synth->add_option("--n-labeled", sa.spec.n_labeled)->capture_default_str();
  synth->add_option("--n-auxiliary", sa.spec.n_auxiliary)->capture_default_str();
  synth->add_option("--n-features", sa.spec.n_features, "Total feature count")->capture_default_str();
  synth->add_option("--noise-features", sa.spec.noise_features)->capture_default_str();
  synth->add_option("--separation", sa.spec.class_separation)->capture_default_str();
  synth->add_option("--survival-effect", sa.spec.survival_effect)->capture_default_str();
  synth->add_option("--censoring-rate", sa.spec.censoring_rate)->capture_default_str();
  synth->add_option("--seed", sa.seed)->capture_default_str();
  synth->add_option("--out", sa.out, "Output directory")->required();
  add_common(synth, false);

  ClassifyArgs ca;
  auto* classify = app.add_subcommand("classify", "Cross-validated SL or SSL classification");
  classify->add_option("--features", ca.features, "Labeled feature table")->required();
  classify->add_option("--aux", ca.aux, "Auxiliary (unlabeled) feature table");
  classify->add_option("--mode", ca.mode, "sl or ssl")->capture_default_str();
  classify->add_option("--model", ca.model, "knn, mlp, svm or ev")->capture_default_str();
  classify->add_option("--pca-var", ca.pca_var, "Retained variance fraction (default 0.95)");
  classify->add_option("--pca-components", ca.pca_components, "Fixed component count");
  classify->add_option("--folds", ca.folds)->capture_default_str();
  classify->add_option("--inner-folds", ca.inner_folds)->capture_default_str();
  classify->add_option("--test-fraction", ca.test_fraction)->capture_default_str();
  classify->add_option("--threshold", ca.threshold, "Minimum pseudo-label confidence")->capture_default_str();
  classify->add_option("--labeler-trees", ca.labeler_trees)->capture_default_str();
  classify->add_option("--grid", ca.grid, "JSON array of classifier specs to search");
  classify->add_option("--feature-set", ca.feature_set)->capture_default_str();
  classify->add_option("--seed", ca.seed)->capture_default_str();
  classify->add_option("--out", ca.out, "Output directory")->required();
  classify->add_flag("--timing", timing, "Write timing.json");
  classify->add_flag("--svg", svg);
  add_common(classify, true);

  SurviveArgs su;
  auto* survive = app.add_subcommand("survive", "Cross-validated survival model with risk grouping");
  survive->add_option("--features", su.features, "Table with time and event columns")->required();
  survive->add_option("--model", su.model, "coxr, cwgb, rsf or fsvm")->capture_default_str();
  survive->add_option("--risk-rule", su.risk_rule, "median or mean")->required();
  survive->add_option("--pca-var", su.pca_var, "Retained variance fraction (default 0.95)");
  survive->add_option("--pca-components", su.pca_components, "Fixed component count");
  survive->add_option("--folds", su.folds)->capture_default_str();
  survive->add_option("--test-fraction", su.test_fraction)->capture_default_str();
  survive->add_option("--cox-ridge", su.hyper.cox_ridge)->capture_default_str();
  survive->add_option("--cox-max-iterations", su.hyper.cox_max_iterations)->capture_default_str();
  survive->add_option("--cwgb-rounds", su.hyper.cwgb_rounds)->capture_default_str();
  survive->add_option("--cwgb-learning-rate", su.hyper.cwgb_learning_rate)->capture_default_str();
  survive->add_option("--rsf-trees", su.hyper.rsf_trees)->capture_default_str();
  survive->add_option("--rsf-min-events-leaf", su.hyper.rsf_min_events_leaf)->capture_default_str();
  survive->add_option("--fsvm-alpha", su.hyper.fsvm_alpha)->capture_default_str();
  survive->add_option("--fsvm-steps", su.hyper.fsvm_steps)->capture_default_str();
  survive->add_option("--fsvm-step-size", su.hyper.fsvm_step_size)->capture_default_str();
  survive->add_option("--seed", su.seed)->capture_default_str();
  survive->add_option("--out", su.out, "Output directory")->required();
  survive->add_flag("--timing", timing, "Write timing.json");
  survive->add_flag("--svg", svg);
  add_common(survive, true);

  HdtsArgs ha;
  auto* hdts = app.add_subcommand("hdts", "Two-sample mean test for p > n");
  hdts->add_option("--features", ha.features, "Feature table")->required();
  hdts->add_option("--group-by", ha.group_by, "label or risk")->capture_default_str();
  hdts->add_option("--risk-rule", ha.risk_rule, "median or mean (with --group-by risk)")->capture_default_str();
  hdts->add_option("--permutations", ha.permutations)->capture_default_str();
  hdts->add_option("--shrinkage", ha.shrinkage)->capture_default_str();
  hdts->add_flag("--exhaustive", ha.exhaustive, "Enumerate every split instead of sampling");
  hdts->add_option("--seed", ha.seed)->capture_default_str();
  hdts->add_option("--out", ha.out, "Output directory");
  hdts->add_flag("--timing", timing, "Write timing.json");
  add_common(hdts, false);

  KmArgs ka;
  auto* km = app.add_subcommand("km", "Kaplan-Meier curves and log-rank test");
  km->add_option("--features", ka.features, "Table with time and event columns")->required();
  km->add_option("--group-by", ka.group_by, "none, label or risk")->capture_default_str();
  km->add_option("--risk-rule", ka.risk_rule, "median or mean (with --group-by risk)")->capture_default_str();
  km->add_option("--out", ka.out, "Output directory")->required();
  km->add_flag("--svg", svg);
  add_common(km, false);

  CompareArgs co;
  auto* compare = app.add_subcommand("compare", "Paired t-test of two classification reports");
  compare->add_option("--report-a", co.report_a)->required();
  compare->add_option("--report-b", co.report_b)->required();
  compare->add_option("--out", co.out, "Output directory");
  add_common(compare, false);

  try {
    if (const auto path = find_config_path(args); path && !args.empty()) {
      auto tokens = config_tokens(read_json(*path));
      args.insert(args.begin() + 1, tokens.begin(), tokens.end());
    }
    std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }

  ca.jobs = jobs;
  su.jobs = jobs;
  ca.timing = su.timing = ha.timing = timing;
  ca.svg = su.svg = ka.svg = svg;
  try {
    if (validate->parsed()) return cmd_validate(va, out);
    if (synth->parsed()) return cmd_synth(sa, out);
    if (classify->parsed()) return cmd_classify(ca, out);
    if (survive->parsed()) return cmd_survive(su, out);
    if (hdts->parsed()) return cmd_hdts(ha, out);
    if (km->parsed()) return cmd_km(ka, out);
    if (compare->parsed()) return cmd_compare(co, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace pseudosurv::cli
