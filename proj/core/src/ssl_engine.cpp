#include "pseudosurv/ssl_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "pseudosurv/error.hpp"
#include "pseudosurv/hashing.hpp"
#include "pseudosurv/parallel.hpp"
#include "pseudosurv/random.hpp"

namespace pseudosurv {

std::string_view to_string(Strategy s) noexcept { return s == Strategy::Supervised ? "SL" : "SSL"; }

std::string_view to_string(HmlsKind k) noexcept {
  switch (k) {
    case HmlsKind::Knn: return "knn";
    case HmlsKind::Mlp: return "mlp";
    case HmlsKind::Svm: return "svm";
    case HmlsKind::Ev: return "ev";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "sl" || text == "SL") return Strategy::Supervised;
  if (text == "ssl" || text == "SSL") return Strategy::SemiSupervised;
  throw Error(Errc::InvalidSpec, "strategy must be 'sl' or 'ssl', got '" + std::string(text) + "'");
}

HmlsKind parse_hmls(std::string_view text) {
  if (text == "knn") return HmlsKind::Knn;
  if (text == "mlp") return HmlsKind::Mlp;
  if (text == "svm") return HmlsKind::Svm;
  if (text == "ev") return HmlsKind::Ev;
  throw Error(Errc::InvalidSpec, "model must be one of knn|mlp|svm|ev, got '" + std::string(text) + "'");
}

namespace {

std::vector<ClassifierKind> members_of(HmlsKind k) {
  switch (k) {
    case HmlsKind::Knn: return {ClassifierKind::Knn};
    case HmlsKind::Mlp: return {ClassifierKind::Mlp};
    case HmlsKind::Svm: return {ClassifierKind::LinearSvm};
    case HmlsKind::Ev: return {ClassifierKind::Mlp, ClassifierKind::LinearSvm, ClassifierKind::Knn};
  }
  return {};
}

constexpr std::string_view kExternalProtocol =
    "external holdout scored once by a model refit on all training folds (SSL: labeler and augmentation rebuilt "
    "from all training folds)";

}  // namespace

void RunConfig::validate() const {
  if (folds < 2) throw Error(Errc::InvalidSpec, "folds must be >= 2");
  if (inner_folds < 2) throw Error(Errc::InvalidSpec, "inner folds must be >= 2");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(Errc::InvalidFraction, "test fraction must lie in (0, 1)");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw Error(Errc::InvalidSpec, "confidence threshold must lie in [0, 1]");
  }
  if (strategy == Strategy::SemiSupervised && !auxiliary_path) {
    throw Error(Errc::MissingAuxiliary, "semi-supervised strategy requires an auxiliary table");
  }
  for (const auto& spec : grid) validate_spec(spec);
  validate_spec(labeler);
  const auto members = members_of(hmls);
  for (const auto& spec : grid) {
    if (std::find(members.begin(), members.end(), kind_of(spec)) == members.end()) {
      throw Error(Errc::InvalidSpec, "grid entry of kind '" + std::string(to_string(kind_of(spec))) +
                                         "' does not belong to model '" + std::string(to_string(hmls)) + "'");
    }
  }
}

std::vector<ClassifierSpec> RunConfig::grid_for(ClassifierKind kind) const {
  std::vector<ClassifierSpec> out;
  for (const auto& spec : grid) {
    if (kind_of(spec) == kind) out.push_back(spec);
  }
  return out.empty() ? default_grid(kind) : out;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  nlohmann::json grids = nlohmann::json::object();
  for (auto kind : members_of(c.hmls)) grids[std::string(to_string(kind))] = c.grid_for(kind);
  j = nlohmann::json{{"labeled_path", c.labeled_path},
                     {"auxiliary_path", c.auxiliary_path ? nlohmann::json(*c.auxiliary_path) : nlohmann::json()},
                     {"feature_set", c.feature_set},
                     {"strategy", to_string(c.strategy)},
                     {"model", to_string(c.hmls)},
                     {"grids", std::move(grids)},
                     {"pca", c.pca},
                     {"folds", c.folds},
                     {"inner_folds", c.inner_folds},
                     {"test_fraction", c.test_fraction},
                     {"confidence_threshold", c.confidence_threshold},
                     {"labeler", ClassifierSpec{c.labeler}},
                     {"seed", c.seed},
                     {"decision_threshold", 0.5},
                     {"external_protocol", kExternalProtocol}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  c.labeled_path = j.at("labeled_path").get<std::string>();
  if (j.contains("auxiliary_path") && !j.at("auxiliary_path").is_null()) {
    c.auxiliary_path = j.at("auxiliary_path").get<std::string>();
  } else {
    c.auxiliary_path.reset();
  }
  c.feature_set = j.at("feature_set").get<std::string>();
  c.strategy = parse_strategy(j.at("strategy").get<std::string>());
  c.hmls = parse_hmls(j.at("model").get<std::string>());
  c.grid.clear();
  for (const auto& [_, list] : j.at("grids").items()) {
    for (const auto& spec : list) c.grid.push_back(spec.get<ClassifierSpec>());
  }
  c.pca = j.at("pca").get<PcaPolicy>();
  c.folds = j.at("folds").get<std::size_t>();
  c.inner_folds = j.at("inner_folds").get<std::size_t>();
  c.test_fraction = j.at("test_fraction").get<double>();
  c.confidence_threshold = j.at("confidence_threshold").get<double>();
  const auto labeler = j.at("labeler").get<ClassifierSpec>();
  if (!std::holds_alternative<ForestParams>(labeler)) throw Error(Errc::InvalidSpec, "labeler must be a random forest");
  c.labeler = std::get<ForestParams>(labeler);
  c.seed = j.at("seed").get<std::uint64_t>();
}

PseudoLabelSet pseudo_label(const FeatureTable& auxiliary, const ClassifierModel& labeler, const ScalerParams& scaler,
                            const PcaModel& pca, double confidence_threshold,
                            std::span<const std::string> labeler_training_ids) {
  if (auxiliary.cols() != static_cast<std::size_t>(scaler.min.size())) {
    throw Error(Errc::DimensionMismatch, "auxiliary table has " + std::to_string(auxiliary.cols()) +
                                             " features, scaler expects " + std::to_string(scaler.min.size()));
  }
  PseudoLabelSet out;
  Fnv1a h;
  h.update(labeler.fingerprint());
  for (const auto& id : labeler_training_ids) h.update(id).update(std::string_view("\n"));
  out.labeler_fingerprint = h.hex();
  if (auxiliary.rows() == 0) return out;

  const auto scores = transform_pca(pca, apply_minmax(scaler, auxiliary.values));
  const auto predictions = predict(labeler, scores);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double confidence = std::max(predictions[i].score, 1.0 - predictions[i].score);
    if (confidence < confidence_threshold) {
      ++out.dropped;
      continue;
    }
    out.auxiliary_ids.push_back(auxiliary.sample_ids[i]);
    out.labels.push_back(predictions[i].label);
    out.confidences.push_back(confidence);
    out.rows.push_back(i);
  }
  return out;
}

std::string_view StrategyResult::partition_hash() const {
  const auto dash = config_hash.find('-');
  return std::string_view(config_hash).substr(0, dash);
}

void to_json(nlohmann::json& j, const StrategyResult& r) {
  j = nlohmann::json{{"strategy", to_string(r.strategy)},
                     {"feature_set_name", r.feature_set_name},
                     {"hmls_name", r.hmls_name},
                     {"fold_accuracies", r.fold_accuracies},
                     {"mean_accuracy", r.mean_accuracy},
                     {"std_accuracy", r.std_accuracy},
                     {"external_accuracy", r.external_accuracy},
                     {"config_hash", r.config_hash},
                     {"seed", r.seed}};
}

void from_json(const nlohmann::json& j, StrategyResult& r) {
  r.strategy = parse_strategy(j.at("strategy").get<std::string>());
  r.feature_set_name = j.at("feature_set_name").get<std::string>();
  r.hmls_name = j.at("hmls_name").get<std::string>();
  r.fold_accuracies = j.at("fold_accuracies").get<std::vector<double>>();
  r.mean_accuracy = j.at("mean_accuracy").get<double>();
  r.std_accuracy = j.at("std_accuracy").get<double>();
  r.external_accuracy = j.at("external_accuracy").get<double>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
}

double mean_of(std::span<const double> v) {
  if (v.empty()) throw Error(Errc::EmptyInput, "mean of nothing");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void to_json(nlohmann::json& j, const StageAudit& s) {
  j = nlohmann::json{{"stage", s.stage}, {"ids", s.ids}, {"fingerprint", s.fingerprint}};
}

void to_json(nlohmann::json& j, const PhaseTrace& p) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : p.stages) {
    stages.push_back({{"stage", s.stage}, {"n_ids", s.ids.size()}, {"fingerprint", s.fingerprint}});
  }
  j = nlohmann::json{{"phase", p.phase},
                     {"accuracy", p.accuracy},
                     {"n_evaluated", p.evaluation_ids.size()},
                     {"pca_components", p.pca_components},
                     {"pseudo_labeled", p.pseudo_labeled},
                     {"pseudo_dropped", p.pseudo_dropped},
                     {"confidence_histogram", p.confidence_histogram},
                     {"selected", p.selected},
                     {"grid_accuracy", p.grid_accuracy},
                     {"fitting_stages", std::move(stages)}};
}

void to_json(nlohmann::json& j, const RunTrace& t) {
  j = nlohmann::json{{"holdout", t.holdout}, {"folds", t.folds}, {"phases", t.phases}};
}

std::string partition_hash(const SplitPlan& holdout, const FoldPlan& folds) {
  const nlohmann::json j{{"holdout", holdout}, {"folds", folds}};
  return fnv1a_hex(j.dump());
}

std::string settings_hash(const RunConfig& config) {
  const nlohmann::json j = config;
  return fnv1a_hex(j.dump());
}

namespace {

std::string tag(char source, const std::string& id) { return std::string(1, source) + ":" + id; }

std::string ids_fingerprint(std::string_view stage, const std::vector<std::string>& ids) {
  Fnv1a h;
  h.update(stage);
  for (const auto& id : ids) h.update(std::string_view("\n")).update(id);
  return h.hex();
}

StageAudit audit(std::string stage, std::vector<std::string> ids, std::string extra = {}) {
  std::sort(ids.begin(), ids.end());
  StageAudit a{std::move(stage), std::move(ids), {}};
  a.fingerprint = ids_fingerprint(a.stage + extra, a.ids);
  return a;
}

std::vector<OutcomeLabel> pick(std::span<const OutcomeLabel> labels, std::span<const std::size_t> rows) {
  std::vector<OutcomeLabel> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

// One fitting phase: everything is fitted on `train_rows` of the labeled
// table (plus pseudo-labeled auxiliary rows for SSL) and scored on `eval_rows`.
PhaseTrace run_phase(const RunConfig& config, const FeatureTable& labeled, const FeatureTable* auxiliary,
                     std::span<const std::size_t> train_rows, std::span<const std::size_t> eval_rows,
                     std::uint64_t phase_seed, std::string phase_name) {
  PhaseTrace trace;
  trace.phase = std::move(phase_name);
  trace.confidence_histogram.assign(10, 0);
  const auto& labels = *labeled.labels;

  std::vector<std::string> train_ids;
  for (auto r : train_rows) train_ids.push_back(tag('L', labeled.sample_ids[r]));
  for (auto r : eval_rows) trace.evaluation_ids.push_back(tag('L', labeled.sample_ids[r]));
  std::sort(trace.evaluation_ids.begin(), trace.evaluation_ids.end());

  Eigen::MatrixXd fit_raw = select_rows(labeled.values, train_rows);
  std::vector<OutcomeLabel> fit_labels = pick(labels, train_rows);
  std::vector<std::string> fit_ids = train_ids;

  if (config.strategy == Strategy::SemiSupervised) {
    const auto labeler_scaler = fit_minmax(fit_raw);
    const auto scaled = apply_minmax(labeler_scaler, fit_raw);
    const auto labeler_pca = fit_pca(scaled, config.pca);
    const auto labeler = train_classifier(config.labeler, transform_pca(labeler_pca, scaled), fit_labels,
                                          derive_seed(phase_seed, {1}));
    trace.stages.push_back(audit("labeler_scaler", train_ids));
    trace.stages.push_back(audit("labeler_pca", train_ids));
    const auto pseudo = pseudo_label(*auxiliary, labeler, labeler_scaler, labeler_pca, config.confidence_threshold,
                                     trace.stages.back().ids);
    trace.stages.push_back(audit("labeler", train_ids, pseudo.labeler_fingerprint));
    trace.stages.back().fingerprint = pseudo.labeler_fingerprint;
    trace.pseudo_labeled = pseudo.rows.size();
    trace.pseudo_dropped = pseudo.dropped;
    for (double c : pseudo.confidences) {
      const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor((c - 0.5) / 0.05)));
      ++trace.confidence_histogram[bin];
    }
    if (!pseudo.rows.empty()) {
      const Eigen::MatrixXd aux_rows = select_rows(auxiliary->values, pseudo.rows);
      Eigen::MatrixXd augmented(fit_raw.rows() + aux_rows.rows(), fit_raw.cols());
      augmented << fit_raw, aux_rows;
      fit_raw = std::move(augmented);
      fit_labels.insert(fit_labels.end(), pseudo.labels.begin(), pseudo.labels.end());
      for (const auto& id : pseudo.auxiliary_ids) fit_ids.push_back(tag('A', id));
    }
  }

  const auto scaler = fit_minmax(fit_raw);
  const auto scaled = apply_minmax(scaler, fit_raw);
  const auto pca = fit_pca(scaled, config.pca);
  const auto z_fit = transform_pca(pca, scaled);
  const auto z_eval = transform_pca(pca, apply_minmax(scaler, select_rows(labeled.values, eval_rows)));
  trace.pca_components = pca.n_components();
  trace.stages.push_back(audit("scaler", fit_ids));
  trace.stages.push_back(audit("pca", fit_ids));

  const auto inner = stratified_kfold(fit_labels, config.inner_folds, derive_seed(phase_seed, {2}));
  trace.stages.push_back(audit("grid_search", [&] {
    std::vector<std::string> touched;
    for (auto r : inner.all_indices()) touched.push_back(fit_ids[r]);
    return touched;
  }()));

  const auto members = members_of(config.hmls);
  std::vector<std::vector<Prediction>> member_predictions;
  std::vector<std::string> classifier_ids(fit_ids);
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto grid = config.grid_for(members[m]);
    const auto search = grid_search(grid, z_fit, fit_labels, inner, derive_seed(phase_seed, {3, m}));
    const auto model = train_classifier(search.best, z_fit, fit_labels, derive_seed(phase_seed, {4, m}));
    trace.selected.push_back(search.best);
    trace.grid_accuracy.push_back(search.mean_accuracy);
    member_predictions.push_back(predict(model, z_eval));
    trace.stages.push_back(audit("classifier:" + std::string(to_string(members[m])), fit_ids, model.fingerprint()));
  }
  const auto predictions = member_predictions.size() == 1 ? member_predictions.front()
                                                           : ensemble_vote(member_predictions);
  trace.accuracy = accuracy(predictions, pick(labels, eval_rows));
  return trace;
}

void check_labeled(const FeatureTable& labeled) {
  if (!labeled.labels) throw Error(Errc::MissingColumn, "labeled table has no 'label' column");
  const auto& y = *labeled.labels;
  const auto pos = std::count_if(y.begin(), y.end(), is_positive);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
    throw Error(Errc::SingleClassTraining, "labeled table must contain both classes");
  }
}

StrategyResult run_pipeline(const RunConfig& config, const FeatureTable& labeled, const FeatureTable* auxiliary,
                            RunTrace* trace_out) {
  config.validate();
  check_labeled(labeled);
  if (config.strategy == Strategy::SemiSupervised) {
    if (auxiliary == nullptr) throw Error(Errc::MissingAuxiliary, "semi-supervised run without an auxiliary table");
    if (auxiliary->feature_names != labeled.feature_names) {
      throw Error(Errc::DimensionMismatch, "auxiliary feature columns differ from the labeled table's");
    }
  }

  RunTrace trace;
  const auto& y = *labeled.labels;
  trace.holdout = stratified_holdout(y, config.test_fraction, derive_seed(config.seed, {10}));
  const auto train_labels = pick(y, trace.holdout.train_indices);
  trace.folds = remap(stratified_kfold(train_labels, config.folds, derive_seed(config.seed, {11})),
                      trace.holdout.train_indices);

  const std::size_t k = trace.folds.k();
  trace.phases.resize(k + 1);
  parallel_for(k + 1, config.jobs, [&](std::size_t phase) {
    if (phase < k) {
      const auto train_rows = trace.folds.training_indices(phase);
      trace.phases[phase] = run_phase(config, labeled, auxiliary, train_rows, trace.folds.folds[phase],
                                      derive_seed(config.seed, {20, phase}), "fold-" + std::to_string(phase));
    } else {
      trace.phases[phase] = run_phase(config, labeled, auxiliary, trace.holdout.train_indices,
                                      trace.holdout.test_indices, derive_seed(config.seed, {21}), "external");
    }
  });

  StrategyResult r;
  r.strategy = config.strategy;
  r.feature_set_name = config.feature_set;
  r.hmls_name = std::string(to_string(config.hmls));
  for (std::size_t f = 0; f < k; ++f) r.fold_accuracies.push_back(trace.phases[f].accuracy);
  r.mean_accuracy = mean_of(r.fold_accuracies);
  r.std_accuracy = sample_std_of(r.fold_accuracies);
  r.external_accuracy = trace.phases[k].accuracy;
  r.config_hash = partition_hash(trace.holdout, trace.folds) + "-" + settings_hash(config);
  r.seed = config.seed;
  if (trace_out) *trace_out = std::move(trace);
  return r;
}

}  // namespace

StrategyResult run_supervised(const RunConfig& config, const FeatureTable& labeled, RunTrace* trace) {
  RunConfig c = config;
  c.strategy = Strategy::Supervised;
  return run_pipeline(c, labeled, nullptr, trace);
}

StrategyResult run_semi_supervised(const RunConfig& config, const FeatureTable& labeled, const FeatureTable* auxiliary,
                                   RunTrace* trace) {
  RunConfig c = config;
  c.strategy = Strategy::SemiSupervised;
  if (auxiliary == nullptr) throw Error(Errc::MissingAuxiliary, "semi-supervised run without an auxiliary table");
  if (!c.auxiliary_path) c.auxiliary_path = "<in-memory>";
  return run_pipeline(c, labeled, auxiliary, trace);
}

StrategyResult run_strategy(const RunConfig& config, const FeatureTable& labeled, const FeatureTable* auxiliary,
                            RunTrace* trace) {
  return config.strategy == Strategy::Supervised ? run_supervised(config, labeled, trace)
                                                 : run_semi_supervised(config, labeled, auxiliary, trace);
}

TestResult compare_strategies(const StrategyResult& a, const StrategyResult& b) {
  if (a.fold_accuracies.size() != b.fold_accuracies.size()) {
    throw Error(Errc::FoldMismatch, "results have different fold counts");
  }
  if (a.partition_hash() != b.partition_hash()) {
    throw Error(Errc::FoldMismatch, "results were computed on different fold partitions");
  }
  return paired_t_test(a.fold_accuracies, b.fold_accuracies);
}

}  // namespace pseudosurv
