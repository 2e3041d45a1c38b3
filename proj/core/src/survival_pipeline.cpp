#include "pseudosurv/survival_pipeline.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "pseudosurv/error.hpp"
#include "pseudosurv/hashing.hpp"
#include "pseudosurv/parallel.hpp"
#include "pseudosurv/random.hpp"
#include "pseudosurv/ssl_engine.hpp"

namespace pseudosurv {

void SurvivalRunConfig::validate() const {
  if (folds < 2) throw Error(Errc::InvalidSpec, "folds must be >= 2");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(Errc::InvalidFraction, "test fraction must lie in (0, 1)");
  if (hyperparams.cwgb_learning_rate <= 0.0) throw Error(Errc::InvalidSpec, "cwgb_learning_rate must be positive");
  if (hyperparams.rsf_trees == 0) throw Error(Errc::InvalidSpec, "rsf_trees must be positive");
  if (hyperparams.cox_ridge < 0.0) throw Error(Errc::InvalidSpec, "cox_ridge must be >= 0");
  if (hyperparams.fsvm_step_size <= 0.0) throw Error(Errc::InvalidSpec, "fsvm_step_size must be positive");
}

void to_json(nlohmann::json& j, const SurvivalRunConfig& c) {
  j = nlohmann::json{{"features_path", c.features_path},
                     {"model", to_string(c.kind)},
                     {"risk_rule", to_string(c.risk_rule)},
                     {"pca", c.pca},
                     {"folds", c.folds},
                     {"test_fraction", c.test_fraction},
                     {"hyperparams", c.hyperparams},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SurvivalRunConfig& c) {
  c.features_path = j.at("features_path").get<std::string>();
  c.kind = parse_survival_kind(j.at("model").get<std::string>());
  c.risk_rule = parse_risk_rule(j.at("risk_rule").get<std::string>());
  c.pca = j.at("pca").get<PcaPolicy>();
  c.folds = j.at("folds").get<std::size_t>();
  c.test_fraction = j.at("test_fraction").get<double>();
  const auto& h = j.at("hyperparams");
  auto& p = c.hyperparams;
  p.cox_ridge = h.at("cox_ridge").get<double>();
  p.cox_max_iterations = h.at("cox_max_iterations").get<std::size_t>();
  p.cwgb_rounds = h.at("cwgb_rounds").get<std::size_t>();
  p.cwgb_learning_rate = h.at("cwgb_learning_rate").get<double>();
  p.rsf_trees = h.at("rsf_trees").get<std::size_t>();
  p.rsf_min_events_leaf = h.at("rsf_min_events_leaf").get<std::size_t>();
  p.fsvm_alpha = h.at("fsvm_alpha").get<double>();
  p.fsvm_steps = h.at("fsvm_steps").get<std::size_t>();
  p.fsvm_step_size = h.at("fsvm_step_size").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const SurvivalRunResult& r) {
  j = nlohmann::json{{"model", r.model},
                     {"fold_c_indices", r.fold_c_indices},
                     {"mean_c_index", r.mean_c_index},
                     {"std_c_index", r.std_c_index},
                     {"external_c_index", r.external_c_index},
                     {"pca_components", r.pca_components},
                     {"risk_threshold", r.risk_threshold},
                     {"n_high", r.n_high},
                     {"n_low", r.n_low},
                     {"log_rank", r.log_rank ? nlohmann::json(*r.log_rank) : nlohmann::json()},
                     {"observed_time_threshold", r.observed_time_threshold},
                     {"holdout", r.holdout},
                     {"folds", r.folds},
                     {"config_hash", r.config_hash}};
}

namespace {

struct FoldOutcome {
  double c_index = 0.0;
  std::size_t components = 0;
  std::vector<double> train_risk;
  std::vector<double> eval_risk;
};

std::vector<SurvivalRecord> pick(std::span<const SurvivalRecord> all, std::span<const std::size_t> rows) {
  std::vector<SurvivalRecord> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(all[r]);
  return out;
}

FoldOutcome fit_and_score(const SurvivalRunConfig& config, const FeatureTable& table,
                          std::span<const std::size_t> train_rows, std::span<const std::size_t> eval_rows,
                          std::uint64_t seed) {
  const auto& records = *table.survival;
  const Eigen::MatrixXd raw = select_rows(table.values, train_rows);
  const auto scaler = fit_minmax(raw);
  const auto scaled = apply_minmax(scaler, raw);
  const auto pca = fit_pca(scaled, config.pca);
  const auto z_train = transform_pca(pca, scaled);
  const auto z_eval = transform_pca(pca, apply_minmax(scaler, select_rows(table.values, eval_rows)));
  const auto train_records = pick(records, train_rows);
  const auto model = fit_survival(config.kind, z_train, train_records, config.hyperparams, seed);

  FoldOutcome out;
  out.components = pca.n_components();
  out.train_risk = predict_risk(model, z_train);
  out.eval_risk = predict_risk(model, z_eval);
  out.c_index = concordance_index(pick(records, eval_rows), out.eval_risk);
  return out;
}

// Event status as the stratum; falls back to a single stratum when one
// status is too rare to spread over every fold.
std::vector<OutcomeLabel> strata(std::span<const SurvivalRecord> records, std::size_t min_count) {
  std::size_t events = 0;
  for (const auto& r : records) events += r.event ? 1 : 0;
  const std::size_t censored = records.size() - events;
  const bool stratify = events >= min_count && censored >= min_count;
  std::vector<OutcomeLabel> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    out.push_back(stratify && !r.event ? OutcomeLabel::Alive : OutcomeLabel::Deceased);
  }
  return out;
}

}  // namespace

SurvivalRunResult run_survival(const SurvivalRunConfig& config, const FeatureTable& table) {
  config.validate();
  if (!table.survival) throw Error(Errc::MissingColumn, "table has no 'time'/'event' columns");
  const auto& records = *table.survival;

  SurvivalRunResult result;
  result.model = std::string(to_string(config.kind));
  const auto outer_strata = strata(records, 2);
  result.holdout = stratified_holdout(outer_strata, config.test_fraction, derive_seed(config.seed, {10}));
  const auto train_records = pick(records, result.holdout.train_indices);
  result.folds = remap(stratified_kfold(strata(train_records, config.folds), config.folds,
                                        derive_seed(config.seed, {11})),
                       result.holdout.train_indices);

  const std::size_t k = result.folds.k();
  std::vector<FoldOutcome> outcomes(k + 1);
  parallel_for(k + 1, config.jobs, [&](std::size_t phase) {
    if (phase < k) {
      outcomes[phase] = fit_and_score(config, table, result.folds.training_indices(phase), result.folds.folds[phase],
                                      derive_seed(config.seed, {20, phase}));
    } else {
      outcomes[phase] = fit_and_score(config, table, result.holdout.train_indices, result.holdout.test_indices,
                                      derive_seed(config.seed, {21}));
    }
  });

  for (std::size_t f = 0; f <= k; ++f) result.pca_components.push_back(outcomes[f].components);
  for (std::size_t f = 0; f < k; ++f) result.fold_c_indices.push_back(outcomes[f].c_index);
  result.mean_c_index = mean_of(result.fold_c_indices);
  result.std_c_index = sample_std_of(result.fold_c_indices);

  const auto& external = outcomes[k];
  result.external_c_index = external.c_index;
  result.risk_threshold = central_value(external.train_risk, config.risk_rule);
  const auto groups = group_by_score(external.eval_risk, result.risk_threshold);
  const auto test_records = pick(records, result.holdout.test_indices);
  std::vector<SurvivalRecord> high, low;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    (groups[i] == RiskGroup::High ? high : low).push_back(test_records[i]);
  }
  result.n_high = high.size();
  result.n_low = low.size();
  if (!high.empty()) result.km_high = kaplan_meier(high);
  if (!low.empty()) result.km_low = kaplan_meier(low);
  const bool any_event = std::any_of(test_records.begin(), test_records.end(), [](const auto& r) { return r.event; });
  if (!high.empty() && !low.empty() && any_event) result.log_rank = log_rank(high, low);
  if (any_event) result.observed_time_threshold = assign_risk_groups(test_records, config.risk_rule).threshold;

  const nlohmann::json echo = config;
  result.config_hash = partition_hash(result.holdout, result.folds) + "-" + fnv1a_hex(echo.dump());
  return result;
}

}  // namespace pseudosurv
