#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pseudosurv/dataset.hpp"
#include "pseudosurv/pca.hpp"
#include "pseudosurv/preprocess.hpp"
#include "pseudosurv/stats.hpp"
#include "pseudosurv/survival.hpp"

namespace pseudosurv {

struct SurvivalRunConfig {
  std::string features_path;
  SurvivalKind kind = SurvivalKind::Coxr;
  RiskRule risk_rule = RiskRule::Median;
  PcaPolicy pca = VarianceThreshold{0.95};
  std::size_t folds = 5;
  double test_fraction = 0.2;
  SurvivalHyperparams hyperparams;
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

void to_json(nlohmann::json& j, const SurvivalRunConfig& c);
void from_json(const nlohmann::json& j, SurvivalRunConfig& c);

struct SurvivalRunResult {
  std::string model;
  std::vector<double> fold_c_indices;
  double mean_c_index = 0.0;
  double std_c_index = 0.0;
  double external_c_index = 0.0;
  std::vector<std::size_t> pca_components;  ///< per fold, then external
  /// Cut on predicted risk, taken from the training-set risks by risk_rule.
  double risk_threshold = 0.0;
  std::size_t n_high = 0;
  std::size_t n_low = 0;
  std::optional<TestResult> log_rank;  ///< absent if a predicted group is empty
  KmCurve km_high;
  KmCurve km_low;
  /// Observed-time grouping of the external set, for reference.
  double observed_time_threshold = 0.0;
  SplitPlan holdout;
  FoldPlan folds;
  std::string config_hash;
};

void to_json(nlohmann::json& j, const SurvivalRunResult& r);

/// k-fold CV (scaler + PCA + estimator per fold, stratified by event status)
/// on the training part of a holdout split, then a model refit on all folds
/// scored once on the holdout: C-index, predicted risk groups, KM and log-rank.
SurvivalRunResult run_survival(const SurvivalRunConfig& config, const FeatureTable& table);

}  // namespace pseudosurv
