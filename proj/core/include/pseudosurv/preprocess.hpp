#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pseudosurv/dataset.hpp"

namespace pseudosurv {

/// Column-wise min/max of the rows a scaler was fitted on.
struct ScalerParams {
  Eigen::VectorXd min;
  Eigen::VectorXd max;
};

ScalerParams fit_minmax(const Eigen::MatrixXd& train);

/// (x - min) / (max - min) per column. Constant columns map to 0. Values
/// outside the fitted range are not clipped.
Eigen::MatrixXd apply_minmax(const ScalerParams& params, const Eigen::MatrixXd& m);

struct SplitPlan {
  std::vector<std::size_t> train_indices;  // ascending
  std::vector<std::size_t> test_indices;   // ascending
};

struct FoldPlan {
  std::vector<std::vector<std::size_t>> folds;  // each ascending

  std::size_t k() const noexcept { return folds.size(); }
  /// Union of every fold except `held_out`, ascending.
  std::vector<std::size_t> training_indices(std::size_t held_out) const;
  /// Union of all folds, ascending.
  std::vector<std::size_t> all_indices() const;
};

/// Per class, round-half-to-even(count * test_fraction) rows go to the test
/// side, clamped to [1, count - 1]; membership is a seeded shuffle.
SplitPlan stratified_holdout(std::span<const OutcomeLabel> labels, double test_fraction, std::uint64_t seed);

/// Shuffles each class, then deals class 1 followed by class 2 round-robin
/// over the folds, so both fold sizes and per-class counts differ by <= 1.
FoldPlan stratified_kfold(std::span<const OutcomeLabel> labels, std::size_t k, std::uint64_t seed);

/// Maps local fold indices through `rows` (e.g. fold plan built on a subset).
FoldPlan remap(const FoldPlan& plan, std::span<const std::size_t> rows);

void to_json(nlohmann::json& j, const ScalerParams& p);
void to_json(nlohmann::json& j, const SplitPlan& p);
void from_json(const nlohmann::json& j, SplitPlan& p);
void to_json(nlohmann::json& j, const FoldPlan& p);
void from_json(const nlohmann::json& j, FoldPlan& p);

}  // namespace pseudosurv
