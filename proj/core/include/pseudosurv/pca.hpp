#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <variant>

#include <nlohmann/json_fwd.hpp>

namespace pseudosurv {

/// Keep the fewest components whose cumulative explained variance reaches
/// `fraction`.
struct VarianceThreshold {
  double fraction = 0.95;
};

struct ComponentCount {
  std::size_t count = 1;
};

using PcaPolicy = std::variant<VarianceThreshold, ComponentCount>;

struct PcaModel {
  Eigen::VectorXd mean;                      // p
  Eigen::MatrixXd components;                // q x p, orthonormal rows
  Eigen::VectorXd explained_variance_ratio;  // q, nonincreasing

  std::size_t n_components() const noexcept { return static_cast<std::size_t>(components.rows()); }
  std::size_t n_features() const noexcept { return static_cast<std::size_t>(mean.size()); }
};

/// Principal directions from the thin SVD of the row-centred training
/// matrix. Sign convention: the largest-magnitude entry of every component
/// is nonnegative (lowest index wins ties). Retained count is capped at
/// min(n - 1, p) and at the numerical rank of the centred matrix.
PcaModel fit_pca(const Eigen::MatrixXd& train, const PcaPolicy& policy = VarianceThreshold{});

/// (m - mean) * components^T
Eigen::MatrixXd transform_pca(const PcaModel& model, const Eigen::MatrixXd& m);

/// scores * components + mean
Eigen::MatrixXd inverse_transform_pca(const PcaModel& model, const Eigen::MatrixXd& scores);

void to_json(nlohmann::json& j, const PcaModel& model);
void to_json(nlohmann::json& j, const PcaPolicy& policy);
void from_json(const nlohmann::json& j, PcaPolicy& policy);
void from_json(const nlohmann::json& j, PcaModel& model);

}  // namespace pseudosurv
