#pragma once

// Reference computations for tests. Each one is written from the textbook
// definition and shares no code path with the library routine it checks.

#include <Eigen/Dense>
#include <span>
#include <utility>
#include <vector>

#include "pseudosurv/classifiers.hpp"
#include "pseudosurv/dataset.hpp"

namespace oracle {

struct EigenPairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns
};

/// Cyclic Jacobi rotations on a symmetric matrix.
EigenPairs jacobi_eigen(Eigen::MatrixXd a, double tol = 1e-15, int max_sweeps = 100);

/// Two-sided Student-t p-value by composite Simpson integration of the density.
double t_two_sided_p(double t, double df, int intervals = 200000);

/// Chi-square(1) upper tail through the normal distribution.
double chi2_1df_sf(double x);

struct KmPoint {
  double time;
  double survival;
};
/// S(t) at each distinct event time, each value recomputed from scratch.
std::vector<KmPoint> km_product_limit(std::span<const pseudosurv::SurvivalRecord> records);

/// Harrell's C by visiting every ordered pair.
double c_index_pairs(std::span<const pseudosurv::SurvivalRecord> records, std::span<const double> risks);

struct LogRankTable {
  double observed_minus_expected = 0.0;
  double variance = 0.0;
  double statistic = 0.0;
};
/// Row-per-distinct-time O/E/V tabulation for group a.
LogRankTable log_rank_table(std::span<const pseudosurv::SurvivalRecord> a,
                            std::span<const pseudosurv::SurvivalRecord> b);

/// Ridge Hotelling statistic from explicit covariance and a dense solve.
double ridge_hotelling(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, double shrinkage);

/// Exact permutation p-value over every split of the pooled rows.
double hotelling_exhaustive_p(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, double shrinkage);

/// Mean binary cross-entropy of a one-hidden-layer ReLU network.
double mlp_loss(const pseudosurv::MlpWeights& w, const Eigen::MatrixXd& x, const Eigen::VectorXd& targets);

/// Central finite differences of mlp_loss over the flattened parameters.
Eigen::VectorXd mlp_numeric_gradient(const pseudosurv::MlpWeights& w, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& targets, double step = 1e-5);

/// Covariance eigendecomposition PCA with the max-|entry|-nonnegative sign rule.
EigenPairs covariance_pca(const Eigen::MatrixXd& x);

}  // namespace oracle
