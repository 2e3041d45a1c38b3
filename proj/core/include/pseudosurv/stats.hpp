#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace pseudosurv {

/// Outcome of a hypothesis test.
struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::string method;
  std::optional<double> degrees_of_freedom;
  std::optional<std::size_t> permutations;
};

void to_json(nlohmann::json& j, const TestResult& r);
void from_json(const nlohmann::json& j, TestResult& r);

/// Two-sided p-value of Student's t with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

/// Upper tail of chi-square with `df` degrees of freedom.
double chi_square_sf(double x, double df);

/// Two-tailed paired t-test on d = a - b with df = m - 1.
/// Zero-variance conventions: mean(d) == 0 gives p = 1, otherwise p = 0
/// (statistic reported as 0 or +/-inf respectively).
TestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct HdtsOptions {
  std::size_t permutations = 999;
  std::uint64_t seed = 0;
  double shrinkage = 0.1;  ///< ridge = shrinkage * trace(pooled cov) / p
  /// Enumerate every distinct split of the pooled rows instead of sampling.
  bool exhaustive = false;
};

/// Ridge-regularised two-sample Hotelling statistic
///   T = na nb / (na + nb) * d' (S + lambda I)^-1 d
/// with a permutation null. Sampled: p = (1 + #{T* >= T}) / (B + 1).
/// Exhaustive: p = #{T* >= T} / C(na + nb, na), identity split included.
TestResult hdts_test(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, const HdtsOptions& options);

/// The statistic alone, computed directly (no permutation).
double hdts_statistic(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, double shrinkage = 0.1);

}  // namespace pseudosurv
