#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pseudosurv/dataset.hpp"
#include "pseudosurv/stats.hpp"

namespace pseudosurv {

// ---- risk grouping ----------------------------------------------------------

enum class RiskRule { Median, Mean };
enum class RiskGroup { High, Low };

std::string_view to_string(RiskRule rule) noexcept;
std::string_view to_string(RiskGroup group) noexcept;
RiskRule parse_risk_rule(std::string_view text);

struct RiskGroupAssignment {
  double threshold = 0.0;
  RiskRule rule = RiskRule::Median;
  std::vector<RiskGroup> groups;
};

/// Threshold is the median (or mean) of event-observed times only; every
/// record, censored or not, is HIGH when its time <= threshold.
RiskGroupAssignment assign_risk_groups(std::span<const SurvivalRecord> records, RiskRule rule);

/// Median or mean of arbitrary values (helper shared with score grouping).
double central_value(std::vector<double> values, RiskRule rule);

/// HIGH when score > threshold.
std::vector<RiskGroup> group_by_score(std::span<const double> scores, double threshold);

// ---- estimators ---------------------------------------------------------------

enum class SurvivalKind { Coxr, Cwgb, Rsf, Fsvm };

std::string_view to_string(SurvivalKind kind) noexcept;
SurvivalKind parse_survival_kind(std::string_view text);

struct SurvivalHyperparams {
  double cox_ridge = 1e-6;
  std::size_t cox_max_iterations = 100;
  std::size_t cwgb_rounds = 100;
  double cwgb_learning_rate = 0.1;
  std::size_t rsf_trees = 100;
  std::size_t rsf_min_events_leaf = 3;
  double fsvm_alpha = 1.0;
  std::size_t fsvm_steps = 1000;
  double fsvm_step_size = 0.01;

  bool operator==(const SurvivalHyperparams&) const = default;
};

void to_json(nlohmann::json& j, const SurvivalHyperparams& h);

/// Default candidate list per estimator (CWGB searches rounds in {100, 500}).
std::vector<SurvivalHyperparams> default_survival_grid(SurvivalKind kind);

struct CoxState {
  Eigen::VectorXd beta;
  std::vector<double> log_likelihood_trace;  // penalised, one entry per accepted iterate
  std::size_t iterations = 0;
  bool converged = false;
};

struct CwgbState {
  Eigen::VectorXd coefficients;
  std::vector<double> loss_trace;  // negative partial log-likelihood, round 0..M
};

struct RsfNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf = -1;  // index into RsfTree::hazards
};

struct RsfTree {
  std::vector<RsfNode> nodes;
  std::vector<std::vector<double>> hazards;  // Nelson-Aalen CHF on the event grid
};

struct RsfState {
  std::vector<double> event_grid;
  std::vector<RsfTree> trees;
};

struct FsvmState {
  Eigen::VectorXd w;
  std::size_t comparable_pairs = 0;
};

using SurvivalState = std::variant<CoxState, CwgbState, RsfState, FsvmState>;

struct SurvivalModel {
  SurvivalKind kind = SurvivalKind::Coxr;
  SurvivalHyperparams hyperparams;
  SurvivalState state;
  std::size_t n_features = 0;
  std::uint64_t seed = 0;
};

/// COXR: ridge-penalised Breslow partial likelihood, damped Newton.
/// CWGB: component-wise least-squares boosting on the Cox gradient.
/// RSF: log-rank split forest with Nelson-Aalen leaves.
/// FSVM: squared-hinge ranking SVM over comparable pairs, gradient descent.
SurvivalModel fit_survival(SurvivalKind kind, const Eigen::MatrixXd& x, std::span<const SurvivalRecord> records,
                           const SurvivalHyperparams& hyperparams, std::uint64_t seed);

/// Higher score means higher hazard.
std::vector<double> predict_risk(const SurvivalModel& model, const Eigen::MatrixXd& x);

/// Breslow partial log-likelihood of a linear predictor (no penalty).
double cox_partial_log_likelihood(std::span<const SurvivalRecord> records, std::span<const double> eta);

// ---- evaluation -----------------------------------------------------------------

struct KmCurve {
  std::size_t n = 0;
  std::vector<double> times;  // distinct event times, increasing
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> events;
  std::vector<double> survival;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;

  /// S(t); 1 before the first event time.
  double survival_at(double t) const noexcept;
};

/// Product-limit estimator with a 95% Greenwood band on the log-log scale.
/// Where S is 1 the band is [1, 1]; where S is 0 it is [0, 0].
KmCurve kaplan_meier(std::span<const SurvivalRecord> records);

/// Two-group log-rank test, chi-square with 1 degree of freedom.
TestResult log_rank(std::span<const SurvivalRecord> a, std::span<const SurvivalRecord> b);

/// Harrell's C over pairs with t_i < t_j and an event at i.
double concordance_index(std::span<const SurvivalRecord> records, std::span<const double> risks);

/// Text export: group,time,n_at_risk,survival,ci_lower,ci_upper, one row at
/// time 0 followed by one row per event time.
std::string km_curve_csv(std::string_view group, const KmCurve& curve, bool header = true);
inline constexpr std::string_view kKmCsvHeader = "group,time,n_at_risk,survival,ci_lower,ci_upper";

/// Self-contained SVG step plot of one or more curves.
std::string km_svg(std::span<const std::pair<std::string, KmCurve>> curves);

void to_json(nlohmann::json& j, const KmCurve& c);

}  // namespace pseudosurv
