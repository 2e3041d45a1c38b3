#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pseudosurv {

/// Two-year overall-survival class, coded as in the source tables.
enum class OutcomeLabel : int {
  Alive = 1,     ///< alive beyond the horizon
  Deceased = 2,  ///< died within the horizon; the positive class internally
};

constexpr bool is_positive(OutcomeLabel label) noexcept { return label == OutcomeLabel::Deceased; }
constexpr int class_code(OutcomeLabel label) noexcept { return static_cast<int>(label); }
OutcomeLabel label_from_code(int code);

struct SurvivalRecord {
  double time = 0.0;   ///< months since diagnosis, > 0
  bool event = false;  ///< true = death observed, false = censored at `time`

  bool operator==(const SurvivalRecord&) const = default;
};

/// Samples x features with optional outcome columns.
struct FeatureTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_names;
  Eigen::MatrixXd values;
  std::optional<std::vector<OutcomeLabel>> labels;
  std::optional<std::vector<SurvivalRecord>> survival;

  std::size_t rows() const noexcept { return sample_ids.size(); }
  std::size_t cols() const noexcept { return feature_names.size(); }

  /// Copies the given rows (in the given order) into a new table.
  FeatureTable subset(std::span<const std::size_t> rows) const;
};

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows);

struct ValidationIssue {
  std::string detail;
  std::optional<std::size_t> row;
  std::optional<std::size_t> col;
};

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::vector<ValidationIssue> issues;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const noexcept;
  const ValidationCheck* find(std::string_view name) const noexcept;
};

/// Check names reported by validate_table, in emission order.
namespace checks {
inline constexpr const char* kShape = "Shape";
inline constexpr const char* kNonFiniteCell = "NonFiniteCell";
inline constexpr const char* kDuplicateId = "DuplicateId";
inline constexpr const char* kEmptyId = "EmptyId";
inline constexpr const char* kDuplicateFeature = "DuplicateFeature";
inline constexpr const char* kEmptyFeatureName = "EmptyFeatureName";
inline constexpr const char* kLengthMismatch = "LengthMismatch";
inline constexpr const char* kSurvivalTime = "SurvivalTime";
}  // namespace checks

/// Reports every FeatureTable invariant as pass/fail. Never throws.
ValidationReport validate_table(const FeatureTable& table);

/// Parses comma-separated text whose first header cell is `sample_id`.
/// Reserved columns `label`, `time` and `event` fill the optional outcome
/// fields; every other column is a feature, kept in file order.
FeatureTable parse_feature_table(std::istream& in, bool expect_labels, bool expect_survival);
FeatureTable load_feature_table(const std::filesystem::path& path, bool expect_labels,
                                bool expect_survival);

/// Canonical writer: sample_id, features..., then label, time, event when present.
/// Numbers use the shortest representation that round-trips.
void write_feature_table(const FeatureTable& table, std::ostream& out);
void save_feature_table(const FeatureTable& table, const std::filesystem::path& path);

struct SyntheticSpec {
  std::size_t n_labeled = 200;
  std::size_t n_auxiliary = 0;
  std::size_t n_features = 10;
  double class_separation = 2.0;
  std::size_t noise_features = 0;
  double survival_effect = 0.0;
  double censoring_rate = 0.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSpec& spec);
/// Requires exactly the SyntheticSpec field names; throws InvalidSpec otherwise.
void from_json(const nlohmann::json& j, SyntheticSpec& spec);

struct SyntheticCohort {
  FeatureTable labeled;    ///< labels and survival present
  FeatureTable auxiliary;  ///< no outcome columns
};

/// Seeded two-cluster cohort. Class-2 rows sit at +separation/2 along the
/// signal direction, class-1 rows at -separation/2; noise columns are N(0,1).
/// Survival: exponential with log hazard survival_effect * signal score,
/// censored by an independent exponential clock calibrated to the rate.
SyntheticCohort generate_synthetic_cohort(const SyntheticSpec& spec, std::uint64_t seed);

/// Projection of a row's signal columns onto the unit class-mean direction.
double signal_score(const SyntheticSpec& spec, std::span<const double> row);

std::string format_number(double value);

}  // namespace pseudosurv
