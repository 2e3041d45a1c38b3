#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pseudosurv/classifiers.hpp"
#include "pseudosurv/dataset.hpp"
#include "pseudosurv/pca.hpp"
#include "pseudosurv/preprocess.hpp"
#include "pseudosurv/stats.hpp"

namespace pseudosurv {

enum class Strategy { Supervised, SemiSupervised };

/// Predictor stage of a PCA + classifier pipeline; Ev votes Mlp, Svm and Knn.
enum class HmlsKind { Knn, Mlp, Svm, Ev };

std::string_view to_string(Strategy s) noexcept;
std::string_view to_string(HmlsKind k) noexcept;
Strategy parse_strategy(std::string_view text);
HmlsKind parse_hmls(std::string_view text);

struct RunConfig {
  std::string labeled_path;
  std::optional<std::string> auxiliary_path;
  std::string feature_set = "features";
  Strategy strategy = Strategy::Supervised;
  HmlsKind hmls = HmlsKind::Knn;
  /// Candidate specs; entries are routed to members by kind. Members with no
  /// entries use default_grid().
  std::vector<ClassifierSpec> grid;
  PcaPolicy pca = VarianceThreshold{0.95};
  std::size_t folds = 5;
  std::size_t inner_folds = 3;
  double test_fraction = 0.2;
  double confidence_threshold = 0.0;
  ForestParams labeler{};
  std::uint64_t seed = 0;
  int jobs = 1;  ///< worker count; never affects results and is not echoed

  void validate() const;
  /// Grid actually searched for one member kind.
  std::vector<ClassifierSpec> grid_for(ClassifierKind kind) const;
};

/// Canonical echo of every setting that influences results (jobs excluded).
void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

struct PseudoLabelSet {
  std::vector<std::string> auxiliary_ids;
  std::vector<OutcomeLabel> labels;
  std::vector<double> confidences;
  std::vector<std::size_t> rows;  ///< kept auxiliary row indices
  std::size_t dropped = 0;
  std::string labeler_fingerprint;
};

/// Scales and projects auxiliary rows with the given training-fit
/// transforms, labels them, and drops rows whose confidence
/// max(score, 1 - score) is below `confidence_threshold`.
PseudoLabelSet pseudo_label(const FeatureTable& auxiliary, const ClassifierModel& labeler, const ScalerParams& scaler,
                            const PcaModel& pca, double confidence_threshold,
                            std::span<const std::string> labeler_training_ids = {});

struct StrategyResult {
  Strategy strategy = Strategy::Supervised;
  std::string feature_set_name;
  std::string hmls_name;
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  ///< sample standard deviation (divisor k - 1)
  double external_accuracy = 0.0;
  /// "<partition hash>-<settings hash>"
  std::string config_hash;
  std::uint64_t seed = 0;

  std::string_view partition_hash() const;
};

void to_json(nlohmann::json& j, const StrategyResult& r);
void from_json(const nlohmann::json& j, StrategyResult& r);

double mean_of(std::span<const double> v);
double sample_std_of(std::span<const double> v);

/// Ids a fitting stage consumed, tagged "L:<id>" (labeled) or "A:<id>" (auxiliary).
struct StageAudit {
  std::string stage;
  std::vector<std::string> ids;  // sorted
  std::string fingerprint;
};

struct PhaseTrace {
  std::string phase;  ///< "fold-<i>" or "external"
  std::vector<std::string> evaluation_ids;
  std::vector<StageAudit> stages;
  double accuracy = 0.0;
  std::size_t pca_components = 0;
  std::size_t pseudo_labeled = 0;
  std::size_t pseudo_dropped = 0;
  std::vector<std::size_t> confidence_histogram;  ///< 10 bins over [0.5, 1]
  std::vector<ClassifierSpec> selected;            ///< one per ensemble member
  std::vector<std::vector<double>> grid_accuracy;  ///< per member, per grid entry
};

struct RunTrace {
  SplitPlan holdout;
  FoldPlan folds;  ///< indices into the labeled table
  std::vector<PhaseTrace> phases;
};

void to_json(nlohmann::json& j, const StageAudit& s);
void to_json(nlohmann::json& j, const PhaseTrace& p);
void to_json(nlohmann::json& j, const RunTrace& t);

std::string partition_hash(const SplitPlan& holdout, const FoldPlan& folds);
std::string settings_hash(const RunConfig& config);

/// Labeled rows only: 80/20 stratified holdout, k stratified folds on the
/// training part, per-fold scaler + PCA + nested grid search + classifier,
/// then a final model on all k folds evaluated once on the holdout.
StrategyResult run_supervised(const RunConfig& config, const FeatureTable& labeled, RunTrace* trace = nullptr);

/// As run_supervised, but each phase trains a random-forest labeler on its
/// training rows, pseudo-labels the auxiliary cohort, and fits the
/// classifier pipeline on training rows plus pseudo-labeled rows.
StrategyResult run_semi_supervised(const RunConfig& config, const FeatureTable& labeled, const FeatureTable* auxiliary,
                                   RunTrace* trace = nullptr);

/// Dispatches on config.strategy.
StrategyResult run_strategy(const RunConfig& config, const FeatureTable& labeled, const FeatureTable* auxiliary,
                            RunTrace* trace = nullptr);

/// Paired t-test on fold accuracies; both results must share fold partitions.
TestResult compare_strategies(const StrategyResult& a, const StrategyResult& b);

}  // namespace pseudosurv
