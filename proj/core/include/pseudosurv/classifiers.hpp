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
#include "pseudosurv/preprocess.hpp"

namespace pseudosurv {

enum class ClassifierKind { Knn, Mlp, LinearSvm, RandomForest };

std::string_view to_string(ClassifierKind kind) noexcept;

struct KnnParams {
  std::size_t k = 5;  // odd
  bool operator==(const KnnParams&) const = default;
};

/// One hidden ReLU layer, logistic output, mean binary cross-entropy,
/// full-batch gradient descent.
struct MlpParams {
  std::size_t hidden_width = 16;
  double learning_rate = 0.01;
  std::size_t epochs = 500;
  bool operator==(const MlpParams&) const = default;
};

/// Linear soft-margin SVM: lambda/2 |w|^2 + mean hinge, lambda = 1 / (C n).
struct SvmParams {
  double c = 1.0;
  std::size_t epochs = 200;
  bool operator==(const SvmParams&) const = default;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t min_leaf = 1;
  /// Candidate features per split; unset means ceil(sqrt(q)).
  std::optional<std::size_t> features_per_split;
  bool operator==(const ForestParams&) const = default;
};

using ClassifierSpec = std::variant<KnnParams, MlpParams, SvmParams, ForestParams>;

ClassifierKind kind_of(const ClassifierSpec& spec) noexcept;
/// Throws InvalidSpec unless every hyperparameter is positive and KNN k is odd.
void validate_spec(const ClassifierSpec& spec);

void to_json(nlohmann::json& j, const ClassifierSpec& spec);
void from_json(const nlohmann::json& j, ClassifierSpec& spec);

/// Default grids used when none is configured.
std::vector<ClassifierSpec> default_grid(ClassifierKind kind);

struct Prediction {
  OutcomeLabel label = OutcomeLabel::Alive;
  double score = 0.0;  ///< positive-class (class 2) probability or surrogate
};

struct KnnState {
  Eigen::MatrixXd x;
  std::vector<OutcomeLabel> y;
};

struct MlpWeights {
  Eigen::MatrixXd w1;  // hidden x inputs
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;

  /// Flattened view order: w1 (column-major), b1, w2, b2.
  Eigen::VectorXd flatten() const;
  static MlpWeights unflatten(const Eigen::VectorXd& flat, Eigen::Index inputs, Eigen::Index hidden);
};

struct SvmState {
  Eigen::VectorXd w;
  double bias = 0.0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  bool votes_positive = false;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct ForestState {
  std::vector<DecisionTree> trees;
};

using ClassifierState = std::variant<KnnState, MlpWeights, SvmState, ForestState>;

class ClassifierModel {
 public:
  ClassifierModel(ClassifierSpec spec, ClassifierState state, std::size_t n_features, std::uint64_t seed)
      : spec_(std::move(spec)), state_(std::move(state)), n_features_(n_features), seed_(seed) {}

  const ClassifierSpec& spec() const noexcept { return spec_; }
  const ClassifierState& state() const noexcept { return state_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::uint64_t training_seed() const noexcept { return seed_; }

  /// Hash over spec, seed and every fitted parameter's bit pattern.
  std::string fingerprint() const;

 private:
  ClassifierSpec spec_;
  ClassifierState state_;
  std::size_t n_features_;
  std::uint64_t seed_;
};

/// Random forests accept single-class (even single-row) training sets; the
/// other kinds require both classes.
ClassifierModel train_classifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x,
                                 std::span<const OutcomeLabel> y, std::uint64_t seed);

std::vector<Prediction> predict(const ClassifierModel& model, const Eigen::MatrixXd& x);

/// Majority label per sample; score is the mean member score. An even
/// split goes to class 2 if the mean score exceeds 0.5, otherwise class 1.
std::vector<Prediction> ensemble_vote(std::span<const std::vector<Prediction>> members);

double accuracy(std::span<const Prediction> predictions, std::span<const OutcomeLabel> truth);

struct GridSearchResult {
  std::size_t best_index = 0;
  ClassifierSpec best;
  std::vector<double> mean_accuracy;  // one per grid entry
};

/// Argmax of mean inner-fold accuracy; ties go to the earliest grid entry.
/// Only rows covered by `inner_folds` are touched.
GridSearchResult grid_search(std::span<const ClassifierSpec> grid, const Eigen::MatrixXd& x,
                             std::span<const OutcomeLabel> y, const FoldPlan& inner_folds,
                             std::uint64_t seed);

/// Grid-search table as comma-separated text (spec JSON, mean accuracy).
std::string grid_table_csv(const std::vector<ClassifierSpec>& grid, const GridSearchResult& result);

struct MlpLossGradient {
  double loss = 0.0;
  MlpWeights gradient;
};

/// Mean binary cross-entropy and its analytic gradient; targets are 0/1.
MlpLossGradient mlp_loss_gradient(const MlpWeights& weights, const Eigen::MatrixXd& x,
                                  const Eigen::VectorXd& targets);

MlpWeights init_mlp(Eigen::Index inputs, Eigen::Index hidden, std::uint64_t seed);

double logistic(double z) noexcept;

}  // namespace pseudosurv
