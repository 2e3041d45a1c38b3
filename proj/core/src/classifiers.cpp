#include "pseudosurv/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pseudosurv/error.hpp"
#include "pseudosurv/hashing.hpp"
#include "pseudosurv/random.hpp"

namespace pseudosurv {

std::string_view to_string(ClassifierKind kind) noexcept {
  switch (kind) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::Mlp: return "mlp";
    case ClassifierKind::LinearSvm: return "svm";
    case ClassifierKind::RandomForest: return "rf";
  }
  return "unknown";
}

ClassifierKind kind_of(const ClassifierSpec& spec) noexcept {
  return static_cast<ClassifierKind>(spec.index());
}

void validate_spec(const ClassifierSpec& spec) {
  auto bad = [](const std::string& what) { throw Error(Errc::InvalidSpec, what); };
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnParams>) {
          if (p.k == 0 || p.k % 2 == 0) bad("knn k must be a positive odd integer");
        } else if constexpr (std::is_same_v<T, MlpParams>) {
          if (p.hidden_width == 0 || p.epochs == 0 || !(p.learning_rate > 0.0)) {
            bad("mlp hyperparameters must be positive");
          }
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          if (!(p.c > 0.0) || p.epochs == 0) bad("svm hyperparameters must be positive");
        } else {
          if (p.n_trees == 0 || p.min_leaf == 0 || (p.features_per_split && *p.features_per_split == 0)) {
            bad("random forest hyperparameters must be positive");
          }
        }
      },
      spec);
}

void to_json(nlohmann::json& j, const ClassifierSpec& spec) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnParams>) {
          j = nlohmann::json{{"kind", "knn"}, {"k", p.k}};
        } else if constexpr (std::is_same_v<T, MlpParams>) {
          j = nlohmann::json{{"kind", "mlp"},
                             {"hidden_width", p.hidden_width},
                             {"learning_rate", p.learning_rate},
                             {"epochs", p.epochs}};
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          j = nlohmann::json{{"kind", "svm"}, {"c", p.c}, {"epochs", p.epochs}};
        } else {
          j = nlohmann::json{{"kind", "rf"}, {"n_trees", p.n_trees}, {"min_leaf", p.min_leaf}};
          j["features_per_split"] =
              p.features_per_split ? nlohmann::json(*p.features_per_split) : nlohmann::json("sqrt");
        }
      },
      spec);
}

void from_json(const nlohmann::json& j, ClassifierSpec& spec) {
  if (!j.is_object() || !j.contains("kind")) throw Error(Errc::InvalidSpec, "classifier spec needs a 'kind'");
  const auto kind = j.at("kind").get<std::string>();
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
      if (key == "kind") continue;
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
        throw Error(Errc::InvalidSpec, "unknown " + kind + " hyperparameter '" + key + "'");
      }
    }
  };
  try {
    if (kind == "knn") {
      check_keys({"k"});
      spec = KnnParams{j.value("k", KnnParams{}.k)};
    } else if (kind == "mlp") {
      check_keys({"hidden_width", "learning_rate", "epochs"});
      MlpParams p;
      p.hidden_width = j.value("hidden_width", p.hidden_width);
      p.learning_rate = j.value("learning_rate", p.learning_rate);
      p.epochs = j.value("epochs", p.epochs);
      spec = p;
    } else if (kind == "svm") {
      check_keys({"c", "epochs"});
      SvmParams p;
      p.c = j.value("c", p.c);
      p.epochs = j.value("epochs", p.epochs);
      spec = p;
    } else if (kind == "rf") {
      check_keys({"n_trees", "min_leaf", "features_per_split"});
      ForestParams p;
      p.n_trees = j.value("n_trees", p.n_trees);
      p.min_leaf = j.value("min_leaf", p.min_leaf);
      if (j.contains("features_per_split") && !j.at("features_per_split").is_string()) {
        p.features_per_split = j.at("features_per_split").get<std::size_t>();
      }
      spec = p;
    } else {
      throw Error(Errc::InvalidSpec, "unknown classifier kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidSpec, std::string("bad classifier spec: ") + e.what());
  }
  validate_spec(spec);
}

std::vector<ClassifierSpec> default_grid(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::Knn:
      return {KnnParams{3}, KnnParams{5}, KnnParams{7}};
    case ClassifierKind::Mlp:
      return {MlpParams{16, 0.01, 500}, MlpParams{64, 0.01, 500}};
    case ClassifierKind::LinearSvm:
      return {SvmParams{0.1, 200}, SvmParams{1.0, 200}, SvmParams{10.0, 200}};
    case ClassifierKind::RandomForest:
      return {ForestParams{100, 1, std::nullopt}};
  }
  return {};
}

double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace {

double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

Prediction from_score(double score) noexcept {
  return Prediction{score >= 0.5 ? OutcomeLabel::Deceased : OutcomeLabel::Alive, score};
}

void check_input(const Eigen::MatrixXd& x, std::span<const OutcomeLabel> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(Errc::LengthMismatch, "feature rows and labels differ in length");
  }
  if (x.rows() == 0) throw Error(Errc::EmptyInput, "no training rows");
  if (!x.allFinite()) throw Error(Errc::NonFiniteInput, "training matrix contains non-finite values");
}

bool both_classes(std::span<const OutcomeLabel> y) {
  const auto pos = std::count_if(y.begin(), y.end(), is_positive);
  return pos > 0 && pos < static_cast<std::ptrdiff_t>(y.size());
}

// ---- MLP ------------------------------------------------------------------

MlpWeights train_mlp(const MlpParams& p, const Eigen::MatrixXd& x, std::span<const OutcomeLabel> y,
                     std::uint64_t seed) {
  Eigen::VectorXd targets(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) targets(i) = is_positive(y[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
  MlpWeights w = init_mlp(x.cols(), static_cast<Eigen::Index>(p.hidden_width), seed);
  for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
    const auto lg = mlp_loss_gradient(w, x, targets);
    w.w1 -= p.learning_rate * lg.gradient.w1;
    w.b1 -= p.learning_rate * lg.gradient.b1;
    w.w2 -= p.learning_rate * lg.gradient.w2;
    w.b2 -= p.learning_rate * lg.gradient.b2;
  }
  return w;
}

Eigen::VectorXd mlp_logits(const MlpWeights& w, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd hidden = ((x * w.w1.transpose()).rowwise() + w.b1.transpose()).cwiseMax(0.0);
  return (hidden * w.w2).array() + w.b2;
}

// ---- linear SVM -------------------------------------------------------------

SvmState train_svm(const SvmParams& p, const Eigen::MatrixXd& x, std::span<const OutcomeLabel> y) {
  const Eigen::Index n = x.rows();
  Eigen::VectorXd sign(n);
  for (Eigen::Index i = 0; i < n; ++i) sign(i) = is_positive(y[static_cast<std::size_t>(i)]) ? 1.0 : -1.0;
  const double lambda = 1.0 / (p.c * static_cast<double>(n));

  auto objective = [&](const Eigen::VectorXd& w, double b) {
    const Eigen::ArrayXd margin = sign.array() * ((x * w).array() + b);
    return 0.5 * lambda * w.squaredNorm() + (1.0 - margin).max(0.0).mean();
  };

  SvmState current{Eigen::VectorXd::Zero(x.cols()), 0.0};
  SvmState best = current;
  double best_obj = objective(current.w, current.bias);
  for (std::size_t t = 1; t <= p.epochs; ++t) {
    const Eigen::ArrayXd margin = sign.array() * ((x * current.w).array() + current.bias);
    Eigen::VectorXd active = (margin < 1.0).cast<double>().matrix().cwiseProduct(sign);
    const Eigen::VectorXd grad_w = lambda * current.w - x.transpose() * active / static_cast<double>(n);
    const double grad_b = -active.sum() / static_cast<double>(n);
    const double step = 1.0 / std::sqrt(static_cast<double>(t));
    current.w -= step * grad_w;
    current.bias -= step * grad_b;
    const double obj = objective(current.w, current.bias);
    if (obj < best_obj) {
      best_obj = obj;
      best = current;
    }
  }
  return best;
}

// ---- random forest ------------------------------------------------------------

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, std::span<const OutcomeLabel> y, std::size_t min_leaf,
              std::size_t candidates, Rng& rng)
      : x_(x), y_(y), min_leaf_(min_leaf), candidates_(candidates), rng_(rng) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    grow(tree, std::move(rows));
    return tree;
  }

 private:
  int grow(DecisionTree& tree, std::vector<std::size_t> rows) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const std::size_t n = rows.size();
    const auto pos = static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [&](std::size_t r) { return is_positive(y_[r]); }));
    tree.nodes[static_cast<std::size_t>(id)].votes_positive = 2 * pos > n;
    if (pos == 0 || pos == n || n < 2 * min_leaf_) return id;

    const double parent = gini(pos, n);
    double best_impurity = parent - 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;

    // Partial Fisher-Yates: the first `candidates_` entries are the draw.
    const std::size_t m = std::min(candidates_, features_.size());
    for (std::size_t i = 0; i < m; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(features_.size() - i));
      std::swap(features_[i], features_[j]);
    }
    std::vector<std::pair<double, bool>> column(n);
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t f = features_[c];
      for (std::size_t i = 0; i < n; ++i) {
        column[i] = {x_(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(f)), is_positive(y_[rows[i]])};
      }
      std::sort(column.begin(), column.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += column[i].second ? 1 : 0;
        if (column[i].first == column[i + 1].first) continue;
        const std::size_t nl = i + 1;
        const std::size_t nr = n - nl;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double impurity = (static_cast<double>(nl) * gini(left_pos, nl) +
                                 static_cast<double>(nr) * gini(pos - left_pos, nr)) /
                                static_cast<double>(n);
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (column[i].first + column[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(tree, std::move(left));
    const int r = grow(tree, std::move(right));
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  static double gini(std::size_t pos, std::size_t n) {
    const double p = static_cast<double>(pos) / static_cast<double>(n);
    return 2.0 * p * (1.0 - p);
  }

  const Eigen::MatrixXd& x_;
  std::span<const OutcomeLabel> y_;
  std::size_t min_leaf_;
  std::size_t candidates_;
  Rng& rng_;
  std::vector<std::size_t> features_;
};

ForestState train_forest(const ForestParams& p, const Eigen::MatrixXd& x, std::span<const OutcomeLabel> y,
                         std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(x.rows());
  const std::size_t q = static_cast<std::size_t>(x.cols());
  const std::size_t candidates = std::max<std::size_t>(
      1, std::min(q, p.features_per_split.value_or(
                         static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(q)))))));
  ForestState forest;
  forest.trees.reserve(p.n_trees);
  for (std::size_t t = 0; t < p.n_trees; ++t) {
    Rng rng(derive_seed(seed, {t}));
    std::vector<std::size_t> bootstrap(n);
    for (auto& r : bootstrap) r = static_cast<std::size_t>(rng.below(n));
    TreeBuilder builder(x, y, p.min_leaf, candidates, rng);
    forest.trees.push_back(builder.build(std::move(bootstrap)));
  }
  return forest;
}

bool tree_votes_positive(const DecisionTree& tree, const Eigen::MatrixXd& x, Eigen::Index row) {
  const TreeNode* node = &tree.nodes[0];
  while (node->feature >= 0) {
    node = &tree.nodes[static_cast<std::size_t>(x(row, node->feature) <= node->threshold ? node->left : node->right)];
  }
  return node->votes_positive;
}

}  // namespace

Eigen::VectorXd MlpWeights::flatten() const {
  Eigen::VectorXd flat(w1.size() + b1.size() + w2.size() + 1);
  flat << Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size()), b1, w2, b2;
  return flat;
}

MlpWeights MlpWeights::unflatten(const Eigen::VectorXd& flat, Eigen::Index inputs, Eigen::Index hidden) {
  MlpWeights w;
  Eigen::Index at = 0;
  w.w1 = Eigen::Map<const Eigen::MatrixXd>(flat.data(), hidden, inputs);
  at += hidden * inputs;
  w.b1 = flat.segment(at, hidden);
  at += hidden;
  w.w2 = flat.segment(at, hidden);
  at += hidden;
  w.b2 = flat(at);
  return w;
}

MlpWeights init_mlp(Eigen::Index inputs, Eigen::Index hidden, std::uint64_t seed) {
  Rng rng(seed);
  MlpWeights w;
  const double a1 = std::sqrt(6.0 / static_cast<double>(std::max<Eigen::Index>(inputs, 1)));
  const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
  w.w1.resize(hidden, inputs);
  for (Eigen::Index c = 0; c < inputs; ++c) {
    for (Eigen::Index r = 0; r < hidden; ++r) w.w1(r, c) = rng.uniform(-a1, a1);
  }
  w.b1 = Eigen::VectorXd::Zero(hidden);
  w.w2.resize(hidden);
  for (Eigen::Index r = 0; r < hidden; ++r) w.w2(r) = rng.uniform(-a2, a2);
  w.b2 = 0.0;
  return w;
}

MlpLossGradient mlp_loss_gradient(const MlpWeights& w, const Eigen::MatrixXd& x, const Eigen::VectorXd& targets) {
  const double n = static_cast<double>(x.rows());
  const Eigen::MatrixXd pre = (x * w.w1.transpose()).rowwise() + w.b1.transpose();
  const Eigen::MatrixXd hidden = pre.cwiseMax(0.0);
  const Eigen::VectorXd logits = (hidden * w.w2).array() + w.b2;

  MlpLossGradient out;
  double loss = 0.0;
  Eigen::VectorXd dlogit(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    loss += softplus(logits(i)) - targets(i) * logits(i);
    dlogit(i) = (logistic(logits(i)) - targets(i)) / n;
  }
  out.loss = loss / n;
  out.gradient.w2 = hidden.transpose() * dlogit;
  out.gradient.b2 = dlogit.sum();
  const Eigen::MatrixXd dpre = (dlogit * w.w2.transpose()).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  out.gradient.w1 = dpre.transpose() * x;
  out.gradient.b1 = dpre.colwise().sum().transpose();
  return out;
}

std::string ClassifierModel::fingerprint() const {
  Fnv1a h;
  nlohmann::json spec_json = spec_;
  h.update(spec_json.dump()).update(seed_).update(static_cast<std::uint64_t>(n_features_));
  auto hash_matrix = [&](const auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) h.update(static_cast<double>(m.data()[i]));
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, KnnState>) {
          hash_matrix(s.x);
          for (auto label : s.y) h.update(static_cast<std::uint64_t>(class_code(label)));
        } else if constexpr (std::is_same_v<T, MlpWeights>) {
          hash_matrix(s.w1);
          hash_matrix(s.b1);
          hash_matrix(s.w2);
          h.update(s.b2);
        } else if constexpr (std::is_same_v<T, SvmState>) {
          hash_matrix(s.w);
          h.update(s.bias);
        } else {
          for (const auto& tree : s.trees) {
            h.update(static_cast<std::uint64_t>(tree.nodes.size()));
            for (const auto& node : tree.nodes) {
              h.update(static_cast<std::uint64_t>(static_cast<std::int64_t>(node.feature)))
                  .update(node.threshold)
                  .update(static_cast<std::uint64_t>(static_cast<std::int64_t>(node.left)))
                  .update(static_cast<std::uint64_t>(static_cast<std::int64_t>(node.right)))
                  .update(static_cast<std::uint64_t>(node.votes_positive));
            }
          }
        }
      },
      state_);
  return h.hex();
}

ClassifierModel train_classifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x,
                                 std::span<const OutcomeLabel> y, std::uint64_t seed) {
  validate_spec(spec);
  check_input(x, y);
  const auto q = static_cast<std::size_t>(x.cols());
  if (kind_of(spec) != ClassifierKind::RandomForest) {
    if (x.rows() < 2 || !both_classes(y)) {
      throw Error(Errc::SingleClassTraining, std::string(to_string(kind_of(spec))) +
                                                 " needs at least 2 rows covering both classes");
    }
  }
  ClassifierState state = std::visit(
      [&](const auto& p) -> ClassifierState {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, KnnParams>) {
          return KnnState{x, std::vector<OutcomeLabel>(y.begin(), y.end())};
        } else if constexpr (std::is_same_v<T, MlpParams>) {
          return train_mlp(p, x, y, seed);
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          return train_svm(p, x, y);
        } else {
          return train_forest(p, x, y, seed);
        }
      },
      spec);
  return ClassifierModel(spec, std::move(state), q, seed);
}

std::vector<Prediction> predict(const ClassifierModel& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features()) {
    throw Error(Errc::DimensionMismatch, "model trained on " + std::to_string(model.n_features()) +
                                             " features, input has " + std::to_string(x.cols()));
  }
  std::vector<Prediction> out(static_cast<std::size_t>(x.rows()));
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, KnnState>) {
          const auto k = std::min<std::size_t>(std::get<KnnParams>(model.spec()).k, s.y.size());
          const auto n_train = static_cast<std::size_t>(s.x.rows());
          std::vector<std::pair<double, std::size_t>> dist(n_train);
          for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (std::size_t r = 0; r < n_train; ++r) {
              dist[r] = {(s.x.row(static_cast<Eigen::Index>(r)) - x.row(i)).squaredNorm(), r};
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
            std::size_t positive = 0;
            for (std::size_t m = 0; m < k; ++m) positive += is_positive(s.y[dist[m].second]) ? 1 : 0;
            out[static_cast<std::size_t>(i)] = from_score(static_cast<double>(positive) / static_cast<double>(k));
          }
        } else if constexpr (std::is_same_v<T, MlpWeights>) {
          const Eigen::VectorXd logits = mlp_logits(s, x);
          for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = from_score(logistic(logits(i)));
        } else if constexpr (std::is_same_v<T, SvmState>) {
          const Eigen::VectorXd margin = (x * s.w).array() + s.bias;
          for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = from_score(logistic(margin(i)));
        } else {
          for (Eigen::Index i = 0; i < x.rows(); ++i) {
            std::size_t votes = 0;
            for (const auto& tree : s.trees) votes += tree_votes_positive(tree, x, i) ? 1 : 0;
            out[static_cast<std::size_t>(i)] =
                from_score(static_cast<double>(votes) / static_cast<double>(s.trees.size()));
          }
        }
      },
      model.state());
  return out;
}

std::vector<Prediction> ensemble_vote(std::span<const std::vector<Prediction>> members) {
  if (members.size() < 2) throw Error(Errc::EmptyInput, "ensemble vote needs at least 2 members");
  const std::size_t n = members[0].size();
  for (const auto& m : members) {
    if (m.size() != n) throw Error(Errc::LengthMismatch, "ensemble members predict different sample counts");
  }
  std::vector<Prediction> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t positive = 0;
    double score = 0.0;
    for (const auto& m : members) {
      positive += is_positive(m[i].label) ? 1 : 0;
      score += m[i].score;
    }
    score /= static_cast<double>(members.size());
    const std::size_t negative = members.size() - positive;
    OutcomeLabel label;
    if (positive != negative) {
      label = positive > negative ? OutcomeLabel::Deceased : OutcomeLabel::Alive;
    } else {
      label = score > 0.5 ? OutcomeLabel::Deceased : OutcomeLabel::Alive;
    }
    out[i] = Prediction{label, score};
  }
  return out;
}

double accuracy(std::span<const Prediction> predictions, std::span<const OutcomeLabel> truth) {
  if (predictions.size() != truth.size()) throw Error(Errc::LengthMismatch, "prediction/label length mismatch");
  if (truth.empty()) throw Error(Errc::EmptyInput, "accuracy of zero predictions");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i].label == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

GridSearchResult grid_search(std::span<const ClassifierSpec> grid, const Eigen::MatrixXd& x,
                             std::span<const OutcomeLabel> y, const FoldPlan& inner_folds, std::uint64_t seed) {
  if (grid.empty()) throw Error(Errc::EmptyGrid, "grid search over an empty grid");
  GridSearchResult result;
  result.mean_accuracy.assign(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double total = 0.0;
    for (std::size_t f = 0; f < inner_folds.k(); ++f) {
      const auto train_rows = inner_folds.training_indices(f);
      const auto& held = inner_folds.folds[f];
      std::vector<OutcomeLabel> y_train, y_held;
      for (auto r : train_rows) y_train.push_back(y[r]);
      for (auto r : held) y_held.push_back(y[r]);
      const auto model = train_classifier(grid[g], select_rows(x, train_rows), y_train, derive_seed(seed, {g, f}));
      total += accuracy(predict(model, select_rows(x, held)), y_held);
    }
    result.mean_accuracy[g] = total / static_cast<double>(inner_folds.k());
  }
  result.best_index = static_cast<std::size_t>(
      std::max_element(result.mean_accuracy.begin(), result.mean_accuracy.end()) - result.mean_accuracy.begin());
  result.best = grid[result.best_index];
  return result;
}

std::string grid_table_csv(const std::vector<ClassifierSpec>& grid, const GridSearchResult& result) {
  std::ostringstream os;
  os << "index,spec,mean_accuracy,selected\n";
  for (std::size_t g = 0; g < grid.size(); ++g) {
    nlohmann::json j = grid[g];
    std::string spec = j.dump();
    std::string quoted = "\"";
    for (char c : spec) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    quoted += '"';
    os << g << ',' << quoted << ',' << format_number(result.mean_accuracy.at(g)) << ','
       << (g == result.best_index ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace pseudosurv
