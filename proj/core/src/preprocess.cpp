#include "pseudosurv/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "pseudosurv/error.hpp"
#include "pseudosurv/random.hpp"

namespace pseudosurv {

ScalerParams fit_minmax(const Eigen::MatrixXd& train) {
  if (train.rows() == 0) throw Error(Errc::EmptyInput, "cannot fit a scaler on zero rows");
  return ScalerParams{train.colwise().minCoeff().transpose(), train.colwise().maxCoeff().transpose()};
}

Eigen::MatrixXd apply_minmax(const ScalerParams& params, const Eigen::MatrixXd& m) {
  if (m.cols() != params.min.size() || params.min.size() != params.max.size()) {
    throw Error(Errc::DimensionMismatch, "scaler fitted on " + std::to_string(params.min.size()) +
                                             " columns, input has " + std::to_string(m.cols()));
  }
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double lo = params.min(j);
    const double range = params.max(j) - lo;
    if (range == 0.0) {
      out.col(j).setZero();
    } else {
      out.col(j) = (m.col(j).array() - lo) / range;
    }
  }
  return out;
}

std::vector<std::size_t> FoldPlan::training_indices(std::size_t held_out) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    if (f != held_out) out.insert(out.end(), folds[f].begin(), folds[f].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> FoldPlan::all_indices() const { return training_indices(folds.size()); }

namespace {

struct ClassIndex {
  std::vector<std::size_t> alive;
  std::vector<std::size_t> deceased;
};

ClassIndex by_class(std::span<const OutcomeLabel> labels) {
  ClassIndex idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (is_positive(labels[i]) ? idx.deceased : idx.alive).push_back(i);
  }
  return idx;
}

std::size_t round_half_even(double x) {
  const double fl = std::floor(x);
  const double diff = x - fl;
  if (diff > 0.5) return static_cast<std::size_t>(fl) + 1;
  if (diff < 0.5) return static_cast<std::size_t>(fl);
  const auto base = static_cast<std::size_t>(fl);
  return base % 2 == 0 ? base : base + 1;
}

}  // namespace

SplitPlan stratified_holdout(std::span<const OutcomeLabel> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::InvalidFraction, "test fraction must lie in (0, 1)");
  }
  auto classes = by_class(labels);
  SplitPlan plan;
  std::uint64_t class_index = 0;
  for (auto* members : {&classes.alive, &classes.deceased}) {
    ++class_index;
    if (members->empty()) continue;  // absent class: nothing to stratify
    if (members->size() < 2) {
      throw Error(Errc::ClassTooSmall, "class " + std::to_string(class_index) + " has " +
                                           std::to_string(members->size()) + " member(s); need >= 2");
    }
    const std::size_t count = members->size();
    std::size_t n_test = round_half_even(static_cast<double>(count) * test_fraction);
    n_test = std::clamp<std::size_t>(n_test, 1, count - 1);
    Rng rng(derive_seed(seed, {class_index}));
    rng.shuffle(std::span<std::size_t>(*members));
    plan.test_indices.insert(plan.test_indices.end(), members->begin(), members->begin() + static_cast<std::ptrdiff_t>(n_test));
    plan.train_indices.insert(plan.train_indices.end(), members->begin() + static_cast<std::ptrdiff_t>(n_test), members->end());
  }
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::sort(plan.test_indices.begin(), plan.test_indices.end());
  return plan;
}

FoldPlan stratified_kfold(std::span<const OutcomeLabel> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::InvalidSpec, "k must be >= 2");
  auto classes = by_class(labels);
  FoldPlan plan;
  plan.folds.resize(k);
  std::size_t position = 0;
  std::uint64_t class_index = 0;
  for (auto* members : {&classes.alive, &classes.deceased}) {
    ++class_index;
    if (members->empty()) continue;
    if (members->size() < k) {
      throw Error(Errc::ClassTooSmall, "class " + std::to_string(class_index) + " has " +
                                           std::to_string(members->size()) + " member(s); need >= " +
                                           std::to_string(k));
    }
    Rng rng(derive_seed(seed, {class_index}));
    rng.shuffle(std::span<std::size_t>(*members));
    for (std::size_t i : *members) plan.folds[position++ % k].push_back(i);
  }
  if (position == 0) throw Error(Errc::EmptyInput, "no rows to fold");
  for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
  return plan;
}

FoldPlan remap(const FoldPlan& plan, std::span<const std::size_t> rows) {
  FoldPlan out;
  out.folds.reserve(plan.folds.size());
  for (const auto& fold : plan.folds) {
    std::vector<std::size_t> mapped;
    mapped.reserve(fold.size());
    for (std::size_t i : fold) mapped.push_back(rows[i]);
    std::sort(mapped.begin(), mapped.end());
    out.folds.push_back(std::move(mapped));
  }
  return out;
}

void to_json(nlohmann::json& j, const ScalerParams& p) {
  j = nlohmann::json{{"min", std::vector<double>(p.min.data(), p.min.data() + p.min.size())},
                     {"max", std::vector<double>(p.max.data(), p.max.data() + p.max.size())}};
}

void to_json(nlohmann::json& j, const SplitPlan& p) {
  j = nlohmann::json{{"train_indices", p.train_indices}, {"test_indices", p.test_indices}};
}

void from_json(const nlohmann::json& j, SplitPlan& p) {
  j.at("train_indices").get_to(p.train_indices);
  j.at("test_indices").get_to(p.test_indices);
}

void to_json(nlohmann::json& j, const FoldPlan& p) { j = nlohmann::json{{"folds", p.folds}}; }

void from_json(const nlohmann::json& j, FoldPlan& p) { j.at("folds").get_to(p.folds); }

}  // namespace pseudosurv
