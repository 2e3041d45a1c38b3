#include "pseudosurv/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pseudosurv/error.hpp"
#include "pseudosurv/random.hpp"

namespace pseudosurv {

std::string_view to_string(RiskRule rule) noexcept { return rule == RiskRule::Median ? "median" : "mean"; }
std::string_view to_string(RiskGroup group) noexcept { return group == RiskGroup::High ? "high" : "low"; }

RiskRule parse_risk_rule(std::string_view text) {
  if (text == "median") return RiskRule::Median;
  if (text == "mean") return RiskRule::Mean;
  throw Error(Errc::InvalidSpec, "risk rule must be 'median' or 'mean', got '" + std::string(text) + "'");
}

std::string_view to_string(SurvivalKind kind) noexcept {
  switch (kind) {
    case SurvivalKind::Coxr: return "coxr";
    case SurvivalKind::Cwgb: return "cwgb";
    case SurvivalKind::Rsf: return "rsf";
    case SurvivalKind::Fsvm: return "fsvm";
  }
  return "unknown";
}

SurvivalKind parse_survival_kind(std::string_view text) {
  if (text == "coxr") return SurvivalKind::Coxr;
  if (text == "cwgb") return SurvivalKind::Cwgb;
  if (text == "rsf") return SurvivalKind::Rsf;
  if (text == "fsvm") return SurvivalKind::Fsvm;
  throw Error(Errc::InvalidSpec, "unknown survival model '" + std::string(text) + "'");
}

double central_value(std::vector<double> values, RiskRule rule) {
  if (values.empty()) throw Error(Errc::EmptyInput, "no values to summarise");
  if (rule == RiskRule::Mean) {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  return m % 2 == 1 ? values[m / 2] : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

RiskGroupAssignment assign_risk_groups(std::span<const SurvivalRecord> records, RiskRule rule) {
  std::vector<double> event_times;
  for (const auto& r : records) {
    if (r.event) event_times.push_back(r.time);
  }
  if (event_times.empty()) throw Error(Errc::NoEvents, "risk grouping needs at least one observed event");
  RiskGroupAssignment out;
  out.rule = rule;
  out.threshold = central_value(std::move(event_times), rule);
  out.groups.reserve(records.size());
  for (const auto& r : records) out.groups.push_back(r.time <= out.threshold ? RiskGroup::High : RiskGroup::Low);
  return out;
}

std::vector<RiskGroup> group_by_score(std::span<const double> scores, double threshold) {
  std::vector<RiskGroup> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(s > threshold ? RiskGroup::High : RiskGroup::Low);
  return out;
}

void to_json(nlohmann::json& j, const SurvivalHyperparams& h) {
  j = nlohmann::json{{"cox_ridge", h.cox_ridge},
                     {"cox_max_iterations", h.cox_max_iterations},
                     {"cwgb_rounds", h.cwgb_rounds},
                     {"cwgb_learning_rate", h.cwgb_learning_rate},
                     {"rsf_trees", h.rsf_trees},
                     {"rsf_min_events_leaf", h.rsf_min_events_leaf},
                     {"fsvm_alpha", h.fsvm_alpha},
                     {"fsvm_steps", h.fsvm_steps},
                     {"fsvm_step_size", h.fsvm_step_size}};
}

std::vector<SurvivalHyperparams> default_survival_grid(SurvivalKind kind) {
  SurvivalHyperparams base;
  if (kind == SurvivalKind::Cwgb) {
    auto longer = base;
    longer.cwgb_rounds = 500;
    return {base, longer};
  }
  return {base};
}

namespace {

// Indices sorted by time descending (stable for equal times).
std::vector<std::size_t> descending_time_order(std::span<const SurvivalRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].time > records[b].time; });
  return order;
}

struct CoxTerms {
  double log_likelihood = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;  // of the log-likelihood (negative semidefinite)
};

CoxTerms cox_terms(std::span<const SurvivalRecord> records, const Eigen::MatrixXd& x, const Eigen::VectorXd& beta,
                   const std::vector<std::size_t>& order, bool with_hessian) {
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd eta = x * beta;
  const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;

  CoxTerms out;
  out.gradient = Eigen::VectorXd::Zero(p);
  if (with_hessian) out.hessian = Eigen::MatrixXd::Zero(p, p);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = with_hessian ? Eigen::MatrixXd::Zero(p, p) : Eigen::MatrixXd();
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = records[order[pos]].time;
    std::size_t end = pos;
    while (end < order.size() && records[order[end]].time == t) {
      const auto i = static_cast<Eigen::Index>(order[end]);
      const double w = std::exp(eta(i) - shift);
      s0 += w;
      s1 += w * x.row(i).transpose();
      if (with_hessian) s2.noalias() += w * x.row(i).transpose() * x.row(i);
      ++end;
    }
    const Eigen::VectorXd mean = s1 / s0;
    for (std::size_t k = pos; k < end; ++k) {
      const auto i = static_cast<Eigen::Index>(order[k]);
      if (!records[order[k]].event) continue;
      out.log_likelihood += eta(i) - shift - std::log(s0);
      out.gradient += x.row(i).transpose() - mean;
      if (with_hessian) out.hessian -= s2 / s0 - mean * mean.transpose();
    }
    pos = end;
  }
  return out;
}

// d loglik / d eta_i = delta_i - exp(eta_i) * sum_{event k, t_k <= t_i} 1 / S0(t_k)
Eigen::VectorXd cox_eta_gradient(std::span<const SurvivalRecord> records, const Eigen::VectorXd& eta,
                                 const std::vector<std::size_t>& order) {
  const auto n = order.size();
  const double shift = eta.size() > 0 ? eta.maxCoeff() : 0.0;
  // Descending pass: S0 at each distinct time, stored per group start.
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) in `order`
  std::vector<double> s0_at;
  std::vector<double> increments;  // d_k / S0(t_k)
  double s0 = 0.0;
  std::size_t pos = 0;
  while (pos < n) {
    const double t = records[order[pos]].time;
    std::size_t end = pos;
    std::size_t deaths = 0;
    while (end < n && records[order[end]].time == t) {
      s0 += std::exp(eta(static_cast<Eigen::Index>(order[end])) - shift);
      deaths += records[order[end]].event ? 1 : 0;
      ++end;
    }
    groups.emplace_back(pos, end);
    increments.push_back(static_cast<double>(deaths) / s0);
    pos = end;
  }
  Eigen::VectorXd grad(static_cast<Eigen::Index>(n));
  double cumulative = 0.0;
  for (std::size_t g = groups.size(); g-- > 0;) {  // ascending time
    cumulative += increments[g];
    for (std::size_t k = groups[g].first; k < groups[g].second; ++k) {
      const auto i = order[k];
      const double w = std::exp(eta(static_cast<Eigen::Index>(i)) - shift);
      grad(static_cast<Eigen::Index>(i)) = (records[i].event ? 1.0 : 0.0) - w * cumulative;
    }
  }
  return grad;
}

void check_survival_input(const Eigen::MatrixXd& x, std::span<const SurvivalRecord> records) {
  if (static_cast<std::size_t>(x.rows()) != records.size()) {
    throw Error(Errc::LengthMismatch, "feature rows and survival records differ in length");
  }
  if (records.size() < 5) throw Error(Errc::TooFewRows, "survival fitting needs at least 5 rows");
  const auto events = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.event; });
  if (events < 2) throw Error(Errc::TooFewEvents, "survival fitting needs at least 2 observed events");
  if (!x.allFinite()) throw Error(Errc::NonFiniteInput, "survival design matrix has non-finite values");
  for (const auto& r : records) {
    if (!(r.time > 0.0) || !std::isfinite(r.time)) throw Error(Errc::InvalidSurvival, "survival times must be > 0");
  }
}

// ---- COXR --------------------------------------------------------------------

CoxState fit_cox(const Eigen::MatrixXd& x, std::span<const SurvivalRecord> records, const SurvivalHyperparams& h) {
  const auto order = descending_time_order(records);
  const Eigen::Index p = x.cols();
  const double ridge = h.cox_ridge;
  auto penalised = [&](const Eigen::VectorXd& beta) {
    return cox_terms(records, x, beta, order, false).log_likelihood - ridge * beta.squaredNorm();
  };

  CoxState state;
  state.beta = Eigen::VectorXd::Zero(p);
  double current = penalised(state.beta);
  state.log_likelihood_trace.push_back(current);
  for (std::size_t it = 0; it < h.cox_max_iterations; ++it) {
    auto terms = cox_terms(records, x, state.beta, order, true);
    const Eigen::VectorXd grad = terms.gradient - 2.0 * ridge * state.beta;
    const Eigen::MatrixXd info = -terms.hessian + 2.0 * ridge * Eigen::MatrixXd::Identity(p, p);
    const Eigen::VectorXd direction = info.ldlt().solve(grad);
    if (!direction.allFinite()) break;

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double value = current;
    for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
      candidate = state.beta + step * direction;
      value = penalised(candidate);
      if (std::isfinite(value) && value >= current) {
        accepted = true;
        break;
      }
    }
    ++state.iterations;
    if (!accepted) {  // no ascent possible along the Newton direction
      state.converged = true;
      break;
    }
    const double change = value - current;
    state.beta = candidate;
    current = value;
    state.log_likelihood_trace.push_back(current);
    if (std::abs(change) < 1e-9) {
      state.converged = true;
      break;
    }
  }
  if (!state.converged && (!state.beta.allFinite() || state.beta.norm() > 1e3)) {
    throw Error(Errc::NonConvergence, "Cox Newton iterations did not converge; coefficients diverging");
  }
  return state;
}

// ---- CWGB --------------------------------------------------------------------

CwgbState fit_cwgb(const Eigen::MatrixXd& x, std::span<const SurvivalRecord> records, const SurvivalHyperparams& h) {
  const auto order = descending_time_order(records);
  const Eigen::Index p = x.cols();
  const Eigen::VectorXd col_sq = x.colwise().squaredNorm().transpose();
  CwgbState state;
  state.coefficients = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(x.rows());
  auto loss_of = [&](const Eigen::VectorXd& e) {
    return -cox_partial_log_likelihood(records, std::span<const double>(e.data(), static_cast<std::size_t>(e.size())));
  };
  double loss = loss_of(eta);
  state.loss_trace.push_back(loss);
  for (std::size_t m = 0; m < h.cwgb_rounds; ++m) {
    const Eigen::VectorXd residual = cox_eta_gradient(records, eta, order);
    const Eigen::VectorXd cross = x.transpose() * residual;
    Eigen::Index best = -1;
    double best_gain = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) <= 0.0) continue;
      const double gain = cross(j) * cross(j) / col_sq(j);
      if (gain > best_gain) {
        best_gain = gain;
        best = j;
      }
    }
    if (best < 0) {  // gradient orthogonal to every feature: nothing to fit
      state.loss_trace.push_back(loss);
      continue;
    }
    double step = h.cwgb_learning_rate * cross(best) / col_sq(best);
    // The base-learner update is a descent direction; halve on overshoot.
    for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
      const Eigen::VectorXd trial = eta + step * x.col(best);
      const double trial_loss = loss_of(trial);
      if (trial_loss <= loss) {
        eta = trial;
        loss = trial_loss;
        state.coefficients(best) += step;
        break;
      }
    }
    state.loss_trace.push_back(loss);
  }
  return state;
}

// ---- log-rank machinery (shared by RSF splits and the public test) ----------

struct LogRankSums {
  double observed_minus_expected = 0.0;
  double variance = 0.0;
};

// `order` lists row ids ascending by time; in_a marks group membership.
LogRankSums log_rank_sums(std::span<const SurvivalRecord> records, std::span<const std::size_t> order,
                          const std::vector<char>& in_a, std::size_t n_a) {
  LogRankSums s;
  double n = static_cast<double>(order.size());
  double na = static_cast<double>(n_a);
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = records[order[pos]].time;
    double d = 0.0, da = 0.0, leaving = 0.0, leaving_a = 0.0;
    while (pos < order.size() && records[order[pos]].time == t) {
      const auto i = order[pos];
      const bool a = in_a[i] != 0;
      if (records[i].event) {
        d += 1.0;
        da += a ? 1.0 : 0.0;
      }
      leaving += 1.0;
      leaving_a += a ? 1.0 : 0.0;
      ++pos;
    }
    if (d > 0.0) {
      // written symmetrically in the two groups so swapping them negates the
      // sum exactly instead of up to rounding
      const double nb = n - na;
      const double ua = da - d * na / n;
      const double ub = (d - da) - d * nb / n;
      s.observed_minus_expected += 0.5 * (ua - ub);
      if (n > 1.0) s.variance += d * (na * nb) * (n - d) / (n * n * (n - 1.0));
    }
    n -= leaving;
    na -= leaving_a;
  }
  return s;
}

// ---- RSF ----------------------------------------------------------------------

std::vector<double> nelson_aalen_on_grid(std::span<const SurvivalRecord> records, std::span<const std::size_t> rows,
                                         const std::vector<double>& grid) {
  std::vector<std::size_t> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });
  std::vector<double> hazard(grid.size(), 0.0);
  double at_risk = static_cast<double>(sorted.size());
  double cumulative = 0.0;
  std::size_t g = 0;
  std::size_t pos = 0;
  while (pos < sorted.size()) {
    const double t = records[sorted[pos]].time;
    double d = 0.0, leaving = 0.0;
    while (pos < sorted.size() && records[sorted[pos]].time == t) {
      d += records[sorted[pos]].event ? 1.0 : 0.0;
      leaving += 1.0;
      ++pos;
    }
    while (g < grid.size() && grid[g] < t) hazard[g++] = cumulative;
    if (d > 0.0) cumulative += d / at_risk;
    at_risk -= leaving;
  }
  while (g < grid.size()) hazard[g++] = cumulative;
  return hazard;
}

class RsfBuilder {
 public:
  RsfBuilder(const Eigen::MatrixXd& x, std::span<const SurvivalRecord> records, const std::vector<double>& grid,
             std::size_t min_events, std::size_t candidates, Rng& rng)
      : x_(x), records_(records), grid_(grid), min_events_(min_events), candidates_(candidates), rng_(rng),
        in_left_(records.size(), 0) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), 0);
  }

  RsfTree build(std::vector<std::size_t> rows) {
    RsfTree tree;
    grow(tree, std::move(rows));
    return tree;
  }

 private:
  int grow(RsfTree& tree, std::vector<std::size_t> rows) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto events = static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [&](std::size_t r) { return records_[r].event; }));

    int best_feature = -1;
    double best_threshold = 0.0;
    if (events >= 2 * min_events_) {
      std::vector<std::size_t> by_time = rows;
      std::stable_sort(by_time.begin(), by_time.end(),
                       [&](std::size_t a, std::size_t b) { return records_[a].time < records_[b].time; });
      double best_z = 0.0;
      const std::size_t m = std::min(candidates_, features_.size());
      for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(rng_.below(features_.size() - i));
        std::swap(features_[i], features_[j]);
      }
      std::vector<std::size_t> by_value = rows;
      for (std::size_t c = 0; c < m; ++c) {
        const auto f = static_cast<Eigen::Index>(features_[c]);
        std::stable_sort(by_value.begin(), by_value.end(), [&](std::size_t a, std::size_t b) {
          return x_(static_cast<Eigen::Index>(a), f) < x_(static_cast<Eigen::Index>(b), f);
        });
        std::size_t left_events = 0;
        for (std::size_t k = 0; k + 1 < by_value.size(); ++k) {
          const auto r = by_value[k];
          ++in_left_[r];
          left_events += records_[r].event ? 1 : 0;
          const double v = x_(static_cast<Eigen::Index>(r), f);
          const double next = x_(static_cast<Eigen::Index>(by_value[k + 1]), f);
          if (v == next) continue;
          if (left_events < min_events_ || events - left_events < min_events_) continue;
          const auto s = log_rank_sums(records_, by_time, in_left_, k + 1);
          if (s.variance <= 0.0) continue;
          const double z = std::abs(s.observed_minus_expected) / std::sqrt(s.variance);
          if (z > best_z) {
            best_z = z;
            best_feature = static_cast<int>(f);
            best_threshold = 0.5 * (v + next);
          }
        }
        for (std::size_t r : by_value) in_left_[r] = 0;
      }
    }

    if (best_feature < 0) {
      tree.nodes[static_cast<std::size_t>(id)].leaf = static_cast<int>(tree.hazards.size());
      tree.hazards.push_back(nelson_aalen_on_grid(records_, rows, grid_));
      return id;
    }
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

  const Eigen::MatrixXd& x_;
  std::span<const SurvivalRecord> records_;
  const std::vector<double>& grid_;
  std::size_t min_events_;
  std::size_t candidates_;
  Rng& rng_;
  std::vector<std::size_t> features_;
  // Counts, not flags: bootstrap rows repeat.
  std::vector<char> in_left_;
};

RsfState fit_rsf(const Eigen::MatrixXd& x, std::span<const SurvivalRecord> records, const SurvivalHyperparams& h,
                 std::uint64_t seed) {
  RsfState state;
  for (const auto& r : records) {
    if (r.event) state.event_grid.push_back(r.time);
  }
  std::sort(state.event_grid.begin(), state.event_grid.end());
  state.event_grid.erase(std::unique(state.event_grid.begin(), state.event_grid.end()), state.event_grid.end());

  const auto n = records.size();
  const auto q = static_cast<std::size_t>(x.cols());
  const auto candidates =
      std::max<std::size_t>(1, std::min(q, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(q))))));
  for (std::size_t t = 0; t < h.rsf_trees; ++t) {
    Rng rng(derive_seed(seed, {t}));
    std::vector<std::size_t> bootstrap(n);
    for (auto& r : bootstrap) r = static_cast<std::size_t>(rng.below(n));
    RsfBuilder builder(x, records, state.event_grid, std::max<std::size_t>(h.rsf_min_events_leaf, 1), candidates, rng);
    state.trees.push_back(builder.build(std::move(bootstrap)));
  }
  return state;
}

// ---- FSVM ---------------------------------------------------------------------

FsvmState fit_fsvm(const Eigen::MatrixXd& x, std::span<const SurvivalRecord> records, const SurvivalHyperparams& h) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (earlier event, later time)
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].event) continue;
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (records[i].time < records[j].time) pairs.emplace_back(i, j);
    }
  }
  FsvmState state;
  state.w = Eigen::VectorXd::Zero(x.cols());
  state.comparable_pairs = pairs.size();
  if (pairs.empty()) return state;
  const double scale = 2.0 * h.fsvm_alpha / static_cast<double>(pairs.size());
  Eigen::VectorXd coef(x.rows());
  for (std::size_t step = 0; step < h.fsvm_steps; ++step) {
    const Eigen::VectorXd s = x * state.w;
    coef.setZero();
    for (const auto& [i, j] : pairs) {
      const double slack = 1.0 - (s(static_cast<Eigen::Index>(i)) - s(static_cast<Eigen::Index>(j)));
      if (slack > 0.0) {
        coef(static_cast<Eigen::Index>(i)) += slack;
        coef(static_cast<Eigen::Index>(j)) -= slack;
      }
    }
    const Eigen::VectorXd grad = state.w - scale * (x.transpose() * coef);
    state.w -= h.fsvm_step_size * grad;
  }
  return state;
}

}  // namespace

double cox_partial_log_likelihood(std::span<const SurvivalRecord> records, std::span<const double> eta) {
  if (records.size() != eta.size()) throw Error(Errc::LengthMismatch, "records and predictor differ in length");
  const auto order = descending_time_order(records);
  const double shift = eta.empty() ? 0.0 : *std::max_element(eta.begin(), eta.end());
  double s0 = 0.0, ll = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = records[order[pos]].time;
    std::size_t end = pos;
    while (end < order.size() && records[order[end]].time == t) s0 += std::exp(eta[order[end++]] - shift);
    for (std::size_t k = pos; k < end; ++k) {
      if (records[order[k]].event) ll += eta[order[k]] - shift - std::log(s0);
    }
    pos = end;
  }
  return ll;
}

SurvivalModel fit_survival(SurvivalKind kind, const Eigen::MatrixXd& x, std::span<const SurvivalRecord> records,
                           const SurvivalHyperparams& h, std::uint64_t seed) {
  check_survival_input(x, records);
  SurvivalModel model;
  model.kind = kind;
  model.hyperparams = h;
  model.n_features = static_cast<std::size_t>(x.cols());
  model.seed = seed;
  switch (kind) {
    case SurvivalKind::Coxr: model.state = fit_cox(x, records, h); break;
    case SurvivalKind::Cwgb: model.state = fit_cwgb(x, records, h); break;
    case SurvivalKind::Rsf: model.state = fit_rsf(x, records, h, seed); break;
    case SurvivalKind::Fsvm: model.state = fit_fsvm(x, records, h); break;
  }
  return model;
}

std::vector<double> predict_risk(const SurvivalModel& model, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.n_features) {
    throw Error(Errc::DimensionMismatch, "survival model fitted on " + std::to_string(model.n_features) +
                                             " features, input has " + std::to_string(x.cols()));
  }
  std::vector<double> risk(static_cast<std::size_t>(x.rows()), 0.0);
  auto linear = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd s = x * w;
    for (Eigen::Index i = 0; i < s.size(); ++i) risk[static_cast<std::size_t>(i)] = s(i);
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, CoxState>) {
          linear(s.beta);
        } else if constexpr (std::is_same_v<T, CwgbState>) {
          linear(s.coefficients);
        } else if constexpr (std::is_same_v<T, FsvmState>) {
          linear(s.w);
        } else {
          if (s.trees.empty()) return;
          for (Eigen::Index i = 0; i < x.rows(); ++i) {
            double total = 0.0;
            for (const auto& tree : s.trees) {
              const RsfNode* node = &tree.nodes[0];
              while (node->feature >= 0) {
                node = &tree.nodes[static_cast<std::size_t>(x(i, node->feature) <= node->threshold ? node->left
                                                                                                   : node->right)];
              }
              const auto& hz = tree.hazards[static_cast<std::size_t>(node->leaf)];
              total += std::accumulate(hz.begin(), hz.end(), 0.0);
            }
            risk[static_cast<std::size_t>(i)] = total / static_cast<double>(s.trees.size());
          }
        }
      },
      model.state);
  return risk;
}

double KmCurve::survival_at(double t) const noexcept {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KmCurve kaplan_meier(std::span<const SurvivalRecord> records) {
  if (records.empty()) throw Error(Errc::EmptyInput, "Kaplan-Meier of an empty sample");
  constexpr double z = 1.959963984540054;
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });

  KmCurve curve;
  curve.n = records.size();
  std::size_t at_risk = records.size();
  double s = 1.0;
  double greenwood = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double t = records[order[pos]].time;
    std::size_t deaths = 0, leaving = 0;
    while (pos < order.size() && records[order[pos]].time == t) {
      deaths += records[order[pos]].event ? 1 : 0;
      ++leaving;
      ++pos;
    }
    if (deaths > 0) {
      const auto n = static_cast<double>(at_risk);
      const auto d = static_cast<double>(deaths);
      s *= 1.0 - d / n;
      double lower = 0.0, upper = 0.0;
      if (deaths < at_risk) {
        greenwood += d / (n * (n - d));
        const double log_s = std::log(s);
        const double se = std::sqrt(greenwood) / std::abs(log_s);
        lower = std::pow(s, std::exp(z * se));
        upper = std::pow(s, std::exp(-z * se));
      }
      if (s == 1.0) lower = upper = 1.0;
      curve.times.push_back(t);
      curve.at_risk.push_back(at_risk);
      curve.events.push_back(deaths);
      curve.survival.push_back(s);
      curve.ci_lower.push_back(std::clamp(std::min(lower, s), 0.0, 1.0));
      curve.ci_upper.push_back(std::clamp(std::max(upper, s), 0.0, 1.0));
    }
    at_risk -= leaving;
  }
  return curve;
}

TestResult log_rank(std::span<const SurvivalRecord> a, std::span<const SurvivalRecord> b) {
  if (a.empty() || b.empty()) throw Error(Errc::EmptyGroup, "log-rank needs two nonempty groups");
  std::vector<SurvivalRecord> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  if (std::none_of(pooled.begin(), pooled.end(), [](const auto& r) { return r.event; })) {
    throw Error(Errc::NoEvents, "log-rank needs at least one observed event");
  }
  std::vector<char> in_a(pooled.size(), 0);
  std::fill(in_a.begin(), in_a.begin() + static_cast<std::ptrdiff_t>(a.size()), 1);
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return pooled[x].time < pooled[y].time; });
  const auto s = log_rank_sums(pooled, order, in_a, a.size());

  TestResult r;
  r.method = "log_rank";
  r.degrees_of_freedom = 1.0;
  if (s.variance <= 0.0) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.statistic = s.observed_minus_expected * s.observed_minus_expected / s.variance;
  r.p_value = chi_square_sf(r.statistic, 1.0);
  return r;
}

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // count of inserted ranks < i
  std::size_t prefix(std::size_t i) const {
    std::size_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::size_t> tree_;
};

}  // namespace

double concordance_index(std::span<const SurvivalRecord> records, std::span<const double> risks) {
  if (records.size() != risks.size()) throw Error(Errc::LengthMismatch, "records and risks differ in length");
  const std::size_t n = records.size();
  std::vector<double> distinct(risks.begin(), risks.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  auto rank_of = [&](double r) {
    return static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), r) - distinct.begin());
  };

  const auto order = descending_time_order(records);
  Fenwick later(distinct.size());
  std::size_t inserted = 0;
  std::uint64_t concordant = 0, tied = 0, comparable = 0;
  std::size_t pos = 0;
  while (pos < n) {
    const double t = records[order[pos]].time;
    std::size_t end = pos;
    while (end < n && records[order[end]].time == t) ++end;
    for (std::size_t k = pos; k < end; ++k) {
      const auto i = order[k];
      if (!records[i].event) continue;
      const auto rank = rank_of(risks[i]);
      const auto below = later.prefix(rank);
      const auto at_or_below = later.prefix(rank + 1);
      concordant += below;
      tied += at_or_below - below;
      comparable += inserted;
    }
    for (std::size_t k = pos; k < end; ++k) {
      later.add(rank_of(risks[order[k]]));
      ++inserted;
    }
    pos = end;
  }
  if (comparable == 0) throw Error(Errc::NoComparablePairs, "no comparable pairs for the concordance index");
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) / static_cast<double>(comparable);
}

std::string km_curve_csv(std::string_view group, const KmCurve& curve, bool header) {
  std::ostringstream os;
  if (header) os << kKmCsvHeader << '\n';
  os << group << ",0," << curve.n << ",1,1,1\n";
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    os << group << ',' << format_number(curve.times[i]) << ',' << curve.at_risk[i] << ','
       << format_number(curve.survival[i]) << ',' << format_number(curve.ci_lower[i]) << ','
       << format_number(curve.ci_upper[i]) << '\n';
  }
  return os.str();
}

std::string km_svg(std::span<const std::pair<std::string, KmCurve>> curves) {
  constexpr double width = 640, height = 400, left = 60, right = 20, top = 20, bottom = 50;
  static constexpr const char* kColors[] = {"#c0392b", "#2471a3", "#229954", "#7d3c98", "#b9770e"};
  double t_max = 1.0;
  for (const auto& [_, c] : curves) {
    if (!c.times.empty()) t_max = std::max(t_max, c.times.back());
  }
  auto fx = [&](double t) { return left + (width - left - right) * t / t_max; };
  auto fy = [&](double s) { return top + (height - top - bottom) * (1.0 - s); };
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << fmt(fy(0)) << "\" x2=\"" << width - right << "\" y2=\"" << fmt(fy(0))
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << fmt(fy(0)) << "\" x2=\"" << left << "\" y2=\"" << fmt(fy(1))
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\" font-size=\"12\">time (months)</text>\n";
  os << "<text x=\"15\" y=\"" << height / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 " << height / 2
     << ")\" text-anchor=\"middle\">survival</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double s = tick / 4.0;
    os << "<text x=\"" << left - 8 << "\" y=\"" << fmt(fy(s) + 4) << "\" text-anchor=\"end\" font-size=\"10\">"
       << fmt(s) << "</text>\n";
  }
  os << "<text x=\"" << width - right << "\" y=\"" << fmt(fy(0) + 16) << "\" text-anchor=\"end\" font-size=\"10\">"
     << fmt(t_max) << "</text>\n";
  std::size_t index = 0;
  for (const auto& [name, c] : curves) {
    const char* color = kColors[index % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << fmt(fx(0)) << ','
       << fmt(fy(1));
    double s = 1.0;
    for (std::size_t i = 0; i < c.times.size(); ++i) {
      os << ' ' << fmt(fx(c.times[i])) << ',' << fmt(fy(s));
      s = c.survival[i];
      os << ' ' << fmt(fx(c.times[i])) << ',' << fmt(fy(s));
    }
    os << "\"/>\n";
    os << "<text x=\"" << width - right - 100 << "\" y=\"" << top + 15 * (index + 1) << "\" font-size=\"11\" fill=\""
       << color << "\">" << name << " (n=" << c.n << ")</text>\n";
    ++index;
  }
  os << "</svg>\n";
  return os.str();
}

void to_json(nlohmann::json& j, const KmCurve& c) {
  j = nlohmann::json{{"n", c.n},         {"times", c.times},       {"at_risk", c.at_risk},
                     {"events", c.events}, {"survival", c.survival}, {"ci_lower", c.ci_lower},
                     {"ci_upper", c.ci_upper}};
}

}  // namespace pseudosurv
