#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <set>

namespace oracle {

using pseudosurv::SurvivalRecord;

EigenPairs jacobi_eigen(Eigen::MatrixXd a, double tol, int max_sweeps) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= tol * tol * std::max(1.0, a.squaredNorm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  EigenPairs out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

double t_two_sided_p(double t, double df, int intervals) {
  const double x = std::abs(t);
  if (x == 0.0) return 1.0;
  const double log_c = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto density = [&](double u) { return std::exp(log_c - (df + 1) / 2 * std::log1p(u * u / df)); };
  if (intervals % 2) ++intervals;
  const double h = x / intervals;
  double sum = density(0) + density(x);
  for (int i = 1; i < intervals; ++i) sum += density(i * h) * (i % 2 ? 4.0 : 2.0);
  const double central = sum * h / 3.0;  // P(0 < T < x)
  return std::max(0.0, 1.0 - 2.0 * central);
}

double chi2_1df_sf(double x) { return std::erfc(std::sqrt(x / 2.0)); }

std::vector<KmPoint> km_product_limit(std::span<const SurvivalRecord> records) {
  std::set<double> event_times;
  for (const auto& r : records)
    if (r.event) event_times.insert(r.time);
  std::vector<KmPoint> out;
  for (double t : event_times) {
    double s = 1.0;
    for (double u : event_times) {
      if (u > t) break;
      double at_risk = 0, deaths = 0;
      for (const auto& r : records) {
        if (r.time >= u) ++at_risk;
        if (r.time == u && r.event) ++deaths;
      }
      s *= 1.0 - deaths / at_risk;
    }
    out.push_back({t, s});
  }
  return out;
}

double c_index_pairs(std::span<const SurvivalRecord> records, std::span<const double> risks) {
  double concordant = 0.0, comparable = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (!records[i].event || !(records[i].time < records[j].time)) continue;
      comparable += 1;
      if (risks[i] > risks[j]) concordant += 1;
      else if (risks[i] == risks[j]) concordant += 0.5;
    }
  }
  return concordant / comparable;
}

LogRankTable log_rank_table(std::span<const SurvivalRecord> a, std::span<const SurvivalRecord> b) {
  std::set<double> times;
  for (const auto& r : a)
    if (r.event) times.insert(r.time);
  for (const auto& r : b)
    if (r.event) times.insert(r.time);
  LogRankTable table;
  for (double t : times) {
    double n1 = 0, d1 = 0, n2 = 0, d2 = 0;
    for (const auto& r : a) {
      n1 += r.time >= t;
      d1 += r.time == t && r.event;
    }
    for (const auto& r : b) {
      n2 += r.time >= t;
      d2 += r.time == t && r.event;
    }
    const double n = n1 + n2, d = d1 + d2;
    table.observed_minus_expected += d1 - d * n1 / n;
    if (n > 1) table.variance += d * (n1 / n) * (n2 / n) * (n - d) / (n - 1);
  }
  table.statistic = table.variance > 0 ? table.observed_minus_expected * table.observed_minus_expected / table.variance : 0.0;
  return table;
}

double ridge_hotelling(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, double shrinkage) {
  const double na = static_cast<double>(xa.rows()), nb = static_cast<double>(xb.rows());
  const Eigen::Index p = xa.cols();
  const Eigen::VectorXd ma = xa.colwise().mean().transpose();
  const Eigen::VectorXd mb = xb.colwise().mean().transpose();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < xa.rows(); ++i) {
    const Eigen::VectorXd d = xa.row(i).transpose() - ma;
    s += d * d.transpose();
  }
  for (Eigen::Index i = 0; i < xb.rows(); ++i) {
    const Eigen::VectorXd d = xb.row(i).transpose() - mb;
    s += d * d.transpose();
  }
  s /= (na + nb - 2);
  const double ridge = shrinkage * s.trace() / static_cast<double>(p);
  const Eigen::MatrixXd reg = s + ridge * Eigen::MatrixXd::Identity(p, p);
  const Eigen::VectorXd delta = ma - mb;
  const Eigen::VectorXd solved = reg.fullPivLu().solve(delta);
  return na * nb / (na + nb) * delta.dot(solved);
}

double hotelling_exhaustive_p(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, double shrinkage) {
  const Eigen::Index na = xa.rows(), n = xa.rows() + xb.rows();
  Eigen::MatrixXd pooled(n, xa.cols());
  pooled << xa, xb;
  const double observed = ridge_hotelling(xa, xb, shrinkage);
  std::size_t total = 0, extreme = 0;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    if (std::popcount(mask) != na) continue;
    std::vector<Eigen::Index> ia, ib;
    for (Eigen::Index i = 0; i < n; ++i) ((mask >> i) & 1 ? ia : ib).push_back(i);
    const Eigen::MatrixXd a = pooled(ia, Eigen::all), b = pooled(ib, Eigen::all);
    ++total;
    if (ridge_hotelling(a, b, shrinkage) >= observed * (1 - 1e-9)) ++extreme;
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

double mlp_loss(const pseudosurv::MlpWeights& w, const Eigen::MatrixXd& x, const Eigen::VectorXd& targets) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double z = w.b2;
    for (Eigen::Index h = 0; h < w.w1.rows(); ++h) {
      double a = w.b1(h);
      for (Eigen::Index j = 0; j < x.cols(); ++j) a += w.w1(h, j) * x(i, j);
      z += w.w2(h) * std::max(0.0, a);
    }
    const double p = 1.0 / (1.0 + std::exp(-z));
    total += -(targets(i) * std::log(p) + (1 - targets(i)) * std::log(1 - p));
  }
  return total / static_cast<double>(x.rows());
}

Eigen::VectorXd mlp_numeric_gradient(const pseudosurv::MlpWeights& w, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& targets, double step) {
  const Eigen::VectorXd flat = w.flatten();
  Eigen::VectorXd grad(flat.size());
  for (Eigen::Index k = 0; k < flat.size(); ++k) {
    Eigen::VectorXd up = flat, down = flat;
    up(k) += step;
    down(k) -= step;
    const auto wu = pseudosurv::MlpWeights::unflatten(up, w.w1.cols(), w.w1.rows());
    const auto wd = pseudosurv::MlpWeights::unflatten(down, w.w1.cols(), w.w1.rows());
    grad(k) = (mlp_loss(wu, x, targets) - mlp_loss(wd, x, targets)) / (2 * step);
  }
  return grad;
}

EigenPairs covariance_pca(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - mean;
  auto pairs = jacobi_eigen(c.transpose() * c / static_cast<double>(x.rows() - 1));
  for (Eigen::Index k = 0; k < pairs.vectors.cols(); ++k) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < pairs.vectors.rows(); ++i)
      if (std::abs(pairs.vectors(i, k)) > std::abs(pairs.vectors(arg, k))) arg = i;
    if (pairs.vectors(arg, k) < 0) pairs.vectors.col(k) *= -1.0;
  }
  return pairs;
}

}  // namespace oracle
