#include "pseudosurv/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <nlohmann/json.hpp>

#include "pseudosurv/error.hpp"
#include "pseudosurv/random.hpp"

namespace pseudosurv {

void to_json(nlohmann::json& j, const TestResult& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(v > 0 ? "inf" : v < 0 ? "-inf" : "nan"); };
  j = nlohmann::json{{"statistic", num(r.statistic)}, {"p_value", r.p_value}, {"method", r.method}};
  nlohmann::json meta = nlohmann::json::object();
  if (r.degrees_of_freedom) meta["degrees_of_freedom"] = *r.degrees_of_freedom;
  if (r.permutations) meta["permutations"] = *r.permutations;
  j["meta"] = std::move(meta);
}

void from_json(const nlohmann::json& j, TestResult& r) {
  const auto& s = j.at("statistic");
  if (s.is_string()) {
    const auto v = s.get<std::string>();
    r.statistic = v == "inf" ? std::numeric_limits<double>::infinity()
                  : v == "-inf" ? -std::numeric_limits<double>::infinity()
                                : std::numeric_limits<double>::quiet_NaN();
  } else {
    r.statistic = s.get<double>();
  }
  r.p_value = j.at("p_value").get<double>();
  r.method = j.at("method").get<std::string>();
  const auto& meta = j.at("meta");
  if (meta.contains("degrees_of_freedom")) r.degrees_of_freedom = meta.at("degrees_of_freedom").get<double>();
  if (meta.contains("permutations")) r.permutations = meta.at("permutations").get<std::size_t>();
}

double student_t_two_sided_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  // P(|T| > t) = I_{df / (df + t^2)}(df / 2, 1 / 2)
  const double x = df / (df + t * t);
  return std::clamp(boost::math::ibeta(df / 2.0, 0.5, x), 0.0, 1.0);
}

double chi_square_sf(double x, double df) {
  if (!(x > 0.0)) return 1.0;
  if (std::isinf(x)) return 0.0;
  return std::clamp(boost::math::gamma_q(df / 2.0, x / 2.0), 0.0, 1.0);
}

TestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::LengthMismatch, "paired samples differ in length");
  const std::size_t m = a.size();
  if (m < 2) throw Error(Errc::TooFewPairs, "paired t-test needs at least 2 pairs");
  std::vector<double> d(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i])) throw Error(Errc::NonFiniteInput, "non-finite paired value");
    d[i] = a[i] - b[i];
  }
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(m);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(m - 1));

  TestResult r;
  r.method = "paired_t";
  r.degrees_of_freedom = static_cast<double>(m - 1);
  if (sd == 0.0) {
    if (mean == 0.0) {
      r.statistic = 0.0;
      r.p_value = 1.0;
    } else {
      r.statistic = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  r.statistic = mean / (sd / std::sqrt(static_cast<double>(m)));
  r.p_value = student_t_two_sided_p(r.statistic, static_cast<double>(m - 1));
  return r;
}

namespace {

void check_groups(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb) {
  if (xa.rows() < 2 || xb.rows() < 2) throw Error(Errc::TooFewSamples, "each group needs at least 2 rows");
  if (xa.cols() != xb.cols()) throw Error(Errc::DimensionMismatch, "groups have different feature counts");
  if (xa.cols() == 0) throw Error(Errc::DimensionMismatch, "groups have no features");
  if (!xa.allFinite() || !xb.allFinite()) throw Error(Errc::NonFiniteInput, "non-finite feature value");
}

// Permutation engine. With B the centred scatter of the pooled rows, any
// split (na, nb) has pooled covariance S = (B - c d d') / (N - 2), c = na nb / N,
// so with A = B / (N - 2) + lambda I and g = d' A^-1 d, Sherman-Morrison
// gives d' (S + lambda I)^-1 d = g / (1 - u g), u = c / (N - 2). One
// eigendecomposition of B then makes each split O(N p + p^2).
class SplitStatistic {
 public:
  SplitStatistic(const Eigen::MatrixXd& pooled, std::size_t na, double shrinkage)
      : pooled_(pooled), na_(na), shrinkage_(shrinkage) {
    const auto n = static_cast<double>(pooled.rows());
    const Eigen::RowVectorXd mean = pooled.colwise().mean();
    const Eigen::MatrixXd centered = pooled.rowwise() - mean;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered.transpose() * centered);
    eigvecs_ = eig.eigenvectors();
    eigvals_ = eig.eigenvalues().cwiseMax(0.0);
    trace_b_ = eigvals_.sum();
    total_ = pooled.colwise().sum().transpose();
    scale_ = n - 2.0;
    c_ = static_cast<double>(na) * (n - static_cast<double>(na)) / n;
  }

  /// `in_a[i]` marks pooled row i as a member of the first group.
  double operator()(const std::vector<std::size_t>& a_rows) const {
    const auto n = static_cast<double>(pooled_.rows());
    const auto na = static_cast<double>(na_);
    Eigen::VectorXd sum_a = Eigen::VectorXd::Zero(pooled_.cols());
    for (std::size_t r : a_rows) sum_a += pooled_.row(static_cast<Eigen::Index>(r)).transpose();
    const Eigen::VectorXd delta = sum_a / na - (total_ - sum_a) / (n - na);
    const double p = static_cast<double>(pooled_.cols());
    const double trace_s = (trace_b_ - c_ * delta.squaredNorm()) / scale_;
    double lambda = shrinkage_ * trace_s / p;
    if (!(lambda > 0.0)) lambda = shrinkage_ > 0.0 ? shrinkage_ : 1.0;
    const Eigen::VectorXd proj = eigvecs_.transpose() * delta;
    const Eigen::ArrayXd denom = eigvals_.array() / scale_ + lambda;
    const double g = (proj.array().square() / denom).sum();
    const double u = c_ / scale_;
    return c_ * g / (1.0 - u * g);
  }

 private:
  const Eigen::MatrixXd& pooled_;
  std::size_t na_;
  double shrinkage_;
  Eigen::MatrixXd eigvecs_;
  Eigen::VectorXd eigvals_;
  Eigen::VectorXd total_;
  double trace_b_ = 0.0;
  double scale_ = 0.0;
  double c_ = 0.0;
};

// Lexicographic order on matrices, used to pool the two groups in a
// canonical order so swapping the arguments reuses the same permutations.
bool lex_less(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != b(i, j)) return a(i, j) < b(i, j);
    }
  }
  return false;
}

bool next_combination(std::vector<std::size_t>& c, std::size_t n) {
  const std::size_t k = c.size();
  for (std::size_t i = k; i-- > 0;) {
    if (c[i] < n - k + i) {
      ++c[i];
      for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

double hdts_statistic(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, double shrinkage) {
  check_groups(xa, xb);
  const auto na = static_cast<double>(xa.rows());
  const auto nb = static_cast<double>(xb.rows());
  const Eigen::VectorXd delta = (xa.colwise().mean() - xb.colwise().mean()).transpose();
  const Eigen::MatrixXd ca = xa.rowwise() - xa.colwise().mean();
  const Eigen::MatrixXd cb = xb.rowwise() - xb.colwise().mean();
  const Eigen::MatrixXd pooled = (ca.transpose() * ca + cb.transpose() * cb) / (na + nb - 2.0);
  const auto p = static_cast<double>(xa.cols());
  double lambda = shrinkage * pooled.trace() / p;
  if (!(lambda > 0.0)) lambda = shrinkage > 0.0 ? shrinkage : 1.0;
  const Eigen::MatrixXd reg = pooled + lambda * Eigen::MatrixXd::Identity(xa.cols(), xa.cols());
  return na * nb / (na + nb) * delta.dot(reg.ldlt().solve(delta));
}

TestResult hdts_test(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb, const HdtsOptions& options) {
  check_groups(xa, xb);
  if (!options.exhaustive && options.permutations < 99) {
    throw Error(Errc::InvalidSpec, "hdts needs at least 99 permutations");
  }
  if (!(options.shrinkage >= 0.0)) throw Error(Errc::InvalidSpec, "shrinkage must be >= 0");

  const bool a_first = !lex_less(xb, xa);
  const Eigen::MatrixXd& first = a_first ? xa : xb;
  const Eigen::MatrixXd& second = a_first ? xb : xa;
  const auto n1 = static_cast<std::size_t>(first.rows());
  const auto n = n1 + static_cast<std::size_t>(second.rows());

  Eigen::MatrixXd pooled(static_cast<Eigen::Index>(n), first.cols());
  pooled << first, second;
  const SplitStatistic stat(pooled, n1, options.shrinkage);

  std::vector<std::size_t> observed(n1);
  std::iota(observed.begin(), observed.end(), 0);
  TestResult r;
  r.method = "hdts_permutation";
  r.statistic = stat(observed);
  const double bar = r.statistic * (1.0 - 1e-12);

  if (options.exhaustive) {
    std::size_t total = 0, extreme = 0;
    std::vector<std::size_t> split = observed;
    do {
      ++total;
      if (stat(split) >= bar) ++extreme;
    } while (next_combination(split, n));
    r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
    r.permutations = total;
    return r;
  }

  std::size_t extreme = 0;
  std::vector<std::size_t> order(n);
  std::vector<std::size_t> split(n1);
  for (std::size_t b = 0; b < options.permutations; ++b) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(options.seed, {b}));
    rng.shuffle(std::span<std::size_t>(order));
    std::copy_n(order.begin(), n1, split.begin());
    if (stat(split) >= bar) ++extreme;
  }
  r.p_value = static_cast<double>(1 + extreme) / static_cast<double>(options.permutations + 1);
  r.permutations = options.permutations;
  return r;
}

}  // namespace pseudosurv
