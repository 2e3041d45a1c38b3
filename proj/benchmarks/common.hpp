#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "pseudosurv/dataset.hpp"
#include "pseudosurv/random.hpp"

namespace bench {

inline Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index p, std::uint64_t seed, double shift = 0.0) {
  pseudosurv::Rng rng(seed);
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() + shift;
  return m;
}

// Proportional hazards on the first column, ~20% censored.
inline std::vector<pseudosurv::SurvivalRecord> ph_records(const Eigen::MatrixXd& x, std::uint64_t seed) {
  pseudosurv::Rng rng(seed);
  std::vector<pseudosurv::SurvivalRecord> out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double t = rng.exponential(std::exp(x(i, 0)));
    const double c = rng.exponential(0.3);
    out.push_back({std::min(t, c), t <= c});
  }
  return out;
}

}  // namespace bench
