#include "pseudosurv/pca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "pseudosurv/error.hpp"

namespace pseudosurv {

namespace {

void canonicalize_sign(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> component) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index j = 0; j < component.size(); ++j) {
    const double a = std::abs(component(j));
    if (a > best_abs) {
      best_abs = a;
      best = j;
    }
  }
  if (component(best) < 0.0) component = -component;
}

}  // namespace

PcaModel fit_pca(const Eigen::MatrixXd& train, const PcaPolicy& policy) {
  const Eigen::Index n = train.rows();
  const Eigen::Index p = train.cols();
  if (n < 2) throw Error(Errc::TooFewRows, "PCA needs at least 2 rows, got " + std::to_string(n));
  if (!train.allFinite()) throw Error(Errc::NonFiniteInput, "PCA input contains non-finite values");
  const Eigen::Index cap = std::min(n - 1, p);

  if (const auto* count = std::get_if<ComponentCount>(&policy)) {
    if (count->count == 0 || static_cast<Eigen::Index>(count->count) > cap) {
      throw Error(Errc::TooManyComponents, "requested " + std::to_string(count->count) +
                                               " components; allowed 1.." + std::to_string(cap));
    }
  } else {
    const double f = std::get<VarianceThreshold>(policy).fraction;
    if (!(f > 0.0 && f <= 1.0)) throw Error(Errc::InvalidSpec, "variance threshold must lie in (0, 1]");
  }

  PcaModel model;
  model.mean = train.colwise().mean().transpose();
  const Eigen::MatrixXd centered = train.rowwise() - model.mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::VectorXd var = sv.array().square();
  const double total = var.sum();

  Eigen::Index rank = 0;
  const double tol = static_cast<double>(std::max(n, p)) * std::numeric_limits<double>::epsilon() *
                     (sv.size() > 0 ? sv(0) : 0.0);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }

  Eigen::Index q = 0;
  if (const auto* count = std::get_if<ComponentCount>(&policy)) {
    q = static_cast<Eigen::Index>(count->count);
  } else {
    const double f = std::get<VarianceThreshold>(policy).fraction;
    double cumulative = 0.0;
    q = std::max<Eigen::Index>(rank, 1);
    for (Eigen::Index i = 0; i < rank; ++i) {
      cumulative += var(i) / total;
      if (cumulative >= f - 1e-12) {
        q = i + 1;
        break;
      }
    }
    q = std::clamp<Eigen::Index>(q, 1, std::max<Eigen::Index>(std::min(cap, std::max<Eigen::Index>(rank, 1)), 1));
  }

  model.components = svd.matrixV().leftCols(q).transpose();
  for (Eigen::Index i = 0; i < q; ++i) canonicalize_sign(model.components.row(i));
  model.explained_variance_ratio =
      total > 0.0 ? Eigen::VectorXd(var.head(q) / total) : Eigen::VectorXd::Zero(q);
  return model;
}

Eigen::MatrixXd transform_pca(const PcaModel& model, const Eigen::MatrixXd& m) {
  if (m.cols() != model.mean.size()) {
    throw Error(Errc::DimensionMismatch, "PCA fitted on " + std::to_string(model.mean.size()) +
                                             " features, input has " + std::to_string(m.cols()));
  }
  return (m.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Eigen::MatrixXd inverse_transform_pca(const PcaModel& model, const Eigen::MatrixXd& scores) {
  if (scores.cols() != model.components.rows()) {
    throw Error(Errc::DimensionMismatch, "score width does not match component count");
  }
  return (scores * model.components).rowwise() + model.mean.transpose();
}

void to_json(nlohmann::json& j, const PcaModel& m) {
  nlohmann::json comps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.components.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.components.cols()));
    for (Eigen::Index c = 0; c < m.components.cols(); ++c) row[static_cast<std::size_t>(c)] = m.components(i, c);
    comps.push_back(std::move(row));
  }
  j = nlohmann::json{
      {"mean", std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size())},
      {"components", std::move(comps)},
      {"explained_variance_ratio",
       std::vector<double>(m.explained_variance_ratio.data(),
                           m.explained_variance_ratio.data() + m.explained_variance_ratio.size())}};
}

void from_json(const nlohmann::json& j, PcaModel& m) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto comps = j.at("components").get<std::vector<std::vector<double>>>();
  const auto ratio = j.at("explained_variance_ratio").get<std::vector<double>>();
  m.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  m.components.resize(static_cast<Eigen::Index>(comps.size()), static_cast<Eigen::Index>(mean.size()));
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].size() != mean.size()) throw Error(Errc::DimensionMismatch, "component width mismatch");
    for (std::size_t c = 0; c < mean.size(); ++c) {
      m.components(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = comps[i][c];
    }
  }
  m.explained_variance_ratio =
      Eigen::Map<const Eigen::VectorXd>(ratio.data(), static_cast<Eigen::Index>(ratio.size()));
}

void to_json(nlohmann::json& j, const PcaPolicy& policy) {
  if (const auto* v = std::get_if<VarianceThreshold>(&policy)) {
    j = nlohmann::json{{"variance_threshold", v->fraction}};
  } else {
    j = nlohmann::json{{"n_components", std::get<ComponentCount>(policy).count}};
  }
}

void from_json(const nlohmann::json& j, PcaPolicy& policy) {
  if (j.is_object() && j.size() == 1 && j.contains("variance_threshold")) {
    policy = VarianceThreshold{j.at("variance_threshold").get<double>()};
  } else if (j.is_object() && j.size() == 1 && j.contains("n_components")) {
    policy = ComponentCount{j.at("n_components").get<std::size_t>()};
  } else {
    throw Error(Errc::InvalidSpec, "PCA policy needs exactly one of variance_threshold or n_components");
  }
}

}  // namespace pseudosurv
