#include "bcdm/latent.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace bcdm {

std::string_view to_string(Structure s) {
  switch (s) {
    case Structure::Unstructured: return "unstructured";
    case Structure::HigherOrder: return "higher-order";
    case Structure::Longitudinal: return "longitudinal";
  }
  return "unknown";
}

Structure parse_structure(std::string_view name) {
  for (auto s : {Structure::Unstructured, Structure::HigherOrder, Structure::Longitudinal}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown latent structure '" + std::string(name) + "'");
}

Structure default_structure(ModelKind kind) {
  switch (kind) {
    case ModelKind::HoDina: return Structure::HigherOrder;
    case ModelKind::LongDina: return Structure::Longitudinal;
    default: return Structure::Unstructured;
  }
}

UnstructuredLatent UnstructuredLatent::uniform(std::size_t n_patterns) {
  UnstructuredLatent u;
  u.mixing.assign(n_patterns, 1.0 / static_cast<double>(n_patterns));
  u.dirichlet_scale.assign(n_patterns, 1.0);
  return u;
}

void UnstructuredLatent::validate() const {
  if (mixing.empty() || mixing.size() != dirichlet_scale.size()) {
    throw std::invalid_argument("mixing and Dirichlet scale must be non-empty and equally long");
  }
  double total = 0.0;
  for (double p : mixing) {
    if (!(p >= 0.0)) throw std::invalid_argument("mixing proportions must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixing proportions must sum to 1");
  for (double d : dirichlet_scale) {
    if (!(d > 0.0)) throw std::invalid_argument("Dirichlet scale must be positive");
  }
  for (int c : membership) {
    if (c < 0 || static_cast<std::size_t>(c) >= mixing.size()) {
      throw std::invalid_argument("class membership out of range");
    }
  }
}

double pattern_prior_unstructured(std::size_t c, const UnstructuredLatent& latent) {
  if (c >= latent.mixing.size()) throw std::out_of_range("class index out of range");
  return latent.mixing[c];
}

double attribute_prob_higher_order(double theta, std::size_t attribute,
                                   const HigherOrderLatent& latent) {
  if (attribute >= latent.slope.size() || attribute >= latent.intercept.size()) {
    throw std::out_of_range("attribute index out of range");
  }
  return logistic(latent.slope[attribute] * theta - latent.intercept[attribute]);
}

Eigen::MatrixXd LongitudinalLatent::covariance() const { return build_sigma_from_cholesky(cholesky); }

void LongitudinalLatent::validate() const {
  if (cholesky.rows() != mean.size() || cholesky.cols() != mean.size()) {
    throw std::invalid_argument("Cholesky factor must be T x T");
  }
  if (mean.size() == 0 || mean(0) != 0.0) throw std::invalid_argument("mu_1 must be 0");
  build_sigma_from_cholesky(cholesky);
  if (traits.size() > 0 && traits.cols() != mean.size()) {
    throw std::invalid_argument("trait matrix must have T columns");
  }
}

Eigen::MatrixXd build_sigma_from_cholesky(const Eigen::MatrixXd& delta) {
  if (delta.rows() == 0 || delta.rows() != delta.cols()) {
    throw std::invalid_argument("Cholesky factor must be square");
  }
  if (delta(0, 0) != 1.0) throw std::invalid_argument("Delta(1,1) must equal 1");
  for (Eigen::Index r = 0; r < delta.rows(); ++r) {
    if (!(delta(r, r) > 0.0)) throw std::invalid_argument("Cholesky diagonal must be positive");
    for (Eigen::Index c = r + 1; c < delta.cols(); ++c) {
      if (delta(r, c) != 0.0) throw std::invalid_argument("Cholesky factor must be lower triangular");
    }
  }
  Eigen::MatrixXd sigma = delta * delta.transpose();
  return (sigma + sigma.transpose()) / 2.0;
}

PriorSpec PriorSpec::good_items() {
  PriorSpec p;
  p.a_s = 1.0;
  p.b_s = 3.0;
  p.a_g = 1.0;
  p.b_g = 3.0;
  return p;
}

PriorSpec PriorSpec::rrum_informative() {
  PriorSpec p;
  p.a_pai_star = 3.0;
  p.b_pai_star = 1.0;
  p.a_xr_star = 3.0;
  p.b_xr_star = 1.0;
  return p;
}

NormalPrior PriorSpec::resolved_lamdaK(ModelKind kind) const {
  if (lamdaK) return *lamdaK;
  if (kind == ModelKind::TestletDina || kind == ModelKind::LongDina) return {0.0, 0.25};
  return {2.192, 0.25};
}

void PriorSpec::validate() const {
  for (double v : {a_s, b_s, a_g, b_g, a_pai_star, b_pai_star, a_xr_star, b_xr_star,
                   testlet_shape, testlet_rate, cholesky_diag_shape, cholesky_diag_rate,
                   hyper_lamda0_shape, hyper_lamda0_rate, mu_theta_precision}) {
    if (!(v > 0.0)) throw std::invalid_argument("prior scale parameters must be positive");
  }
  for (const auto& n : {lamda0, main_effect, interaction, beta, xi, cholesky_offdiag,
                        hyper_lamda0_mean}) {
    if (!(n.precision > 0.0)) throw std::invalid_argument("prior precisions must be positive");
  }
  if (lamdaK && !(lamdaK->precision > 0.0)) {
    throw std::invalid_argument("prior precisions must be positive");
  }
  if (!(hyper_lo > 0.0 && hyper_hi > hyper_lo)) {
    throw std::invalid_argument("hyperprior range must satisfy 0 < lo < hi");
  }
}

}  // namespace bcdm
