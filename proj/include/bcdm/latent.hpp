#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "bcdm/models.hpp"

namespace bcdm {

enum class Structure { Unstructured, HigherOrder, Longitudinal };

std::string_view to_string(Structure s);
Structure parse_structure(std::string_view name);
/// Structure implied by a model when the run does not choose one.
Structure default_structure(ModelKind kind);

/// Dirichlet-categorical structure over the pattern space.
struct UnstructuredLatent {
  std::vector<double> mixing;           // pi, sums to 1
  std::vector<double> dirichlet_scale;  // delta, all > 0
  std::vector<int> membership;          // per person, 0-based class index

  /// Uniform mixing and delta = (1, ..., 1).
  static UnstructuredLatent uniform(std::size_t n_patterns);
  void validate() const;
};

/// Mixing proportion of class c (0-based). Throws std::out_of_range.
double pattern_prior_unstructured(std::size_t c, const UnstructuredLatent& latent);

/// Attributes conditionally independent given a trait theta ~ N(0, 1):
/// P(alpha_k = 1 | theta) = logistic(xi_k * theta - beta_k).
struct HigherOrderLatent {
  std::vector<double> slope;      // xi, >= 0 unless the truncation is switched off
  std::vector<double> intercept;  // beta
  std::vector<double> trait;      // theta per person
};

double attribute_prob_higher_order(double theta, std::size_t attribute,
                                   const HigherOrderLatent& latent);

/// Multivariate-normal traits over T occasions with mu_1 = 0 and
/// Sigma = Delta * Delta^T, Delta lower triangular with Delta(0,0) = 1.
struct LongitudinalLatent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cholesky;
  Eigen::MatrixXd traits;  // persons x T

  std::size_t n_occasions() const { return static_cast<std::size_t>(mean.size()); }
  Eigen::MatrixXd covariance() const;
  void validate() const;
};

/// Sigma = Delta * Delta^T. Requires lower-triangular Delta with Delta(0,0) = 1
/// and a positive diagonal; throws std::invalid_argument otherwise.
Eigen::MatrixXd build_sigma_from_cholesky(const Eigen::MatrixXd& delta);

/// Normal priors are given as (mean, precision) like the BUGS dnorm convention.
struct NormalPrior {
  double mean;
  double precision;
};

struct PriorSpec {
  // Beta priors
  double a_s = 1.0, b_s = 1.0, a_g = 1.0, b_g = 1.0;
  double a_pai_star = 1.0, b_pai_star = 1.0, a_xr_star = 1.0, b_xr_star = 1.0;

  // Logit-family item parameters
  NormalPrior lamda0{-1.096, 0.25};
  std::optional<NormalPrior> lamdaK;  // default depends on the model, see resolved_lamdaK()
  NormalPrior main_effect{0.0, 0.25};
  NormalPrior interaction{0.0, 0.25};

  // Higher-order structure
  NormalPrior beta{0.0, 0.25};
  NormalPrior xi{0.0, 0.25};
  bool xi_truncated = true;

  // Testlet precisions ~ Gamma(shape, rate)
  double testlet_shape = 1.0, testlet_rate = 1.0;

  // Longitudinal structure
  double mu_theta_precision = 0.5;
  NormalPrior cholesky_offdiag{0.0, 1.0};
  double cholesky_diag_shape = 1.0, cholesky_diag_rate = 1.0;

  // Optional hyperpriors
  bool hyper_beta = false;  // a.s, b.s, a.g, b.g ~ U(lo, hi)
  double hyper_lo = 0.1, hyper_hi = 5.0;
  bool hyper_lamda0 = false;  // mean.lamda0 ~ N(-1.096, 0.5), pr.lamda0 ~ Gamma(1, 1)
  NormalPrior hyper_lamda0_mean{-1.096, 0.5};
  double hyper_lamda0_shape = 1.0, hyper_lamda0_rate = 1.0;

  /// Beta(1, 3) for slip and guess.
  static PriorSpec good_items();
  /// Beta(3, 1) for pai_star and r_star.
  static PriorSpec rrum_informative();

  /// N(2.192, 0.25) for RDINA, N(0, 0.25) for testlet and longitudinal models.
  NormalPrior resolved_lamdaK(ModelKind kind) const;
  void validate() const;
};

}  // namespace bcdm
