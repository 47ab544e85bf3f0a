#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "glmboot/errors.hpp"

namespace glmboot {

enum class FamilyId { linear, logistic, probit, poisson, gamma };

FamilyId family_from_string(const std::string& name);
std::string to_string(FamilyId id);

/// One GLM sub-model in canonical form. The response density is
/// exp{y*theta - b(theta)}c(y) with theta = h(x'beta), mean mu = g_inv(x'beta)
/// and variance var_fun(x'beta) = b''(h(x'beta)).
///
/// Immutable after construction; every member function is pure and safe to
/// call concurrently.
class FamilySpec {
 public:
  FamilyId id() const { return id_; }
  double shape_alpha() const { return alpha_; }

  double h(double u) const;    // canonical parameter map
  double dh(double u) const;   // h'
  double d2h(double u) const;  // h''
  double d3h(double u) const;  // h'''

  double h1(double u) const;    // b(h(u)), the cumulant along the linear predictor
  double dh1(double u) const;   // h1' = g_inv * h'
  double d2h1(double u) const;  // h1''
  double d3h1(double u) const;  // h1'''

  double g_inv(double u) const;   // inverse link: mean at linear predictor u
  double dg_inv(double u) const;  // (g^{-1})'

  double var_fun(double u) const;  // b''(h(u)) > 0, response variance at u

 private:
  friend FamilySpec make_family(FamilyId, double);
  FamilySpec(FamilyId id, double alpha) : id_(id), alpha_(alpha) {}

  FamilyId id_;
  double alpha_;  // gamma shape, ignored elsewhere
};

/// Builds the sub-model machinery. shape_alpha applies to the gamma family
/// only (must be > 0, default 1); probit uses tail-stable evaluation of the
/// normal cdf ratios.
FamilySpec make_family(FamilyId id, double shape_alpha = 1.0);

/// Fixed design matrix plus responses. Immutable by convention: nothing in
/// the library mutates a Dataset after construction.
struct Dataset {
  Eigen::MatrixXd X;  // n x p, non-random design
  Eigen::VectorXd y;  // length n

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
};

struct ValidityVerdict {
  bool valid = true;
  std::vector<Eigen::Index> bad_rows;  // offending observation indices
  std::string reason;
};

/// Checks family support (y in {0,1} for logistic/probit, y >= 0 Poisson,
/// y > 0 gamma, y unrestricted linear) and finiteness of all entries.
/// Verdict-returning: never throws.
ValidityVerdict validate_dataset(const FamilySpec& family, const Dataset& data);

/// Weighted negative log-likelihood sum_i w_i [-y_i h(eta_i) + h1(eta_i)]
/// with eta = X beta. Throws DimensionError on shape mismatch and
/// NonFiniteError (naming the observation) if a term overflows.
double neg_log_likelihood(const FamilySpec& family, const Dataset& data,
                          const Eigen::VectorXd& beta,
                          const Eigen::VectorXd& weights);
double neg_log_likelihood(const FamilySpec& family, const Dataset& data,
                          const Eigen::VectorXd& beta);

/// Gradient of the weighted negative log-likelihood:
/// -sum_i w_i (y_i - g_inv(eta_i)) h'(eta_i) x_i.
Eigen::VectorXd nll_gradient(const FamilySpec& family, const Dataset& data,
                             const Eigen::VectorXd& beta,
                             const Eigen::VectorXd& weights);
Eigen::VectorXd nll_gradient(const FamilySpec& family, const Dataset& data,
                             const Eigen::VectorXd& beta);

struct DiagnosticsMatrices {
  Eigen::MatrixXd L_n;      // n^{-1} sum x x' [dg_inv*dh - (y-mu)*d2h] at beta
  Eigen::MatrixXd S_n_hat;  // plug-in n^{-1} sum x x' dh(eta)^2 (y-mu)^2
};

/// Observed-curvature matrix L_n and the plug-in score-variance estimate,
/// both evaluated at the supplied coefficient vector.
DiagnosticsMatrices diagnostics_matrices(const FamilySpec& family,
                                         const Dataset& data,
                                         const Eigen::VectorXd& beta);

}  // namespace glmboot
