#pragma once

#include <Eigen/Dense>
#include <vector>

#include "glmboot/bootstrap.hpp"

namespace glmboot {

/// Type-1 (order statistic, no interpolation) empirical quantile: the
/// ceil(gamma*m)-th smallest value, index clamped to [1, m]. Pure and
/// deterministic; errors on empty input.
double empirical_quantile(std::vector<double> values, double gamma);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

struct CoefficientInterval {
  double estimate = 0.0;
  Interval two_sided;        // [l, u]
  double left_lower = 0.0;   // [left_lower, +inf)
  double right_upper = 0.0;  // (-inf, right_upper]
};

struct InferenceReport {
  std::vector<CoefficientInterval> coefficients;
  double alpha = 0.10;
  double region_quantile = 0.0;  // (1-alpha) quantile of replicate norms
  int effective_replicates = 0;
};

/// Pivotal percentile intervals. With q_j(g) the type-1 empirical g-quantile
/// of replicate coordinate j over converged replicates:
///   two-sided  [beta_j - q_j(1-a/2)/sqrt(n), beta_j - q_j(a/2)/sqrt(n)]
///   left       [beta_j - q_j(1-a)/sqrt(n), +inf)
///   right      (-inf, beta_j - q_j(a)/sqrt(n)]
/// Requires at least two effective replicates.
InferenceReport percentile_intervals(const BootstrapResult& result,
                                     const Eigen::VectorXd& beta_hat,
                                     double alpha);

struct RegionCheck {
  double quantile = 0.0;
  bool covered = false;
  bool empty_estimate_warning = false;  // beta_hat identically zero
};

/// Euclidean-norm confidence region: the hypothesis beta_0 is covered iff
/// ||sqrt(n)(beta_hat - beta_0)|| <= (1-alpha) quantile of replicate norms.
RegionCheck norm_region(const BootstrapResult& result,
                        const Eigen::VectorXd& beta_hat, double alpha,
                        const Eigen::VectorXd& beta_hypothesis);

}  // namespace glmboot
