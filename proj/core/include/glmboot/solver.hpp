#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "glmboot/family.hpp"
#include "glmboot/rng.hpp"

namespace glmboot {

/// The l1-penalized problem
///   min_beta  sum_i w_i [-y_i h(x_i'beta) + h1(x_i'beta)] + tilt'beta
///             + lambda * ||beta||_1.
/// weights/linear_tilt may be left empty for all-ones / zero. The referenced
/// family and dataset must outlive the problem.
struct PenalizedProblem {
  const FamilySpec& family;
  const Dataset& data;
  double lambda = 0.0;
  Eigen::VectorXd weights{};      // length n or empty (= all ones)
  Eigen::VectorXd linear_tilt{};  // length p or empty (= zero)
};

struct FitOptions {
  double tol = 1e-8;     // max coefficient change per outer step
  int max_outer = 200;   // proximal Newton iterations
  int max_inner = 250;   // coordinate-descent sweeps per quadratic model
  double kkt_tol = -1;   // < 0 means the default 1e-6 * (1 + lambda)
  std::vector<double>* objective_trace = nullptr;  // per accepted outer step
};

struct LassoFit {
  Eigen::VectorXd beta;
  double lambda = 0.0;  // penalty the fit was produced at
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Full objective value at beta (weighted nll + tilt + l1 penalty).
double penalized_objective(const PenalizedProblem& problem,
                           const Eigen::VectorXd& beta);

/// Proximal Newton solver: at each outer step the smooth part is replaced by
/// its local quadratic with curvature surrogate
/// sum_i w_i x_i x_i' max(kappa_i, 1e-10), the penalized quadratic is solved
/// by cyclic coordinate descent with soft-thresholding, and a backtracking
/// Armijo line search (factor 0.5, sufficient decrease 1e-4) is applied to
/// the true objective. Converged fits certify the subgradient optimality
/// system to kkt_tol. Throws SolverDivergence when the objective is
/// unbounded below.
LassoFit fit(const PenalizedProblem& problem,
             std::optional<Eigen::VectorXd> init_beta = std::nullopt,
             const FitOptions& settings = {});

/// Max subgradient violation at beta: |g_j + lambda*sgn(beta_j)| on the
/// active set, max(0, |g_j| - lambda) off it, where g is the smooth
/// gradient including the tilt.
double kkt_residual(const PenalizedProblem& problem,
                    const Eigen::VectorXd& beta);

/// Test oracle: exhaustive objective evaluation over the axis-aligned grid
/// [-grid_radius, grid_radius]^p with the given spacing, refined once around
/// the best point with spacing/10. Only p <= 3.
Eigen::VectorXd brute_force_lasso(const PenalizedProblem& problem,
                                  double grid_radius, double grid_step);

/// Smallest penalty at which 0 is optimal: ||gradient at 0 + tilt||_inf.
double lambda_max(const PenalizedProblem& problem);

/// Descending log-spaced grid of `size` penalties spanning
/// [min_ratio * lambda_max, lambda_max].
std::vector<double> default_lambda_grid(const FamilySpec& family,
                                        const Dataset& data, int size = 50,
                                        double min_ratio = 1e-3);

struct CvResult {
  double lambda = 0.0;
  std::vector<double> grid;         // the candidate penalties actually scored
  std::vector<double> mean_scores;  // mean held-out nll per candidate
  int dropped = 0;                  // candidates removed due to fit failures
};

/// K-fold cross-validation over a descending penalty grid. Folds are a
/// seeded random partition into K near-equal blocks; fits along the grid are
/// warm-started; the score is the held-out unweighted negative
/// log-likelihood summed over the fold and averaged over folds. Ties pick
/// the larger penalty. Penalties where any fold fit diverges are dropped;
/// an empty surviving grid is an error.
CvResult cv_select_lambda(const FamilySpec& family, const Dataset& data,
                          int folds, const std::vector<double>& lambda_grid,
                          Rng& rng);

}  // namespace glmboot
