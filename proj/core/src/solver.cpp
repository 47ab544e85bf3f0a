#include "glmboot/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "glmboot/errors.hpp"

namespace glmboot {

namespace {

constexpr double kCurvatureFloor = 1e-10;
constexpr double kArmijoSlope = 1e-4;
constexpr double kBacktrackFactor = 0.5;
constexpr double kMinStep = 1e-14;
constexpr double kObjectiveFloor = -1e12;
constexpr double kBetaCap = 1e8;
constexpr double kInf = std::numeric_limits<double>::infinity();

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

struct Resolved {
  const FamilySpec& family;
  const Dataset& data;
  double lambda;
  Eigen::VectorXd weights;  // always length n
  Eigen::VectorXd tilt;     // always length p
};

Resolved resolve(const PenalizedProblem& problem, const char* where) {
  const Eigen::Index n = problem.data.n(), p = problem.data.p();
  if (!(problem.lambda >= 0.0))
    throw InputError(std::string(where) + ": lambda must be >= 0");
  Eigen::VectorXd w = problem.weights.size() ? problem.weights
                                             : Eigen::VectorXd::Ones(n);
  if (w.size() != n)
    throw DimensionError(std::string(where) + ": weights length mismatch");
  if ((w.array() < 0.0).any() || !w.allFinite())
    throw InputError(std::string(where) + ": weights must be >= 0 and finite");
  Eigen::VectorXd c = problem.linear_tilt.size() ? problem.linear_tilt
                                                 : Eigen::VectorXd::Zero(p);
  if (c.size() != p)
    throw DimensionError(std::string(where) + ": linear_tilt length mismatch");
  return Resolved{problem.family, problem.data, problem.lambda, std::move(w),
                  std::move(c)};
}

// Smooth part (weighted nll + tilt) at beta with eta = X beta already
// computed; +inf on overflow so the line search can reject the step.
double smooth_or_inf(const Resolved& r, const Eigen::VectorXd& beta,
                     const Eigen::VectorXd& eta) {
  double total = r.tilt.dot(beta);
  if (!std::isfinite(total)) return kInf;
  for (Eigen::Index i = 0; i < r.data.n(); ++i) {
    const double w = r.weights(i);
    if (w == 0.0) continue;
    const double term =
        w * (-r.data.y(i) * r.family.h(eta(i)) + r.family.h1(eta(i)));
    if (!std::isfinite(term)) return kInf;
    total += term;
  }
  return total;
}

Eigen::VectorXd smooth_gradient(const Resolved& r, const Eigen::VectorXd& eta) {
  Eigen::VectorXd g = r.tilt;
  for (Eigen::Index i = 0; i < r.data.n(); ++i) {
    const double w = r.weights(i);
    if (w == 0.0) continue;
    const double s =
        w * (r.family.g_inv(eta(i)) - r.data.y(i)) * r.family.dh(eta(i));
    if (!std::isfinite(s))
      throw NonFiniteError("fit: non-finite gradient term", i);
    g.noalias() += s * r.data.X.row(i).transpose();
  }
  return g;
}

double kkt_from_gradient(const Eigen::VectorXd& g, const Eigen::VectorXd& beta,
                         double lambda) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double viol;
    if (beta(j) != 0.0)
      viol = std::abs(g(j) + lambda * (beta(j) > 0 ? 1.0 : -1.0));
    else
      viol = std::max(0.0, std::abs(g(j)) - lambda);
    worst = std::max(worst, viol);
  }
  return worst;
}

}  // namespace

double penalized_objective(const PenalizedProblem& problem,
                           const Eigen::VectorXd& beta) {
  const Resolved r = resolve(problem, "penalized_objective");
  if (beta.size() != r.data.p())
    throw DimensionError("penalized_objective: beta length mismatch");
  const Eigen::VectorXd eta = r.data.X * beta;
  const double smooth = smooth_or_inf(r, beta, eta);
  if (!std::isfinite(smooth))
    throw NonFiniteError("penalized_objective: non-finite value");
  return smooth + r.lambda * beta.lpNorm<1>();
}

double kkt_residual(const PenalizedProblem& problem,
                    const Eigen::VectorXd& beta) {
  const Resolved r = resolve(problem, "kkt_residual");
  if (beta.size() != r.data.p())
    throw DimensionError("kkt_residual: beta length mismatch");
  const Eigen::VectorXd g = smooth_gradient(r, r.data.X * beta);
  return kkt_from_gradient(g, beta, r.lambda);
}

LassoFit fit(const PenalizedProblem& problem,
             std::optional<Eigen::VectorXd> init_beta,
             const FitOptions& settings) {
  const Resolved r = resolve(problem, "fit");
  const Eigen::Index n = r.data.n(), p = r.data.p();
  const double lambda = r.lambda;
  const double kkt_tol =
      settings.kkt_tol >= 0 ? settings.kkt_tol : 1e-6 * (1.0 + lambda);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (init_beta) {
    if (init_beta->size() != p)
      throw DimensionError("fit: init_beta length mismatch");
    beta = *init_beta;
  }

  Eigen::VectorXd eta = r.data.X * beta;
  double value = smooth_or_inf(r, beta, eta) + lambda * beta.lpNorm<1>();
  if (!std::isfinite(value))
    throw NonFiniteError("fit: objective non-finite at the starting point");
  if (settings.objective_trace) settings.objective_trace->push_back(value);

  LassoFit out;
  out.lambda = lambda;
  bool converged = false;
  int iter = 0;
  Eigen::VectorXd grad(p), z(p), model_grad(p), direction(p), trial_eta(n);
  Eigen::MatrixXd hess(p, p);

  for (; iter < settings.max_outer; ++iter) {
    grad = smooth_gradient(r, eta);
    if (kkt_from_gradient(grad, beta, lambda) <= kkt_tol) {
      converged = true;
      break;
    }

    // Local quadratic model with positive curvature surrogate.
    Eigen::VectorXd curv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = eta(i);
      const double kappa = r.family.dg_inv(u) * r.family.dh(u) -
                           (r.data.y(i) - r.family.g_inv(u)) * r.family.d2h(u);
      curv(i) = r.weights(i) * std::max(kappa, kCurvatureFloor);
    }
    hess.noalias() = r.data.X.transpose() * curv.asDiagonal() * r.data.X;

    // Penalized quadratic solved by cyclic soft-thresholded coordinate
    // descent; model_grad tracks grad + H (z - beta). The sweep exit is the
    // model's own optimality system (coefficient-change thresholds are
    // scale-blind and leave the Newton direction too loose on raw-unit
    // designs).
    z = beta;
    model_grad = grad;
    for (int sweep = 0; sweep < settings.max_inner; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double hjj = std::max(hess(j, j), 1e-12);
        const double znew = soft_threshold(hjj * z(j) - model_grad(j), lambda) / hjj;
        const double dz = znew - z(j);
        if (dz != 0.0) {
          model_grad.noalias() += dz * hess.col(j);
          z(j) = znew;
          max_change = std::max(max_change, std::abs(dz));
        }
      }
      if (max_change == 0.0) break;
      if (kkt_from_gradient(model_grad, z, lambda) <= 0.5 * kkt_tol) break;
    }

    direction = z - beta;
    const double step_size = direction.lpNorm<Eigen::Infinity>();
    if (step_size <= 0.0) break;  // model fixed point: KKT decided at the top

    const double decrease =
        grad.dot(direction) + lambda * (z.lpNorm<1>() - beta.lpNorm<1>());

    const Eigen::VectorXd direction_eta = r.data.X * direction;
    double t = 1.0;
    bool accepted = false;
    while (t >= kMinStep) {
      trial_eta = eta + t * direction_eta;
      const Eigen::VectorXd trial_beta = beta + t * direction;
      const double trial_value = smooth_or_inf(r, trial_beta, trial_eta) +
                                 lambda * trial_beta.lpNorm<1>();
      if (trial_value <= value + kArmijoSlope * t * decrease) {
        beta = trial_beta;
        eta = trial_eta;
        value = trial_value;
        accepted = true;
        break;
      }
      t *= kBacktrackFactor;
    }
    if (!accepted) break;  // no descent at machine precision
    if (settings.objective_trace) settings.objective_trace->push_back(value);

    if (value < kObjectiveFloor || beta.lpNorm<Eigen::Infinity>() > kBetaCap)
      throw SolverDivergence(
          "fit: objective unbounded below (separation or ill-posed input)");
  }

  out.beta = beta;
  out.iterations = iter;
  out.kkt_residual = kkt_from_gradient(smooth_gradient(r, eta), beta, lambda);
  out.converged = converged || out.kkt_residual <= kkt_tol;
  out.objective = value;
  return out;
}

Eigen::VectorXd brute_force_lasso(const PenalizedProblem& problem,
                                  double grid_radius, double grid_step) {
  const Resolved r = resolve(problem, "brute_force_lasso");
  const Eigen::Index p = r.data.p();
  if (p > 3) throw InputError("brute_force_lasso: only p <= 3 supported");
  if (!(grid_radius > 0.0) || !(grid_step > 0.0))
    throw InputError("brute_force_lasso: radius and step must be positive");

  Eigen::VectorXd eta(r.data.n());
  auto objective_at = [&](const Eigen::VectorXd& b) {
    eta.noalias() = r.data.X * b;
    const double smooth = smooth_or_inf(r, b, eta);
    return smooth + r.lambda * b.lpNorm<1>();
  };

  auto scan = [&](const Eigen::VectorXd& center, double half_width,
                  double step) {
    const int m = static_cast<int>(std::floor(half_width / step + 0.5));
    Eigen::VectorXd best = center, point(p);
    double best_value = kInf;
    std::vector<int> idx(p, -m);
    while (true) {
      for (Eigen::Index j = 0; j < p; ++j)
        point(j) = center(j) + idx[j] * step;
      const double v = objective_at(point);
      if (v < best_value) {
        best_value = v;
        best = point;
      }
      Eigen::Index k = 0;
      while (k < p && ++idx[k] > m) idx[k++] = -m;
      if (k == p) break;
    }
    return best;
  };

  // the coarse argmin of a convex objective can sit a full cell diagonal
  // away from the true minimizer, so the refinement window spans two
  // coarse cells in each direction
  const Eigen::VectorXd coarse =
      scan(Eigen::VectorXd::Zero(p), grid_radius, grid_step);
  return scan(coarse, 2.0 * grid_step, grid_step / 10.0);
}

double lambda_max(const PenalizedProblem& problem) {
  const Resolved r = resolve(problem, "lambda_max");
  const Eigen::VectorXd g =
      smooth_gradient(r, Eigen::VectorXd::Zero(r.data.n()));
  return g.lpNorm<Eigen::Infinity>();
}

std::vector<double> default_lambda_grid(const FamilySpec& family,
                                        const Dataset& data, int size,
                                        double min_ratio) {
  if (size < 1) throw InputError("default_lambda_grid: size must be >= 1");
  if (!(min_ratio > 0.0) || min_ratio > 1.0)
    throw InputError("default_lambda_grid: min_ratio must lie in (0, 1]");
  const double lmax = lambda_max(PenalizedProblem{family, data, 0.0});
  std::vector<double> grid(size);
  if (size == 1) {
    grid[0] = lmax;
    return grid;
  }
  const double log_ratio = std::log(min_ratio);
  for (int k = 0; k < size; ++k)
    grid[k] = lmax * std::exp(log_ratio * k / (size - 1));
  return grid;
}

CvResult cv_select_lambda(const FamilySpec& family, const Dataset& data,
                          int folds, const std::vector<double>& lambda_grid,
                          Rng& rng) {
  const Eigen::Index n = data.n(), p = data.p();
  if (folds < 2) throw InputError("cv_select_lambda: need K >= 2 folds");
  if (n < folds) throw InputError("cv_select_lambda: need n >= K");
  if (lambda_grid.empty())
    throw InputError("cv_select_lambda: empty penalty grid");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0))
      throw InputError("cv_select_lambda: penalties must be positive");
    if (i > 0 && lambda_grid[i] > lambda_grid[i - 1])
      throw InputError("cv_select_lambda: grid must be sorted descending");
  }

  // Seeded near-equal partition: shuffle, then contiguous blocks.
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  const std::size_t m = lambda_grid.size();
  std::vector<double> score_sum(m, 0.0);
  std::vector<char> dropped(m, 0);

  Eigen::Index offset = 0;
  for (int k = 0; k < folds; ++k) {
    const Eigen::Index fold_size = n / folds + (k < n % folds ? 1 : 0);
    std::vector<char> held(n, 0);
    for (Eigen::Index t = 0; t < fold_size; ++t) held[perm[offset + t]] = 1;
    offset += fold_size;

    Dataset train{Eigen::MatrixXd(n - fold_size, p),
                  Eigen::VectorXd(n - fold_size)};
    Dataset test{Eigen::MatrixXd(fold_size, p), Eigen::VectorXd(fold_size)};
    Eigen::Index it = 0, ih = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (held[i]) {
        test.X.row(ih) = data.X.row(i);
        test.y(ih++) = data.y(i);
      } else {
        train.X.row(it) = data.X.row(i);
        train.y(it++) = data.y(i);
      }
    }

    Eigen::VectorXd warm = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < m; ++i) {
      if (dropped[i]) continue;
      try {
        const LassoFit f =
            fit(PenalizedProblem{family, train, lambda_grid[i]}, warm);
        if (!f.converged) throw NumericalError("cv: fold fit not converged");
        warm = f.beta;
        const double s = neg_log_likelihood(family, test, f.beta);
        if (!std::isfinite(s)) throw NumericalError("cv: non-finite score");
        score_sum[i] += s;
      } catch (const NumericalError&) {
        dropped[i] = 1;
      }
    }
  }

  CvResult out;
  out.grid = lambda_grid;
  out.mean_scores.assign(m, std::numeric_limits<double>::quiet_NaN());
  double best = kInf;
  std::size_t best_i = m;
  for (std::size_t i = 0; i < m; ++i) {
    if (dropped[i]) {
      ++out.dropped;
      continue;
    }
    out.mean_scores[i] = score_sum[i] / folds;
    // strict '<' keeps the largest penalty on ties (grid is descending)
    if (out.mean_scores[i] < best) {
      best = out.mean_scores[i];
      best_i = i;
    }
  }
  if (best_i == m)
    throw NumericalError("cv_select_lambda: every penalty was dropped");
  out.lambda = lambda_grid[best_i];
  return out;
}

}  // namespace glmboot
