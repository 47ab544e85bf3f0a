#include "glmboot/bootstrap.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "glmboot/errors.hpp"

namespace glmboot {

ThresholdRule::ThresholdRule(double exponent) : exponent_(exponent) {
  if (!(exponent > 0.0 && exponent < 0.5))
    throw InputError("ThresholdRule: exponent must lie in (0, 1/2)");
}

double ThresholdRule::a_n(Eigen::Index n) const {
  if (n < 1) throw InputError("ThresholdRule: n must be >= 1");
  return std::pow(static_cast<double>(n), -exponent_);
}

WeightDistribution WeightDistribution::exp_one() {
  return WeightDistribution(WeightKind::exp_one, 1.0, 0, 0);
}

WeightDistribution WeightDistribution::poisson_one() {
  return WeightDistribution(WeightKind::poisson_one, 1.0, 0, 0);
}

WeightDistribution WeightDistribution::beta_constrained(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw InputError("WeightDistribution: beta parameters must be positive");
  // a = (b - a)/(b + a) is exactly the condition Var = mean^2
  if (std::abs(a - (b - a) / (b + a)) > 1e-12)
    throw InputError(
        "WeightDistribution: beta parameters must satisfy a = (b-a)/(b+a)");
  return WeightDistribution(WeightKind::beta_constrained, a / (a + b), a, b);
}

double WeightDistribution::draw(Rng& rng) const {
  switch (kind_) {
    case WeightKind::exp_one: {
      std::exponential_distribution<double> d(1.0);
      return d(rng);
    }
    case WeightKind::poisson_one: {
      std::poisson_distribution<long> d(1.0);
      return static_cast<double>(d(rng));
    }
    case WeightKind::beta_constrained: {
      std::gamma_distribution<double> ga(a_, 1.0), gb(b_, 1.0);
      const double x = ga(rng);
      const double y = gb(rng);
      return x / (x + y);
    }
  }
  throw std::logic_error("unreachable weight kind");
}

BootstrapMethod method_from_string(const std::string& name) {
  if (name == "pb") return BootstrapMethod::pb;
  if (name == "prb") return BootstrapMethod::prb;
  throw InputError("unknown bootstrap method '" + name + "' (pb|prb)");
}

CenteringMode centering_from_string(const std::string& name) {
  if (name == "modified") return CenteringMode::modified;
  if (name == "naive") return CenteringMode::naive;
  throw InputError("unknown centering '" + name + "' (modified|naive)");
}

std::string to_string(BootstrapMethod m) {
  return m == BootstrapMethod::pb ? "pb" : "prb";
}

std::string to_string(CenteringMode c) {
  return c == CenteringMode::modified ? "modified" : "naive";
}

int BootstrapResult::effective() const {
  int k = 0;
  for (auto f : converged) k += f ? 1 : 0;
  return k;
}

int BootstrapResult::failed() const {
  return static_cast<int>(converged.size()) - effective();
}

bool BootstrapResult::quality_warning() const {
  return converged.empty() ||
         failed() * 20 > static_cast<int>(converged.size());
}

Eigen::MatrixXd BootstrapResult::effective_rows() const {
  Eigen::MatrixXd out(effective(), replicates.cols());
  Eigen::Index r = 0;
  for (Eigen::Index b = 0; b < replicates.rows(); ++b)
    if (converged[static_cast<std::size_t>(b)]) out.row(r++) = replicates.row(b);
  return out;
}

Eigen::VectorXd threshold_estimator(const Eigen::VectorXd& beta_hat,
                                    Eigen::Index n,
                                    const ThresholdRule& rule) {
  const double a_n = rule.a_n(n);
  Eigen::VectorXd out = beta_hat;
  for (Eigen::Index j = 0; j < out.size(); ++j)
    if (!(std::abs(out(j)) > a_n)) out(j) = 0.0;  // strict: |b| == a_n zeroes
  return out;
}

Eigen::VectorXd pb_linear_tilt(const FamilySpec& family, const Dataset& data,
                               const Eigen::VectorXd& beta_check) {
  return -nll_gradient(family, data, beta_check);
}

namespace detail {

struct ReplicateOutcome {
  Eigen::VectorXd pivot;
  double kkt_ratio = 0.0;
};

ReplicateOutcome pb_outcome(const FamilySpec& family, const Dataset& data,
                            const Eigen::VectorXd& beta_check,
                            double lambda_star,
                            const Eigen::VectorXd& multipliers,
                            double mean_weight) {
  if (!(lambda_star >= 0.0))
    throw InputError("pb_replicate: lambda_star must be >= 0");
  if (!(mean_weight > 0.0))
    throw InputError("pb_replicate: multiplier mean must be positive");
  PenalizedProblem problem{family, data, lambda_star,
                           multipliers / mean_weight,
                           pb_linear_tilt(family, data, beta_check)};
  const LassoFit f = fit(problem, beta_check);
  if (!f.converged)
    throw NumericalError("pb_replicate: solver did not converge");
  const double scale = std::sqrt(static_cast<double>(data.n()));
  return {scale * (f.beta - beta_check),
          f.kkt_residual / (1.0 + lambda_star)};
}

ReplicateOutcome prb_outcome(const FamilySpec& family, const Dataset& data,
                             const Eigen::VectorXd& beta_check,
                             double lambda_star,
                             const Eigen::VectorXd& e_star) {
  if (!(lambda_star >= 0.0))
    throw InputError("prb_replicate: lambda_star must be >= 0");
  if (e_star.size() != data.n())
    throw DimensionError("prb_replicate: residual vector length mismatch");
  const Eigen::MatrixXd design = prb_working_design(family, data, beta_check);
  const Dataset synthetic{design, design * beta_check + e_star};
  const FamilySpec linear = make_family(FamilyId::linear);
  const LassoFit f =
      fit(PenalizedProblem{linear, synthetic, lambda_star}, beta_check);
  if (!f.converged)
    throw NumericalError("prb_replicate: solver did not converge");
  const double scale = std::sqrt(static_cast<double>(data.n()));
  return {scale * (f.beta - beta_check),
          f.kkt_residual / (1.0 + lambda_star)};
}

}  // namespace detail

Eigen::VectorXd pb_replicate_with_weights(const FamilySpec& family,
                                          const Dataset& data,
                                          const Eigen::VectorXd& beta_check,
                                          double lambda_star,
                                          const Eigen::VectorXd& multipliers,
                                          double mean_weight) {
  return detail::pb_outcome(family, data, beta_check, lambda_star, multipliers,
                            mean_weight)
      .pivot;
}

Eigen::VectorXd pb_replicate(const FamilySpec& family, const Dataset& data,
                             const Eigen::VectorXd& beta_check,
                             double lambda_star,
                             const WeightDistribution& weights, Rng& rng) {
  Eigen::VectorXd g(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) g(i) = weights.draw(rng);
  return pb_replicate_with_weights(family, data, beta_check, lambda_star, g,
                                   weights.mean());
}

PearsonResiduals pearson_residuals(const FamilySpec& family,
                                   const Dataset& data,
                                   const Eigen::VectorXd& beta_check) {
  if (beta_check.size() != data.p())
    throw DimensionError("pearson_residuals: beta length mismatch");
  const Eigen::VectorXd eta = data.X * beta_check;
  PearsonResiduals out;
  out.raw.resize(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double v = family.var_fun(eta(i));
    if (!(v > 0.0) || !std::isfinite(v))
      throw NonFiniteError("pearson_residuals: non-positive variance", i);
    out.raw(i) = (data.y(i) - family.g_inv(eta(i))) / std::sqrt(v);
    if (!std::isfinite(out.raw(i)))
      throw NonFiniteError("pearson_residuals: non-finite residual", i);
  }
  out.centered = out.raw.array() - out.raw.mean();
  return out;
}

Eigen::MatrixXd prb_working_design(const FamilySpec& family,
                                   const Dataset& data,
                                   const Eigen::VectorXd& beta_check) {
  if (beta_check.size() != data.p())
    throw DimensionError("prb_working_design: beta length mismatch");
  const Eigen::VectorXd eta = data.X * beta_check;
  Eigen::MatrixXd design = data.X;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double s = std::sqrt(family.var_fun(eta(i))) * family.dh(eta(i));
    if (!std::isfinite(s))
      throw NonFiniteError("prb_working_design: non-finite row scale", i);
    design.row(i) *= s;
  }
  return design;
}

Eigen::VectorXd prb_replicate_with_residuals(
    const FamilySpec& family, const Dataset& data,
    const Eigen::VectorXd& beta_check, double lambda_star,
    const Eigen::VectorXd& e_star) {
  return detail::prb_outcome(family, data, beta_check, lambda_star, e_star)
      .pivot;
}

Eigen::VectorXd prb_replicate(const FamilySpec& family, const Dataset& data,
                              const Eigen::VectorXd& beta_check,
                              double lambda_star, Rng& rng) {
  const PearsonResiduals res = pearson_residuals(family, data, beta_check);
  std::uniform_int_distribution<Eigen::Index> pick(0, data.n() - 1);
  Eigen::VectorXd e_star(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i)
    e_star(i) = res.centered(pick(rng));
  return prb_replicate_with_residuals(family, data, beta_check, lambda_star,
                                      e_star);
}

BootstrapResult run_bootstrap(const FamilySpec& family, const Dataset& data,
                              const LassoFit& fit_at_lambda,
                              const BootstrapPlan& plan) {
  if (plan.B < 1) throw InputError("run_bootstrap: B must be >= 1");
  const Eigen::Index n = data.n(), p = data.p();
  if (fit_at_lambda.beta.size() != p)
    throw DimensionError("run_bootstrap: fit/beta length mismatch");

  BootstrapResult out;
  out.method = plan.method;
  out.centering_mode = plan.centering;
  out.lambda_star =
      plan.lambda_star >= 0 ? plan.lambda_star : fit_at_lambda.lambda;
  out.seed = plan.seed;
  out.n_obs = n;
  out.centering = plan.centering == CenteringMode::modified
                      ? threshold_estimator(fit_at_lambda.beta, n, plan.rule)
                      : fit_at_lambda.beta;
  out.replicates = Eigen::MatrixXd::Zero(plan.B, p);
  out.converged.assign(static_cast<std::size_t>(plan.B), 0);

  std::vector<double> kkt_ratios(static_cast<std::size_t>(plan.B), 0.0);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int b = next.fetch_add(1);
      if (b >= plan.B) return;
      Rng rng = make_rng(split_seed(plan.seed, static_cast<std::uint64_t>(b)));
      try {
        detail::ReplicateOutcome rep =
            plan.method == BootstrapMethod::pb
                ? [&] {
                    Eigen::VectorXd g(n);
                    for (Eigen::Index i = 0; i < n; ++i)
                      g(i) = plan.weights.draw(rng);
                    return detail::pb_outcome(family, data, out.centering,
                                              out.lambda_star, g,
                                              plan.weights.mean());
                  }()
                : [&] {
                    const PearsonResiduals res =
                        pearson_residuals(family, data, out.centering);
                    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
                    Eigen::VectorXd e_star(n);
                    for (Eigen::Index i = 0; i < n; ++i)
                      e_star(i) = res.centered(pick(rng));
                    return detail::prb_outcome(family, data, out.centering,
                                               out.lambda_star, e_star);
                  }();
        out.replicates.row(b) = rep.pivot.transpose();
        kkt_ratios[static_cast<std::size_t>(b)] = rep.kkt_ratio;
        out.converged[static_cast<std::size_t>(b)] = 1;
      } catch (const NumericalError&) {
        // flagged and excluded; never imputed
      }
    }
  };

  const int threads = std::max(1, std::min(plan.threads, plan.B));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (double k : kkt_ratios) out.max_kkt_ratio = std::max(out.max_kkt_ratio, k);
  if (out.effective() == 0)
    throw BootstrapFailure("run_bootstrap: all replicates failed");
  return out;
}

VarianceDiagnostics variance_diagnostics(const BootstrapResult& result,
                                         const FamilySpec& family,
                                         const Dataset& data,
                                         const Eigen::VectorXd& beta_check) {
  VarianceDiagnostics out;
  out.degenerate_sample = data.n() < 2;

  const DiagnosticsMatrices dm = diagnostics_matrices(family, data, beta_check);
  out.score_var_gap = (dm.S_n_hat - dm.L_n).norm();
  const double l_norm = dm.L_n.norm();
  out.rel_score_var_gap = l_norm > 0 ? out.score_var_gap / l_norm : 0.0;

  const PearsonResiduals res = pearson_residuals(family, data, beta_check);
  out.mean_sq_centered_residual = res.centered.squaredNorm() / data.n();

  const Eigen::MatrixXd rows = result.effective_rows();
  const Eigen::Index p = result.replicates.cols();
  if (rows.rows() >= 2) {
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - mean;
    out.replicate_cov =
        centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  } else {
    out.replicate_cov = Eigen::MatrixXd::Zero(p, p);
  }
  out.replicate_cov_frob = out.replicate_cov.norm();
  return out;
}

}  // namespace glmboot
