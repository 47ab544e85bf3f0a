#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "glmboot/family.hpp"
#include "glmboot/rng.hpp"
#include "glmboot/solver.hpp"

namespace glmboot {

/// Threshold a_n = n^{-exponent} applied to the lasso estimate before
/// centering. The exponent must lie in (0, 1/2).
class ThresholdRule {
 public:
  explicit ThresholdRule(double exponent = 1.0 / 3.0);
  double exponent() const { return exponent_; }
  double a_n(Eigen::Index n) const;

 private:
  double exponent_;
};

enum class WeightKind { exp_one, poisson_one, beta_constrained };

/// Non-negative multiplier distribution for the perturbation bootstrap.
/// All admissible choices satisfy Var(G) = mean(G)^2 with a finite third
/// moment: Exp(1), Poisson(1), or Beta(a, b) with a = (b - a)/(b + a).
class WeightDistribution {
 public:
  static WeightDistribution exp_one();
  static WeightDistribution poisson_one();
  static WeightDistribution beta_constrained(double a, double b);

  WeightKind kind() const { return kind_; }
  double mean() const { return mean_; }
  double beta_a() const { return a_; }
  double beta_b() const { return b_; }
  double draw(Rng& rng) const;

 private:
  WeightDistribution(WeightKind k, double mean, double a, double b)
      : kind_(k), mean_(mean), a_(a), b_(b) {}
  WeightKind kind_;
  double mean_;
  double a_ = 0, b_ = 0;
};

enum class BootstrapMethod { pb, prb };
enum class CenteringMode { modified, naive };

BootstrapMethod method_from_string(const std::string& name);
CenteringMode centering_from_string(const std::string& name);
std::string to_string(BootstrapMethod m);
std::string to_string(CenteringMode c);

struct BootstrapResult {
  Eigen::MatrixXd replicates;  // B x p rows sqrt(n)(beta_star - centering)
  std::vector<std::uint8_t> converged;  // per-replicate flag; failed rows are zero
  Eigen::VectorXd centering;            // the beta the pivots are centered at
  BootstrapMethod method = BootstrapMethod::pb;
  CenteringMode centering_mode = CenteringMode::modified;
  double lambda_star = 0.0;
  std::uint64_t seed = 0;
  Eigen::Index n_obs = 0;
  double max_kkt_ratio = 0.0;  // max over replicate fits of kkt/(1+lambda*)

  int effective() const;
  int failed() const;
  bool quality_warning() const;  // > 5% of replicates failed
  /// Rows of converged replicates only.
  Eigen::MatrixXd effective_rows() const;
};

/// Coordinates of magnitude <= n^{-c} are zeroed (strict inequality keeps a
/// coordinate); idempotent.
Eigen::VectorXd threshold_estimator(const Eigen::VectorXd& beta_hat,
                                    Eigen::Index n, const ThresholdRule& rule);

/// The deterministic linear term of the perturbation-bootstrap objective:
/// sum_i (y_i - g_inv(x_i'beta_check)) h'(x_i'beta_check) x_i, i.e. minus the
/// unweighted nll gradient at beta_check. Adding tilt'beta to the reweighted
/// objective re-centers the bootstrap score at zero.
Eigen::VectorXd pb_linear_tilt(const FamilySpec& family, const Dataset& data,
                               const Eigen::VectorXd& beta_check);

/// One PB pivot: draws multipliers G_1..G_n, solves the reweighted tilted
/// lasso at lambda_star (warm-started at beta_check), returns
/// sqrt(n)(beta_star - beta_check). Solver failures propagate.
Eigen::VectorXd pb_replicate(const FamilySpec& family, const Dataset& data,
                             const Eigen::VectorXd& beta_check,
                             double lambda_star,
                             const WeightDistribution& weights, Rng& rng);

/// PB pivot with explicit multipliers (mean_weight = their distribution
/// mean). With multipliers identically 1 and lambda_star = 0 the output is 0:
/// the tilt cancels the smooth gradient at beta_check exactly.
Eigen::VectorXd pb_replicate_with_weights(const FamilySpec& family,
                                          const Dataset& data,
                                          const Eigen::VectorXd& beta_check,
                                          double lambda_star,
                                          const Eigen::VectorXd& multipliers,
                                          double mean_weight);

struct PearsonResiduals {
  Eigen::VectorXd raw;       // (y_i - mu_i)/sqrt(var_fun(eta_i))
  Eigen::VectorXd centered;  // raw - mean(raw)
};

/// Standardized Pearson residuals at beta_check. Errors (naming the index)
/// if a variance evaluation is not strictly positive.
PearsonResiduals pearson_residuals(const FamilySpec& family,
                                   const Dataset& data,
                                   const Eigen::VectorXd& beta_check);

/// Working design V^{1/2} Delta X with V = diag(var_fun(eta_i)),
/// Delta = diag(h'(eta_i)) at beta_check. For the linear family this is X
/// bitwise.
Eigen::MatrixXd prb_working_design(const FamilySpec& family,
                                   const Dataset& data,
                                   const Eigen::VectorXd& beta_check);

/// One PRB pivot: resamples centered Pearson residuals with replacement,
/// solves the linear-family lasso with design G = V^{1/2} Delta X and
/// response G beta_check + e_star, returns sqrt(n)(beta_star - beta_check).
Eigen::VectorXd prb_replicate(const FamilySpec& family, const Dataset& data,
                              const Eigen::VectorXd& beta_check,
                              double lambda_star, Rng& rng);

/// PRB pivot with an explicit resampled-residual vector.
Eigen::VectorXd prb_replicate_with_residuals(const FamilySpec& family,
                                             const Dataset& data,
                                             const Eigen::VectorXd& beta_check,
                                             double lambda_star,
                                             const Eigen::VectorXd& e_star);

struct BootstrapPlan {
  BootstrapMethod method = BootstrapMethod::pb;
  CenteringMode centering = CenteringMode::modified;
  ThresholdRule rule{};
  WeightDistribution weights = WeightDistribution::exp_one();
  int B = 1000;
  double lambda_star = -1;  // < 0 means reuse the original fit's penalty
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Runs B independent replicates of the chosen method. The centering is the
/// thresholded estimate in modified mode and the raw lasso estimate in naive
/// mode. Replicate k draws from a child stream split off `seed`, so results
/// are identical at any thread count. Failed replicates are flagged and
/// excluded downstream, never imputed; if all fail this throws
/// BootstrapFailure.
BootstrapResult run_bootstrap(const FamilySpec& family, const Dataset& data,
                              const LassoFit& fit_at_lambda,
                              const BootstrapPlan& plan);

struct VarianceDiagnostics {
  double score_var_gap = 0.0;      // ||S_hat - L_hat||_F at beta_check
  double rel_score_var_gap = 0.0;  // gap / ||L_hat||_F
  double mean_sq_centered_residual = 0.0;  // should approach 1
  Eigen::MatrixXd replicate_cov;           // empirical covariance of pivots
  double replicate_cov_frob = 0.0;
  bool degenerate_sample = false;  // n < 2: moments are meaningless
};

/// Finite-n surrogates of the variance-consistency statements backing both
/// bootstrap methods, evaluated at beta_check, plus empirical replicate
/// covariance summaries.
VarianceDiagnostics variance_diagnostics(const BootstrapResult& result,
                                         const FamilySpec& family,
                                         const Dataset& data,
                                         const Eigen::VectorXd& beta_check);

}  // namespace glmboot
