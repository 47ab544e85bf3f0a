#include "glmboot/inference.hpp"

#include <algorithm>
#include <cmath>

#include "glmboot/errors.hpp"

namespace glmboot {

namespace {

// Shared order-statistic index: ceil(gamma*m) with a small relative fuzz so
// that exact products (0.95 * 300) are not pushed to the next index by
// floating-point rounding; clamped to [1, m].
Eigen::Index quantile_index(double gamma, Eigen::Index m) {
  const double t = gamma * static_cast<double>(m);
  auto k = static_cast<Eigen::Index>(std::ceil(t - 1e-9 * std::max(1.0, t)));
  return std::clamp<Eigen::Index>(k, 1, m);
}

double sorted_quantile(const Eigen::VectorXd& sorted, double gamma) {
  return sorted(quantile_index(gamma, sorted.size()) - 1);
}

Eigen::VectorXd sorted_column(const Eigen::MatrixXd& m, Eigen::Index j) {
  Eigen::VectorXd col = m.col(j);
  std::sort(col.data(), col.data() + col.size());
  return col;
}

}  // namespace

double empirical_quantile(std::vector<double> values, double gamma) {
  if (values.empty()) throw InputError("empirical_quantile: empty input");
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw InputError("empirical_quantile: gamma must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const auto m = static_cast<Eigen::Index>(values.size());
  return values[static_cast<std::size_t>(quantile_index(gamma, m) - 1)];
}

InferenceReport percentile_intervals(const BootstrapResult& result,
                                     const Eigen::VectorXd& beta_hat,
                                     double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("percentile_intervals: alpha must lie in (0, 1)");
  if (beta_hat.size() != result.replicates.cols())
    throw DimensionError("percentile_intervals: beta length mismatch");
  const Eigen::MatrixXd rows = result.effective_rows();
  if (rows.rows() < 2)
    throw InsufficientReplicates(
        "percentile_intervals: need at least 2 effective replicates, have " +
        std::to_string(rows.rows()));

  const double sqn = std::sqrt(static_cast<double>(result.n_obs));
  InferenceReport report;
  report.alpha = alpha;
  report.effective_replicates = static_cast<int>(rows.rows());
  report.coefficients.resize(static_cast<std::size_t>(beta_hat.size()));

  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const Eigen::VectorXd sorted = sorted_column(rows, j);
    auto& c = report.coefficients[static_cast<std::size_t>(j)];
    c.estimate = beta_hat(j);
    c.two_sided = {beta_hat(j) - sorted_quantile(sorted, 1.0 - alpha / 2) / sqn,
                   beta_hat(j) - sorted_quantile(sorted, alpha / 2) / sqn};
    c.left_lower = beta_hat(j) - sorted_quantile(sorted, 1.0 - alpha) / sqn;
    c.right_upper = beta_hat(j) - sorted_quantile(sorted, alpha) / sqn;
  }

  Eigen::VectorXd norms = rows.rowwise().norm();
  std::sort(norms.data(), norms.data() + norms.size());
  report.region_quantile = sorted_quantile(norms, 1.0 - alpha);
  return report;
}

RegionCheck norm_region(const BootstrapResult& result,
                        const Eigen::VectorXd& beta_hat, double alpha,
                        const Eigen::VectorXd& beta_hypothesis) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("norm_region: alpha must lie in (0, 1)");
  if (beta_hat.size() != result.replicates.cols() ||
      beta_hypothesis.size() != beta_hat.size())
    throw DimensionError("norm_region: dimension mismatch");
  const Eigen::MatrixXd rows = result.effective_rows();
  if (rows.rows() < 2)
    throw InsufficientReplicates(
        "norm_region: need at least 2 effective replicates");

  Eigen::VectorXd norms = rows.rowwise().norm();
  std::sort(norms.data(), norms.data() + norms.size());

  RegionCheck check;
  check.quantile = sorted_quantile(norms, 1.0 - alpha);
  const double sqn = std::sqrt(static_cast<double>(result.n_obs));
  check.covered = (sqn * (beta_hat - beta_hypothesis)).norm() <= check.quantile;
  check.empty_estimate_warning = beta_hat.isZero(0.0);
  return check;
}

}  // namespace glmboot
