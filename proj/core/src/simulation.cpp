#include "glmboot/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "glmboot/errors.hpp"
#include "glmboot/solver.hpp"

namespace glmboot {

namespace {

// Child-stream layout under the master seed. Each Monte-Carlo repetition
// owns a block of streams so results do not depend on worker scheduling.
constexpr std::uint64_t kDesignStream = 0;
enum RepPurpose : std::uint64_t {
  kResponses = 0,
  kResponsesRetry = 1,
  kCvFolds = 2,
  kPbBootstrap = 3,
  kPrbBootstrap = 4,
};
std::uint64_t rep_stream(int rep, RepPurpose purpose) {
  return (static_cast<std::uint64_t>(rep) + 1) * 16 + purpose;
}

}  // namespace

Eigen::MatrixXd design_covariance(Eigen::Index p) {
  if (p < 1) throw InputError("design_covariance: p must be >= 1");
  Eigen::MatrixXd sigma(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k)
      sigma(j, k) = j == k ? 1.0 : std::pow(0.3, std::abs(double(j - k)));
  return sigma;
}

Eigen::MatrixXd generate_design(Eigen::Index n, Eigen::Index p, Rng& rng) {
  if (n < 1 || p < 1) throw InputError("generate_design: need n, p >= 1");
  const Eigen::MatrixXd sigma = design_covariance(p);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("generate_design: covariance not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd z(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) z(j) = gauss(rng);
    X.row(i) = (chol * z).transpose();
  }
  return X;
}

Eigen::VectorXd true_beta(Eigen::Index p, Eigen::Index p0) {
  if (p0 > p) throw InputError("true_beta: p0 must be <= p");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 1; j <= p0; ++j)
    beta(j - 1) = 0.5 * (j % 2 == 0 ? 1.0 : -1.0) * static_cast<double>(j);
  return beta;
}

Eigen::VectorXd generate_responses(const FamilySpec& family,
                                   const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& beta, Rng& rng) {
  if (beta.size() != X.cols())
    throw DimensionError("generate_responses: beta length mismatch");
  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double mu = family.g_inv(eta(i));
    switch (family.id()) {
      case FamilyId::linear: {
        std::normal_distribution<double> d(eta(i), 1.0);
        y(i) = d(rng);
        break;
      }
      case FamilyId::logistic:
      case FamilyId::probit: {
        std::bernoulli_distribution d(std::clamp(mu, 0.0, 1.0));
        y(i) = d(rng) ? 1.0 : 0.0;
        break;
      }
      case FamilyId::poisson: {
        std::poisson_distribution<long> d(mu);
        y(i) = static_cast<double>(d(rng));
        break;
      }
      case FamilyId::gamma: {
        std::gamma_distribution<double> d(family.shape_alpha(),
                                          mu / family.shape_alpha());
        y(i) = d(rng);
        break;
      }
    }
  }
  return y;
}

std::uint64_t hash_matrix(const Eigen::MatrixXd& m) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  const auto* bytes = reinterpret_cast<const unsigned char*>(m.data());
  const std::size_t len = sizeof(double) * static_cast<std::size_t>(m.size());
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

const CoverageRow* CoverageTable::find(const std::string& method,
                                       const std::string& side,
                                       int coefficient_index) const {
  for (const auto& r : rows)
    if (r.method == method && r.side == side &&
        r.coefficient_index == coefficient_index)
      return &r;
  return nullptr;
}

double CoverageTable::coverage(const std::string& method,
                               const std::string& side,
                               int coefficient_index) const {
  const CoverageRow* r = find(method, side, coefficient_index);
  if (!r) throw InputError("CoverageTable: no such row");
  return r->coverage;
}

double CoverageTable::width(const std::string& method,
                            int coefficient_index) const {
  const CoverageRow* r = find(method, "two_sided", coefficient_index);
  if (!r) throw InputError("CoverageTable: no such row");
  return r->mean_width;
}

double CoverageTable::region_coverage(const std::string& method) const {
  return coverage(method, "region", 0);
}

namespace {

struct MethodOutcome {
  bool region_covered = false;
  std::vector<std::uint8_t> two_covered, left_covered, right_covered;
  Eigen::VectorXd widths;
};

struct RepOutcome {
  bool ok = false;
  bool retried = false;
  double max_kkt = 0.0;
  std::vector<MethodOutcome> per_method;
};

void validate_config(const SimConfig& cfg) {
  if (cfg.p0 > cfg.p) throw InputError("SimConfig: p0 must be <= p");
  if (cfg.mc_reps < 1) throw InputError("SimConfig: mc_reps must be >= 1");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw InputError("SimConfig: alpha must lie in (0, 1)");
  if (cfg.B < 2) throw InputError("SimConfig: B must be >= 2");
  if (cfg.methods.empty()) throw InputError("SimConfig: no methods selected");
  if (cfg.lambda_policy.kind != LambdaPolicy::Kind::cv &&
      !(cfg.lambda_policy.value > 0.0))
    throw InputError("SimConfig: fixed/scaled lambda must be positive");
}

double select_lambda(const SimConfig& cfg, const FamilySpec& fam,
                     const Dataset& ds, int rep) {
  switch (cfg.lambda_policy.kind) {
    case LambdaPolicy::Kind::fixed:
      return cfg.lambda_policy.value;
    case LambdaPolicy::Kind::scaled:
      return std::sqrt(static_cast<double>(cfg.n)) * cfg.lambda_policy.value;
    case LambdaPolicy::Kind::cv: {
      const std::vector<double> grid =
          default_lambda_grid(fam, ds, cfg.lambda_policy.grid_size,
                              cfg.lambda_policy.grid_min_ratio);
      Rng cv_rng = make_rng(split_seed(cfg.seed, rep_stream(rep, kCvFolds)));
      return cv_select_lambda(fam, ds, cfg.lambda_policy.cv_folds, grid,
                              cv_rng)
          .lambda;
    }
  }
  throw std::logic_error("unreachable lambda policy");
}

RepOutcome run_one_rep(const SimConfig& cfg, const FamilySpec& fam,
                       const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& beta_true, int rep,
                       bool retry) {
  Rng resp_rng = make_rng(split_seed(
      cfg.seed, rep_stream(rep, retry ? kResponsesRetry : kResponses)));
  const Dataset ds{X, generate_responses(fam, X, beta_true, resp_rng)};

  const double lambda_n = select_lambda(cfg, fam, ds, rep);
  const LassoFit full = fit(PenalizedProblem{fam, ds, lambda_n});
  if (!full.converged)
    throw NumericalError("coverage rep: full fit did not converge");

  RepOutcome out;
  out.max_kkt = full.kkt_residual / (1.0 + lambda_n);
  out.per_method.resize(cfg.methods.size());

  const auto p = static_cast<std::size_t>(cfg.p);
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    BootstrapPlan plan;
    plan.method = cfg.methods[m];
    plan.centering = cfg.centering;
    plan.rule = cfg.rule;
    plan.weights = cfg.weights;
    plan.B = cfg.B;
    plan.lambda_star = lambda_n;
    plan.seed = split_seed(
        cfg.seed, rep_stream(rep, cfg.methods[m] == BootstrapMethod::pb
                                      ? kPbBootstrap
                                      : kPrbBootstrap));
    plan.threads = 1;  // repetitions are the parallel unit

    const BootstrapResult res = run_bootstrap(fam, ds, full, plan);
    out.max_kkt = std::max(out.max_kkt, res.max_kkt_ratio);

    const InferenceReport rep_report =
        percentile_intervals(res, full.beta, cfg.alpha);
    const RegionCheck region = norm_region(res, full.beta, cfg.alpha, beta_true);

    MethodOutcome& mo = out.per_method[m];
    mo.region_covered = region.covered;
    mo.two_covered.resize(p);
    mo.left_covered.resize(p);
    mo.right_covered.resize(p);
    mo.widths.resize(cfg.p);
    for (Eigen::Index j = 0; j < cfg.p; ++j) {
      const auto& c = rep_report.coefficients[static_cast<std::size_t>(j)];
      mo.two_covered[static_cast<std::size_t>(j)] =
          c.two_sided.contains(beta_true(j));
      mo.left_covered[static_cast<std::size_t>(j)] =
          c.left_lower <= beta_true(j);
      mo.right_covered[static_cast<std::size_t>(j)] =
          beta_true(j) <= c.right_upper;
      mo.widths(j) = c.two_sided.width();
    }
  }
  out.ok = true;
  out.retried = retry;
  return out;
}

}  // namespace

CoverageTable run_coverage_experiment(const SimConfig& cfg) {
  validate_config(cfg);
  const FamilySpec fam = make_family(cfg.family, cfg.shape_alpha);

  Rng design_rng = make_rng(split_seed(cfg.seed, kDesignStream));
  const Eigen::MatrixXd X = generate_design(cfg.n, cfg.p, design_rng);
  const Eigen::VectorXd beta_true = true_beta(cfg.p, cfg.p0);
  const std::uint64_t design_hash = hash_matrix(X);

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.mc_reps));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= cfg.mc_reps) return;
      auto& slot = outcomes[static_cast<std::size_t>(r)];
      try {
        slot = run_one_rep(cfg, fam, X, beta_true, r, false);
      } catch (const NumericalError&) {
        try {
          slot = run_one_rep(cfg, fam, X, beta_true, r, true);
        } catch (const NumericalError&) {
          slot.ok = false;
          slot.retried = true;
        }
      }
    }
  };
  const int threads = std::max(1, std::min(cfg.threads, cfg.mc_reps));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  if (hash_matrix(X) != design_hash)
    throw std::logic_error("run_coverage_experiment: frozen design mutated");

  CoverageTable table;
  table.design_hash = design_hash;
  for (const auto& o : outcomes) {
    if (o.ok) {
      ++table.completed_reps;
      if (o.retried) ++table.retried_reps;
      table.max_kkt_ratio = std::max(table.max_kkt_ratio, o.max_kkt);
    } else {
      ++table.failed_reps;
    }
  }
  if (table.failed_reps * 5 > cfg.mc_reps)
    throw BootstrapFailure(
        "run_coverage_experiment: more than 20% of repetitions failed");
  const double denom = table.completed_reps;

  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    const std::string method = to_string(cfg.methods[m]);
    for (Eigen::Index j = 0; j < cfg.p; ++j) {
      double two = 0, left = 0, right = 0, width = 0;
      for (const auto& o : outcomes) {
        if (!o.ok) continue;
        const MethodOutcome& mo = o.per_method[m];
        two += mo.two_covered[static_cast<std::size_t>(j)];
        left += mo.left_covered[static_cast<std::size_t>(j)];
        right += mo.right_covered[static_cast<std::size_t>(j)];
        width += mo.widths(j);
      }
      const int idx = static_cast<int>(j) + 1;
      const double truth = beta_true(j);
      table.rows.push_back(
          {idx, truth, method, "two_sided", two / denom, width / denom});
      table.rows.push_back({idx, truth, method, "left", left / denom, 0.0});
      table.rows.push_back({idx, truth, method, "right", right / denom, 0.0});
    }
    double region = 0;
    for (const auto& o : outcomes)
      if (o.ok) region += o.per_method[m].region_covered;
    table.rows.push_back({0, 0.0, method, "region", region / denom, 0.0});
  }
  return table;
}

CenteringContrast contrast_centerings(const SimConfig& cfg) {
  validate_config(cfg);
  SimConfig modified_cfg = cfg;
  modified_cfg.centering = CenteringMode::modified;
  SimConfig naive_cfg = cfg;
  naive_cfg.centering = CenteringMode::naive;

  CenteringContrast out;
  out.modified_table = run_coverage_experiment(modified_cfg);
  out.naive_table = run_coverage_experiment(naive_cfg);

  // Representative dataset: repetition 0 rebuilt from the same streams the
  // experiments used, bootstraps re-run under both centerings with the same
  // replicate seeds.
  const FamilySpec fam = make_family(cfg.family, cfg.shape_alpha);
  Rng design_rng = make_rng(split_seed(cfg.seed, kDesignStream));
  const Eigen::MatrixXd X = generate_design(cfg.n, cfg.p, design_rng);
  const Eigen::VectorXd beta_true = true_beta(cfg.p, cfg.p0);
  Rng resp_rng = make_rng(split_seed(cfg.seed, rep_stream(0, kResponses)));
  const Dataset ds{X, generate_responses(fam, X, beta_true, resp_rng)};
  const double lambda_n = select_lambda(cfg, fam, ds, 0);
  const LassoFit full = fit(PenalizedProblem{fam, ds, lambda_n});

  out.ks_distance.resize(static_cast<Eigen::Index>(cfg.methods.size()), cfg.p);
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    BootstrapPlan plan;
    plan.method = cfg.methods[m];
    plan.rule = cfg.rule;
    plan.weights = cfg.weights;
    plan.B = cfg.B;
    plan.lambda_star = lambda_n;
    plan.seed = split_seed(
        cfg.seed, rep_stream(0, cfg.methods[m] == BootstrapMethod::pb
                                    ? kPbBootstrap
                                    : kPrbBootstrap));
    plan.centering = CenteringMode::modified;
    const BootstrapResult mod = run_bootstrap(fam, ds, full, plan);
    plan.centering = CenteringMode::naive;
    const BootstrapResult nai = run_bootstrap(fam, ds, full, plan);

    const Eigen::MatrixXd a = mod.effective_rows();
    const Eigen::MatrixXd b = nai.effective_rows();
    for (Eigen::Index j = 0; j < cfg.p; ++j) {
      std::vector<double> av(a.col(j).data(), a.col(j).data() + a.rows());
      std::vector<double> bv(b.col(j).data(), b.col(j).data() + b.rows());
      std::sort(av.begin(), av.end());
      std::sort(bv.begin(), bv.end());
      // two-pointer sup |ECDF_a - ECDF_b|
      double sup = 0.0;
      std::size_t ia = 0, ib = 0;
      while (ia < av.size() || ib < bv.size()) {
        double x;
        if (ib == bv.size() || (ia < av.size() && av[ia] <= bv[ib]))
          x = av[ia];
        else
          x = bv[ib];
        while (ia < av.size() && av[ia] <= x) ++ia;
        while (ib < bv.size() && bv[ib] <= x) ++ib;
        sup = std::max(sup, std::abs(static_cast<double>(ia) / av.size() -
                                     static_cast<double>(ib) / bv.size()));
      }
      out.ks_distance(static_cast<Eigen::Index>(m), j) = sup;
    }
  }
  return out;
}

}  // namespace glmboot
