#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "glmboot/bootstrap.hpp"
#include "glmboot/family.hpp"
#include "glmboot/inference.hpp"

namespace glmboot {

struct LambdaPolicy {
  enum class Kind { cv, fixed, scaled };
  Kind kind = Kind::cv;
  int cv_folds = 10;
  int grid_size = 50;
  double grid_min_ratio = 1e-3;
  double value = 0.0;  // fixed: lambda_n = value; scaled: lambda_n = sqrt(n)*value
};

struct SimConfig {
  FamilyId family = FamilyId::logistic;
  double shape_alpha = 1.0;
  Eigen::Index n = 100;
  Eigen::Index p = 5;
  Eigen::Index p0 = 2;
  int mc_reps = 300;
  int B = 300;
  double alpha = 0.10;
  ThresholdRule rule{};
  WeightDistribution weights = WeightDistribution::exp_one();
  LambdaPolicy lambda_policy{};
  std::vector<BootstrapMethod> methods = {BootstrapMethod::pb,
                                          BootstrapMethod::prb};
  CenteringMode centering = CenteringMode::modified;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// AR(1)-style p x p covariance: 1 on the diagonal, 0.3^|j-k| off it.
Eigen::MatrixXd design_covariance(Eigen::Index p);

/// n i.i.d. mean-zero Gaussian rows with design_covariance(p). Generated
/// once per experiment and then held fixed across Monte-Carlo repetitions.
Eigen::MatrixXd generate_design(Eigen::Index n, Eigen::Index p, Rng& rng);

/// beta_j = 0.5 (-1)^j j for j <= p0 (1-based), zero beyond.
Eigen::VectorXd true_beta(Eigen::Index p, Eigen::Index p0);

/// Independent responses with mean g_inv(x_i'beta): Bernoulli for
/// logistic/probit, Gamma(shape alpha, scale mu/alpha) for gamma, N(eta, 1)
/// for linear, Poisson for poisson.
Eigen::VectorXd generate_responses(const FamilySpec& family,
                                   const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& beta, Rng& rng);

struct CoverageRow {
  int coefficient_index = 0;  // 1-based; 0 for whole-vector region rows
  double true_value = 0.0;
  std::string method;  // "pb" | "prb"
  std::string side;    // "two_sided" | "left" | "right" | "region"
  double coverage = 0.0;
  double mean_width = 0.0;  // meaningful for two_sided rows only
};

struct CoverageTable {
  std::vector<CoverageRow> rows;
  int completed_reps = 0;
  int failed_reps = 0;
  int retried_reps = 0;
  double max_kkt_ratio = 0.0;   // max kkt/(1+lambda) over every internal fit
  std::uint64_t design_hash = 0;

  const CoverageRow* find(const std::string& method, const std::string& side,
                          int coefficient_index) const;
  double coverage(const std::string& method, const std::string& side,
                  int coefficient_index) const;
  double width(const std::string& method, int coefficient_index) const;
  double region_coverage(const std::string& method) const;
};

/// Full Monte-Carlo protocol: one frozen design; per repetition fresh
/// responses, penalty by policy, lasso fit, bootstrap per method, intervals
/// and region at level alpha. A failed repetition is retried once on a
/// derived response stream; the experiment aborts if more than 20% of
/// repetitions fail. Deterministic given the config, at any thread count.
CoverageTable run_coverage_experiment(const SimConfig& config);

struct CenteringContrast {
  CoverageTable modified_table;
  CoverageTable naive_table;
  // ks_distance(m, j): Kolmogorov-Smirnov distance between the modified and
  // naive replicate distributions of coordinate j for config.methods[m],
  // computed on the first repetition's dataset with shared seeds.
  Eigen::MatrixXd ks_distance;
};

/// Runs the experiment under both centerings with identical seeds.
CenteringContrast contrast_centerings(const SimConfig& config);

/// FNV-1a over the matrix bytes; used to certify the frozen design.
std::uint64_t hash_matrix(const Eigen::MatrixXd& m);

}  // namespace glmboot
