#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "glmboot/family.hpp"
#include "glmboot/rng.hpp"
#include "glmboot/simulation.hpp"

namespace testsupport {

using glmboot::Dataset;
using glmboot::FamilyId;
using glmboot::FamilySpec;
using glmboot::Rng;

// Five-point central difference, step tuned for ~1e-10 truncation error on
// smooth functions of moderate curvature.
inline double central_diff(const std::function<double(double)>& f, double u,
                           double step = 1e-4) {
  return (-f(u + 2 * step) + 8 * f(u + step) - 8 * f(u - step) +
          f(u - 2 * step)) /
         (12 * step);
}

inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * (1.0 + std::max(std::abs(a), std::abs(b)));
}

// Small random dataset with responses drawn from the family itself, using
// the same design/coefficient conventions as the simulation protocol.
inline Dataset random_dataset(const FamilySpec& family, Eigen::Index n,
                              Eigen::Index p, std::uint64_t seed,
                              double coef_scale = 1.0) {
  Rng rng = glmboot::make_rng(seed);
  Eigen::MatrixXd X = glmboot::generate_design(n, p, rng);
  Eigen::VectorXd beta =
      coef_scale * glmboot::true_beta(p, std::min<Eigen::Index>(p, 2));
  Eigen::VectorXd y = glmboot::generate_responses(family, X, beta, rng);
  return Dataset{std::move(X), std::move(y)};
}

inline const std::vector<FamilyId>& all_families() {
  static const std::vector<FamilyId> fams = {
      FamilyId::linear, FamilyId::logistic, FamilyId::probit,
      FamilyId::poisson, FamilyId::gamma};
  return fams;
}

}  // namespace testsupport
