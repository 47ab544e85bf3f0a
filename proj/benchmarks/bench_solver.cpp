#include <benchmark/benchmark.h>

#include "glmboot/bootstrap.hpp"
#include "glmboot/simulation.hpp"
#include "glmboot/solver.hpp"

namespace {

using namespace glmboot;

struct Instance {
  FamilySpec family;
  Dataset data;
  double lambda;
};

Instance make_instance(FamilyId id, Eigen::Index n, Eigen::Index p) {
  const FamilySpec family = make_family(id);
  Rng rng = make_rng(20250811);
  Eigen::MatrixXd X = generate_design(n, p, rng);
  Eigen::VectorXd beta = true_beta(p, std::min<Eigen::Index>(p, 2));
  Eigen::VectorXd y = generate_responses(family, X, beta, rng);
  Dataset data{std::move(X), std::move(y)};
  const double lambda =
      0.1 * lambda_max(PenalizedProblem{family, data, 0.0});
  return {family, std::move(data), lambda};
}

void BM_fit(benchmark::State& state, FamilyId id) {
  const Instance inst = make_instance(id, state.range(0), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        fit(PenalizedProblem{inst.family, inst.data, inst.lambda}));
  }
}

void BM_pb_replicate(benchmark::State& state) {
  const Instance inst = make_instance(FamilyId::logistic, state.range(0), 5);
  const LassoFit f = fit(PenalizedProblem{inst.family, inst.data, inst.lambda});
  const WeightDistribution w = WeightDistribution::exp_one();
  Rng rng = make_rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pb_replicate(inst.family, inst.data, f.beta,
                                          inst.lambda, w, rng));
  }
}

void BM_prb_replicate(benchmark::State& state) {
  const Instance inst = make_instance(FamilyId::logistic, state.range(0), 5);
  const LassoFit f = fit(PenalizedProblem{inst.family, inst.data, inst.lambda});
  Rng rng = make_rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        prb_replicate(inst.family, inst.data, f.beta, inst.lambda, rng));
  }
}

void BM_cv(benchmark::State& state) {
  const Instance inst = make_instance(FamilyId::logistic, state.range(0), 5);
  const auto grid = default_lambda_grid(inst.family, inst.data);
  for (auto _ : state) {
    Rng rng = make_rng(11);
    benchmark::DoNotOptimize(
        cv_select_lambda(inst.family, inst.data, 10, grid, rng));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_fit, logistic, FamilyId::logistic)->Arg(100)->Arg(500);
BENCHMARK_CAPTURE(BM_fit, gamma, FamilyId::gamma)->Arg(100)->Arg(500);
BENCHMARK_CAPTURE(BM_fit, linear, FamilyId::linear)->Arg(100)->Arg(500);
BENCHMARK(BM_pb_replicate)->Arg(100)->Arg(500);
BENCHMARK(BM_prb_replicate)->Arg(100)->Arg(500);
BENCHMARK(BM_cv)->Arg(100)->Arg(500);

BENCHMARK_MAIN();
