// glmboot command-line front end: lasso fits in generalized linear models
// with perturbation- and Pearson-residual-bootstrap inference.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure,
// 4 internal invariant breach.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "glmboot/bootstrap.hpp"
#include "glmboot/errors.hpp"
#include "glmboot/family.hpp"
#include "glmboot/inference.hpp"
#include "glmboot/io.hpp"
#include "glmboot/simulation.hpp"
#include "glmboot/solver.hpp"

namespace {

using nlohmann::json;
using namespace glmboot;

struct DataOptions {
  std::string input;
  std::string response;
  std::string covariates;  // comma-separated, order preserved
  std::string family = "logistic";
  double shape_alpha = 1.0;
  bool standardize = false;
};

struct ModelOptions {
  std::string lambda_spec = "cv:10";
  std::string method = "pb";
  std::string centering = "modified";
  std::string weights = "exp1";
  double threshold_c = 1.0 / 3.0;
  double alpha = 0.10;
  int B = 1000;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string output = "-";
};

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> names;
  std::string item;
  std::stringstream ss(csv);
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) names.push_back(item);
  }
  if (names.empty()) throw InputError("--covariates: no column names given");
  return names;
}

struct LoadedData {
  Dataset data;
  std::vector<std::string> covariate_names;
  Eigen::VectorXd scales;  // per-covariate divisor when standardizing
};

LoadedData load_data(const DataOptions& opt, const FamilySpec& family) {
  if (opt.input.empty()) throw InputError("--input is required");
  if (opt.response.empty()) throw InputError("--response is required");
  LoadedData out{load_csv(opt.input, opt.response, split_names(opt.covariates)),
                 split_names(opt.covariates),
                 Eigen::VectorXd::Ones(0)};
  out.scales = Eigen::VectorXd::Ones(out.data.p());
  if (opt.standardize) {
    for (Eigen::Index j = 0; j < out.data.p(); ++j) {
      const auto col = out.data.X.col(j);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() /
                                  std::max<double>(1.0, out.data.n() - 1));
      if (sd > 0) {
        out.scales(j) = sd;
        out.data.X.col(j) /= sd;
      }
    }
  }
  const ValidityVerdict verdict = validate_dataset(family, out.data);
  if (!verdict.valid) {
    std::ostringstream msg;
    msg << "dataset invalid: " << verdict.reason << "; rows:";
    for (std::size_t k = 0; k < verdict.bad_rows.size() && k < 10; ++k)
      msg << ' ' << verdict.bad_rows[k] + 1;
    if (verdict.bad_rows.size() > 10) msg << " ...";
    throw InputError(msg.str());
  }
  return out;
}

struct FittedModel {
  double lambda = 0.0;
  LassoFit fit;
  json lambda_info;
};

FittedModel fit_model(const FamilySpec& family, const Dataset& data,
                      const ModelOptions& opt) {
  const LambdaPolicy policy = parse_lambda_spec(opt.lambda_spec);
  FittedModel out;
  switch (policy.kind) {
    case LambdaPolicy::Kind::fixed:
      out.lambda = policy.value;
      out.lambda_info = {{"policy", "fixed"}, {"selected", out.lambda}};
      break;
    case LambdaPolicy::Kind::scaled:
      out.lambda = std::sqrt(static_cast<double>(data.n())) * policy.value;
      out.lambda_info = {{"policy", "scaled"},
                         {"lambda0", policy.value},
                         {"selected", out.lambda}};
      break;
    case LambdaPolicy::Kind::cv: {
      if (!opt.seed)
        throw InputError("--seed is required for cross-validated lambda");
      const std::vector<double> grid = default_lambda_grid(
          family, data, policy.grid_size, policy.grid_min_ratio);
      Rng rng = make_rng(split_seed(*opt.seed, 2));
      const CvResult cv =
          cv_select_lambda(family, data, policy.cv_folds, grid, rng);
      out.lambda = cv.lambda;
      out.lambda_info = {{"policy", "cv"},
                         {"folds", policy.cv_folds},
                         {"grid_size", policy.grid_size},
                         {"grid_min_ratio", policy.grid_min_ratio},
                         {"grid_max", grid.front()},
                         {"dropped_candidates", cv.dropped},
                         {"selected", out.lambda}};
      break;
    }
  }
  out.fit = fit(PenalizedProblem{family, data, out.lambda});
  if (!out.fit.converged)
    throw NumericalError("fit did not converge at lambda = " +
                         std::to_string(out.lambda));
  return out;
}

json fit_json(const DataOptions& dopt, const LoadedData& loaded,
              const FittedModel& model) {
  json active = json::array();
  json beta = json::array();
  for (Eigen::Index j = 0; j < model.fit.beta.size(); ++j) {
    beta.push_back(model.fit.beta(j));
    if (model.fit.beta(j) != 0.0)
      active.push_back(loaded.covariate_names[static_cast<std::size_t>(j)]);
  }
  json j{{"schema_version", kSchemaVersion},
         {"family", dopt.family},
         {"response", dopt.response},
         {"covariates", loaded.covariate_names},
         {"standardize", dopt.standardize},
         {"n", loaded.data.n()},
         {"p", loaded.data.p()},
         {"lambda", model.lambda_info},
         {"beta_hat", beta},
         {"active_set", active},
         {"kkt_residual", model.fit.kkt_residual},
         {"objective", model.fit.objective},
         {"iterations", model.fit.iterations}};
  if (dopt.standardize) {
    json scales = json::array();
    for (Eigen::Index k = 0; k < loaded.scales.size(); ++k)
      scales.push_back(loaded.scales(k));
    j["covariate_scales"] = scales;
  }
  return j;
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot open output file '" + path + "'");
  out << text;
}

void check_inference_b(const ModelOptions& opt) {
  if (opt.B < 100)
    throw InputError("--B must be >= 100 for inference commands");
  const int needed = static_cast<int>(
      std::ceil(1.0 / std::min(opt.alpha / 2.0, 1.0 - opt.alpha / 2.0)));
  if (opt.B < needed)
    throw InputError("insufficient replicates for alpha = " +
                     std::to_string(opt.alpha) + " quantiles (needs >= " +
                     std::to_string(needed) + ")");
  if (opt.B < 1000)
    std::cerr << "warning: B = " << opt.B
              << " is small for quantile inference; consider B >= 1000\n";
}

BootstrapPlan make_plan(const ModelOptions& opt, double lambda) {
  if (!opt.seed)
    throw InputError("--seed is required for bootstrap commands");
  BootstrapPlan plan;
  plan.method = method_from_string(opt.method);
  plan.centering = centering_from_string(opt.centering);
  plan.rule = ThresholdRule(opt.threshold_c);
  plan.weights = parse_weight_spec(opt.weights);
  plan.B = opt.B;
  plan.lambda_star = lambda;
  plan.seed = split_seed(*opt.seed, 3);
  plan.threads = opt.threads;
  return plan;
}

int cmd_fit(const DataOptions& dopt, const ModelOptions& mopt) {
  const FamilySpec family =
      make_family(family_from_string(dopt.family), dopt.shape_alpha);
  const LoadedData loaded = load_data(dopt, family);
  const FittedModel model = fit_model(family, loaded.data, mopt);
  json j = fit_json(dopt, loaded, model);
  if (mopt.seed) j["seed"] = *mopt.seed;
  write_output(mopt.output, j.dump(2) + "\n");
  return 0;
}

int cmd_bootstrap(const DataOptions& dopt, const ModelOptions& mopt) {
  check_inference_b(mopt);
  const FamilySpec family =
      make_family(family_from_string(dopt.family), dopt.shape_alpha);
  const LoadedData loaded = load_data(dopt, family);
  const FittedModel model = fit_model(family, loaded.data, mopt);

  const BootstrapPlan plan = make_plan(mopt, model.lambda);
  const BootstrapResult result =
      run_bootstrap(family, loaded.data, model.fit, plan);
  const InferenceReport report =
      percentile_intervals(result, model.fit.beta, mopt.alpha);

  json intervals = json::array();
  for (std::size_t k = 0; k < report.coefficients.size(); ++k) {
    const auto& c = report.coefficients[k];
    intervals.push_back({{"name", loaded.covariate_names[k]},
                         {"estimate", c.estimate},
                         {"two_sided", {c.two_sided.lo, c.two_sided.hi}},
                         {"left_lower", c.left_lower},
                         {"right_upper", c.right_upper}});
  }
  json j = fit_json(dopt, loaded, model);
  j["seed"] = *mopt.seed;
  j["method"] = mopt.method;
  j["centering"] = mopt.centering;
  j["threshold_c"] = mopt.threshold_c;
  j["weights"] = mopt.weights;
  j["B"] = mopt.B;
  j["B_effective"] = report.effective_replicates;
  j["alpha"] = mopt.alpha;
  j["intervals"] = intervals;
  j["region_quantile"] = report.region_quantile;
  j["quality_warning"] = result.quality_warning();
  write_output(mopt.output, j.dump(2) + "\n");
  return 0;
}

int cmd_diagnose(const DataOptions& dopt, const ModelOptions& mopt) {
  if (mopt.B < 100) throw InputError("--B must be >= 100 for diagnose");
  const FamilySpec family =
      make_family(family_from_string(dopt.family), dopt.shape_alpha);
  const LoadedData loaded = load_data(dopt, family);
  const FittedModel model = fit_model(family, loaded.data, mopt);

  const BootstrapPlan plan = make_plan(mopt, model.lambda);
  const BootstrapResult result =
      run_bootstrap(family, loaded.data, model.fit, plan);
  const VarianceDiagnostics diag =
      variance_diagnostics(result, family, loaded.data, result.centering);

  json j{{"schema_version", kSchemaVersion},
         {"family", dopt.family},
         {"n", loaded.data.n()},
         {"p", loaded.data.p()},
         {"lambda", model.lambda_info},
         {"method", mopt.method},
         {"centering", mopt.centering},
         {"B", mopt.B},
         {"B_effective", result.effective()},
         {"seed", *mopt.seed},
         {"score_var_gap", diag.score_var_gap},
         {"rel_score_var_gap", diag.rel_score_var_gap},
         {"mean_sq_centered_residual", diag.mean_sq_centered_residual},
         {"replicate_cov_frob", diag.replicate_cov_frob},
         {"degenerate_sample", diag.degenerate_sample}};
  write_output(mopt.output, j.dump(2) + "\n");
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& output,
                 std::optional<std::uint64_t> seed, std::optional<int> threads) {
  std::ifstream in(config_path);
  if (!in) throw InputError("cannot open config '" + config_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  json raw;
  try {
    raw = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  if (seed) raw["seed"] = *seed;
  if (!raw.contains("seed"))
    throw InputError("simulate requires a seed (config key or --seed flag)");
  if (threads) raw["threads"] = *threads;
  const SimConfig cfg = parse_sim_config_json(raw.dump());

  const CoverageTable table = run_coverage_experiment(cfg);
  write_coverage_csv(table, output + ".csv");
  write_output(output + "_manifest.json", coverage_manifest_json(cfg, table));
  std::cerr << "wrote " << output << ".csv (" << table.completed_reps
            << " completed reps, " << table.failed_reps << " failed)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Lasso estimation and bootstrap inference in generalized linear "
      "models"};
  app.require_subcommand(1);

  DataOptions dopt;
  ModelOptions mopt;
  std::string sim_config, sim_output = "simulation";
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_threads;

  auto add_data_flags = [&](CLI::App* cmd) {
    cmd->add_option("--input", dopt.input, "CSV file with a header row");
    cmd->add_option("--response", dopt.response, "response column name");
    cmd->add_option("--covariates", dopt.covariates,
                    "comma-separated covariate columns (order preserved)");
    cmd->add_option("--family", dopt.family,
                    "linear|logistic|probit|poisson|gamma");
    cmd->add_option("--shape-alpha", dopt.shape_alpha,
                    "gamma shape parameter (default 1)");
    cmd->add_flag("--standardize", dopt.standardize,
                  "divide covariates by their sample standard deviation");
  };
  auto add_model_flags = [&](CLI::App* cmd, bool bootstrap_flags) {
    cmd->add_option("--lambda", mopt.lambda_spec,
                    "cv[:K] | fixed:value | scaled:lambda0");
    cmd->add_option("--seed", [&mopt](const CLI::results_t& r) {
      mopt.seed = std::stoull(r.front());
      return true;
    }, "master RNG seed");
    cmd->add_option("--output", mopt.output, "output path ('-' for stdout)");
    cmd->add_option("--threads", mopt.threads, "worker threads");
    if (bootstrap_flags) {
      cmd->add_option("--method", mopt.method, "pb|prb");
      cmd->add_option("--centering", mopt.centering, "modified|naive");
      cmd->add_option("--B", mopt.B, "bootstrap replicates");
      cmd->add_option("--alpha", mopt.alpha, "1 - confidence level");
      cmd->add_option("--threshold-c", mopt.threshold_c,
                      "threshold exponent, a_n = n^{-c}");
      cmd->add_option("--weights", mopt.weights, "exp1|pois1|beta:a,b");
    }
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "penalized fit only");
  add_data_flags(fit_cmd);
  add_model_flags(fit_cmd, false);

  CLI::App* boot_cmd =
      app.add_subcommand("bootstrap", "fit + bootstrap confidence intervals");
  add_data_flags(boot_cmd);
  add_model_flags(boot_cmd, true);

  CLI::App* diag_cmd =
      app.add_subcommand("diagnose", "variance-consistency diagnostics");
  add_data_flags(diag_cmd);
  add_model_flags(diag_cmd, true);

  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "Monte-Carlo coverage experiment");
  sim_cmd->add_option("--config", sim_config, "JSON experiment config")
      ->required();
  sim_cmd->add_option("--output", sim_output,
                      "output prefix (.csv and _manifest.json)");
  sim_cmd->add_option("--seed", [&sim_seed](const CLI::results_t& r) {
    sim_seed = std::stoull(r.front());
    return true;
  }, "master RNG seed (overrides the config)");
  sim_cmd->add_option("--threads", [&sim_threads](const CLI::results_t& r) {
    sim_threads = std::stoi(r.front());
    return true;
  }, "worker threads (overrides the config)");

  try {
    app.parse(argc, argv);
    if (fit_cmd->parsed()) return cmd_fit(dopt, mopt);
    if (boot_cmd->parsed()) return cmd_bootstrap(dopt, mopt);
    if (diag_cmd->parsed()) return cmd_diagnose(dopt, mopt);
    if (sim_cmd->parsed())
      return cmd_simulate(sim_config, sim_output, sim_seed, sim_threads);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
}
