#include "glmboot/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "glmboot/errors.hpp"

namespace glmboot {

namespace {

using nlohmann::json;

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

double parse_cell(const std::string& cell, long row, const std::string& col) {
  const std::string text = strip(cell);
  std::size_t used = 0;
  double value = 0;
  bool bad = text.empty();
  if (!bad) {
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      bad = true;
    }
  }
  if (bad || used != text.size() || !std::isfinite(value))
    throw ParseError("cell '" + text + "' at data row " + std::to_string(row) +
                     ", column '" + col + "' is not a finite decimal");
  return value;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& response_col,
                 const std::vector<std::string>& covariate_cols) {
  std::ifstream in(path);
  if (!in) throw InputError("load_csv: cannot open '" + path + "'");
  if (covariate_cols.empty())
    throw InputError("load_csv: no covariate columns given");
  for (const auto& c : covariate_cols)
    if (c == response_col)
      throw InputError("load_csv: response column '" + response_col +
                       "' also listed as a covariate");

  std::string line;
  if (!std::getline(in, line))
    throw InputError("load_csv: '" + path + "' is empty");
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = strip(h);

  auto column_index = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return static_cast<long>(k);
    throw InputError("load_csv: column '" + name + "' not found in '" + path +
                     "'");
  };
  const long y_idx = column_index(response_col);
  std::vector<long> x_idx;
  x_idx.reserve(covariate_cols.size());
  for (const auto& c : covariate_cols) x_idx.push_back(column_index(c));

  std::vector<double> ys;
  std::vector<std::vector<double>> xs;
  long row = 0;
  while (std::getline(in, line)) {
    if (strip(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw ParseError("load_csv: data row " + std::to_string(row) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(header.size()));
    ys.push_back(parse_cell(cells[static_cast<std::size_t>(y_idx)], row,
                            response_col));
    std::vector<double> xrow;
    xrow.reserve(x_idx.size());
    for (std::size_t k = 0; k < x_idx.size(); ++k)
      xrow.push_back(parse_cell(cells[static_cast<std::size_t>(x_idx[k])], row,
                                covariate_cols[k]));
    xs.push_back(std::move(xrow));
  }
  if (ys.empty()) throw InputError("load_csv: '" + path + "' has no data rows");

  Dataset data{Eigen::MatrixXd(static_cast<Eigen::Index>(ys.size()),
                               static_cast<Eigen::Index>(x_idx.size())),
               Eigen::VectorXd(static_cast<Eigen::Index>(ys.size()))};
  for (std::size_t i = 0; i < ys.size(); ++i) {
    data.y(static_cast<Eigen::Index>(i)) = ys[i];
    for (std::size_t k = 0; k < x_idx.size(); ++k)
      data.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          xs[i][k];
  }
  return data;
}

void write_coverage_csv(const CoverageTable& table, std::ostream& out) {
  out << "coefficient_index,true_value,method,side,coverage,mean_width\n";
  for (const auto& r : table.rows) {
    const bool region = r.side == "region";
    out << r.coefficient_index << ','
        << (region ? "" : format_double(r.true_value)) << ',' << r.method
        << ',' << r.side << ',' << format_double(r.coverage) << ','
        << (r.side == "two_sided" ? format_double(r.mean_width) : "") << '\n';
  }
}

void write_coverage_csv(const CoverageTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("write_coverage_csv: cannot open '" + path + "'");
  write_coverage_csv(table, out);
}

namespace {

json weights_to_json(const WeightDistribution& w) {
  switch (w.kind()) {
    case WeightKind::exp_one: return "exp1";
    case WeightKind::poisson_one: return "pois1";
    case WeightKind::beta_constrained:
      return json{{"beta", {w.beta_a(), w.beta_b()}}};
  }
  throw std::logic_error("unreachable weight kind");
}

json lambda_policy_to_json(const LambdaPolicy& lp) {
  switch (lp.kind) {
    case LambdaPolicy::Kind::cv:
      return json{{"policy", "cv"},
                  {"folds", lp.cv_folds},
                  {"grid_size", lp.grid_size},
                  {"grid_min_ratio", lp.grid_min_ratio}};
    case LambdaPolicy::Kind::fixed:
      return json{{"policy", "fixed"}, {"value", lp.value}};
    case LambdaPolicy::Kind::scaled:
      return json{{"policy", "scaled"}, {"lambda0", lp.value}};
  }
  throw std::logic_error("unreachable lambda policy");
}

WeightDistribution weights_from_json(const json& j) {
  if (j.is_string()) return parse_weight_spec(j.get<std::string>());
  if (j.is_object() && j.contains("beta") && j["beta"].is_array() &&
      j["beta"].size() == 2)
    return WeightDistribution::beta_constrained(j["beta"][0].get<double>(),
                                                j["beta"][1].get<double>());
  throw InputError("weights: expected \"exp1\", \"pois1\" or {\"beta\":[a,b]}");
}

LambdaPolicy lambda_policy_from_json(const json& j) {
  LambdaPolicy lp;
  if (!j.is_object() || !j.contains("policy"))
    throw InputError("lambda: expected an object with a \"policy\" key");
  const std::string policy = j.at("policy").get<std::string>();
  if (policy == "cv") {
    lp.kind = LambdaPolicy::Kind::cv;
    lp.cv_folds = j.value("folds", 10);
    lp.grid_size = j.value("grid_size", 50);
    lp.grid_min_ratio = j.value("grid_min_ratio", 1e-3);
  } else if (policy == "fixed") {
    lp.kind = LambdaPolicy::Kind::fixed;
    lp.value = j.at("value").get<double>();
  } else if (policy == "scaled") {
    lp.kind = LambdaPolicy::Kind::scaled;
    lp.value = j.at("lambda0").get<double>();
  } else {
    throw InputError("lambda: unknown policy '" + policy + "'");
  }
  return lp;
}

}  // namespace

std::string coverage_manifest_json(const SimConfig& cfg,
                                   const CoverageTable& table) {
  json methods = json::array();
  for (auto m : cfg.methods) methods.push_back(to_string(m));
  json j{
      {"schema_version", kSchemaVersion},
      {"library_version", kLibraryVersion},
      {"config",
       {{"family", to_string(cfg.family)},
        {"shape_alpha", cfg.shape_alpha},
        {"n", cfg.n},
        {"p", cfg.p},
        {"p0", cfg.p0},
        {"mc_reps", cfg.mc_reps},
        {"B", cfg.B},
        {"alpha", cfg.alpha},
        {"threshold_c", cfg.rule.exponent()},
        {"weights", weights_to_json(cfg.weights)},
        {"lambda", lambda_policy_to_json(cfg.lambda_policy)},
        {"methods", methods},
        {"centering", to_string(cfg.centering)},
        {"seed", cfg.seed},
        {"threads", cfg.threads}}},
      {"results",
       {{"completed_reps", table.completed_reps},
        {"failed_reps", table.failed_reps},
        {"retried_reps", table.retried_reps},
        {"max_kkt_ratio", table.max_kkt_ratio},
        {"design_hash", table.design_hash}}},
  };
  return j.dump(2) + "\n";
}

SimConfig parse_sim_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("sim config: invalid JSON: ") + e.what());
  }
  static const char* known[] = {"family",  "shape_alpha", "n",
                                "p",       "p0",          "mc_reps",
                                "B",       "alpha",       "threshold_c",
                                "weights", "lambda",      "methods",
                                "centering", "seed",      "threads"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw InputError("sim config: unknown key '" + it.key() + "'");
  }
  for (const char* required : {"family", "n", "p", "p0", "seed"})
    if (!j.contains(required))
      throw InputError(std::string("sim config: missing key '") + required +
                       "'");

  SimConfig cfg;
  cfg.family = family_from_string(j.at("family").get<std::string>());
  cfg.shape_alpha = j.value("shape_alpha", 1.0);
  cfg.n = j.at("n").get<Eigen::Index>();
  cfg.p = j.at("p").get<Eigen::Index>();
  cfg.p0 = j.at("p0").get<Eigen::Index>();
  cfg.mc_reps = j.value("mc_reps", 300);
  cfg.B = j.value("B", 300);
  cfg.alpha = j.value("alpha", 0.10);
  cfg.rule = ThresholdRule(j.value("threshold_c", 1.0 / 3.0));
  if (j.contains("weights")) cfg.weights = weights_from_json(j["weights"]);
  if (j.contains("lambda"))
    cfg.lambda_policy = lambda_policy_from_json(j["lambda"]);
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods"))
      cfg.methods.push_back(method_from_string(m.get<std::string>()));
  }
  if (j.contains("centering"))
    cfg.centering = centering_from_string(j.at("centering").get<std::string>());
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.threads = j.value("threads", 1);
  return cfg;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("load_sim_config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sim_config_json(ss.str());
}

WeightDistribution parse_weight_spec(const std::string& spec) {
  if (spec == "exp1") return WeightDistribution::exp_one();
  if (spec == "pois1") return WeightDistribution::poisson_one();
  if (spec.rfind("beta:", 0) == 0) {
    double a = 0, b = 0;
    if (std::sscanf(spec.c_str(), "beta:%lf,%lf", &a, &b) != 2)
      throw InputError("weights: expected beta:a,b");
    return WeightDistribution::beta_constrained(a, b);
  }
  throw InputError("weights: unknown spec '" + spec +
                   "' (exp1|pois1|beta:a,b)");
}

LambdaPolicy parse_lambda_spec(const std::string& spec) {
  LambdaPolicy lp;
  try {
    if (spec == "cv") return lp;
    if (spec.rfind("cv:", 0) == 0) {
      lp.cv_folds = std::stoi(spec.substr(3));
      return lp;
    }
    if (spec.rfind("fixed:", 0) == 0) {
      lp.kind = LambdaPolicy::Kind::fixed;
      lp.value = std::stod(spec.substr(6));
      return lp;
    }
    if (spec.rfind("scaled:", 0) == 0) {
      lp.kind = LambdaPolicy::Kind::scaled;
      lp.value = std::stod(spec.substr(7));
      return lp;
    }
  } catch (const std::logic_error&) {
    throw InputError("lambda: malformed spec '" + spec + "'");
  }
  throw InputError("lambda: unknown spec '" + spec +
                   "' (cv[:K]|fixed:value|scaled:lambda0)");
}

}  // namespace glmboot
