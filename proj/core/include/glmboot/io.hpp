#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "glmboot/family.hpp"
#include "glmboot/simulation.hpp"

namespace glmboot {

inline constexpr int kSchemaVersion = 1;
inline constexpr char kLibraryVersion[] = "0.1.0";

/// Loads a headered CSV (comma separated, '.' decimal, UTF-8). Covariate
/// column order is preserved as given; no standardization is applied.
/// Unparseable cells are reported with their 1-based row and column name.
Dataset load_csv(const std::string& path, const std::string& response_col,
                 const std::vector<std::string>& covariate_cols);

/// Writes the coverage table as CSV with header
/// coefficient_index,true_value,method,side,coverage,mean_width.
/// Fields without a defined value (region true_value, one-sided widths) are
/// left empty. Output is byte-stable for identical tables.
void write_coverage_csv(const CoverageTable& table, std::ostream& out);
void write_coverage_csv(const CoverageTable& table, const std::string& path);

/// JSON experiment manifest: full config, seeds, counters and versions.
std::string coverage_manifest_json(const SimConfig& config,
                                   const CoverageTable& table);

/// Parses a SimConfig from its JSON representation (the simulate command's
/// config file). Unknown keys are errors.
SimConfig parse_sim_config_json(const std::string& text);
SimConfig load_sim_config(const std::string& path);

/// "exp1" | "pois1" | "beta:a,b"
WeightDistribution parse_weight_spec(const std::string& spec);

/// "cv" | "cv:K" | "fixed:value" | "scaled:lambda0"
LambdaPolicy parse_lambda_spec(const std::string& spec);

}  // namespace glmboot
