#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "conifold/conifold_model.hpp"

namespace conifold {

const std::vector<std::string>& experiment_names();

struct Tolerances {
  double ratio = 2.0;       // max/min of a per-t constant
  double identity = 1e-10;  // norm identities and exact-zero checks
  double slope = 0.1;       // first-derivative fit, and the trend of log constant vs log t
  double slope2 = 0.15;     // second-derivative fit
  double min_members = 30;  // bump family size
};

struct WeightCrossingCase {
  double gamma;
  double eigenvalue;
};

struct ExperimentConfig {
  std::string experiment;
  std::string model = "dumbbell";
  std::optional<std::filesystem::path> model_file;
  int m = 3;
  std::vector<double> t_list{1e-1, 1e-2, 1e-3, 1e-4};
  double p = 2.0;
  int k = 0;
  std::optional<double> beta;  // constant weight override; the model's own otherwise
  GlueParams glue;
  int nodes_per_region = 2000;
  double max_eigenvalue = 12.0;
  Tolerances tol;
  std::filesystem::path out_dir = ".";
  std::vector<std::string> emit{"csv"};
  std::uint64_t seed = 20240601;

  // region_atlas
  std::string kind = "AC";
  std::string link = "sphere:2";
  double grid_step = 0.05;
  double range_lo = -4.0;
  double range_hi = 3.0;

  // weight_crossing; empty means {(0, 0), (1, 2)}
  std::vector<WeightCrossingCase> crossings;

  // neck_convergence: compare with zero instead of requiring decrease
  std::optional<bool> expect_zero;
};

// Throws Error(config) on unknown experiments, bad t lists or tolerances.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& file);
void validate(const ExperimentConfig& cfg);

using Cell = std::variant<double, std::string>;

struct Check {
  std::string name;
  double value;
  double bound;
  bool pass;
};

struct Summary {
  std::string metric;  // the column the ratio and trend refer to, if any
  double max = 0.0;
  double min = 0.0;
  double ratio = 0.0;
  double trend_slope = 0.0;
  bool pass = true;
  std::vector<Check> checks;
};

struct SweepResult {
  std::string experiment;
  std::string model;
  std::uint64_t seed = 0;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  Summary summary;
};

SweepResult run(const ExperimentConfig& cfg);

// Files land in dir as <experiment>.csv, <experiment>.json and
// <experiment>_<curve>.dat. Returns the paths written.
std::vector<std::filesystem::path> emit(const SweepResult& result, const std::string& format,
                                        const std::filesystem::path& dir);

std::string to_csv(const SweepResult& result);
nlohmann::json to_json(const SweepResult& result);
SweepResult result_from_json(const nlohmann::json& j);

// Glued model for a preset name or a model file, at one t.
GluedModel glued_from_config(const ExperimentConfig& cfg, double t);
// Plain (unglued) model for a preset name or a model file.
ConifoldModel model_from_config(const ExperimentConfig& cfg);
ConifoldModel model_from_json(const nlohmann::json& j);

// Least-squares slope of y against x.
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace conifold
