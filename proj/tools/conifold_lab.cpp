#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "conifold/error.hpp"
#include "conifold/experiments.hpp"
#include "conifold/link_spectra.hpp"
#include "conifold/weight_calculus.hpp"

using namespace conifold;
using nlohmann::json;

namespace {

std::pair<double, double> parse_range(const std::string& s) {
  const auto colon = s.find(':', 1);  // skip a leading minus sign
  if (colon == std::string::npos)
    throw Error(ErrorCode::invalid_argument, "range must look like lo:hi, got '" + s + "'");
  try {
    return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, "range must look like lo:hi, got '" + s + "'");
  }
}

void print_summary(const SweepResult& r) {
  std::printf("%s [%s] %s\n", r.experiment.c_str(), r.model.c_str(),
              r.summary.pass ? "PASS" : "FAIL");
  for (const auto& c : r.summary.checks)
    std::printf("  %-36s %-6s value=%.6g bound=%.6g\n", c.name.c_str(), c.pass ? "ok" : "FAIL",
                c.value, c.bound);
}

std::vector<ExperimentConfig> read_configs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_failure, "cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_input, path + ": " + e.what());
  }
  // a single config, or a list run in order
  std::vector<ExperimentConfig> out;
  if (!j.is_array()) return {load_config(path)};
  const auto base = std::filesystem::path(path).parent_path();
  for (const auto& item : j) {
    ExperimentConfig c = parse_config(item);
    if (c.model_file && c.model_file->is_relative()) c.model_file = base / *c.model_file;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conifold-lab: weighted analysis experiments on warped-product conifolds"};
  app.require_subcommand(1);

  std::vector<std::string> emit_formats;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  app.add_option("--emit", emit_formats, "Output formats: csv, json, plotdata")
      ->check(CLI::IsMember({"csv", "json", "plotdata"}));
  app.add_option("--seed", seed, "Seed for random test families");
  app.add_option("--out", out_dir, "Output directory");

  auto* run_cmd = app.add_subcommand("run", "Run the experiments in a JSON config");
  std::string config_path;
  run_cmd->add_option("config", config_path, "Config file (object or array of objects)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* weights_cmd = app.add_subcommand("weights", "List exceptional weights of a cone");
  std::string link_spec = "sphere:2", range = "-4:3";
  int m = 3;
  weights_cmd->add_option("--link", link_spec, "sphere:d[:radius], torus:l1,l2,..., custom:path:dim");
  weights_cmd->add_option("--m", m, "Dimension of the cone");
  weights_cmd->add_option("--range", range, "Open interval lo:hi");

  auto* regions_cmd = app.add_subcommand("regions", "Classify a weight-plane grid");
  std::string kind = "AC";
  std::optional<std::string> region_link, region_range;
  double grid = 0.05;
  regions_cmd->add_option("--kind", kind)->check(CLI::IsMember({"AC", "CS", "CSAC"}));
  regions_cmd->add_option("--m", m);
  regions_cmd->add_option("--grid", grid, "Cell size");
  regions_cmd->add_option("--link", region_link, "Link of both ends (default round S^(m-1))");
  regions_cmd->add_option("--range", region_range, "lo:hi on both axes");

  for (auto* sub : {run_cmd, weights_cmd, regions_cmd}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*weights_cmd) {
      const auto [lo, hi] = parse_range(range);
      const Link link = parse_link(link_spec);
      json list = json::array();
      for (const auto& w : exceptional_weights(link, m, lo, hi))
        list.push_back({{"gamma", w.gamma}, {"mult", w.mult}, {"eigenvalue", w.source_eigenvalue}});
      std::cout << list.dump(2) << '\n';
      return 0;
    }

    std::vector<ExperimentConfig> configs;
    if (*regions_cmd) {
      ExperimentConfig c;
      c.experiment = "region_atlas";
      c.kind = kind;
      c.m = m;
      c.grid_step = grid;
      c.link = region_link.value_or("sphere:" + std::to_string(m - 1));
      if (region_range) std::tie(c.range_lo, c.range_hi) = parse_range(*region_range);
      // without --out the table goes to stdout
      if (!out_dir && emit_formats.empty()) {
        validate(c);
        std::cout << to_csv(run(c));
        return 0;
      }
      configs.push_back(c);
    } else {
      configs = read_configs(config_path);
    }

    std::vector<std::string> failing;
    for (auto& c : configs) {
      if (seed) c.seed = *seed;
      if (out_dir) c.out_dir = *out_dir;
      if (!emit_formats.empty()) c.emit = emit_formats;
      validate(c);
      const SweepResult r = run(c);
      for (const auto& f : c.emit)
        for (const auto& p : emit(r, f, c.out_dir)) std::fprintf(stderr, "wrote %s\n", p.c_str());
      print_summary(r);
      if (!r.summary.pass) failing.push_back(r.experiment);
    }
    if (!failing.empty()) {
      std::fprintf(stderr, "failing experiments:");
      for (const auto& f : failing) std::fprintf(stderr, " %s", f.c_str());
      std::fprintf(stderr, "\n");
      return 1;
    }
    return 0;
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.code()), e.what());
    return 2;
  }
}
