#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "conifold/conifold_model.hpp"
#include "conifold/error.hpp"
#include "conifold/experiments.hpp"

using namespace conifold;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "conifold_exp_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double num(const Cell& c) { return std::get<double>(c); }
const std::string& str(const Cell& c) { return std::get<std::string>(c); }

}  // namespace

TEST_CASE("config parsing rejects bad input") {
  CHECK(code_of([] { parse_config(json{{"experiment", "nonsense"}}); }) == ErrorCode::config);
  CHECK(code_of([] {
          parse_config(json{{"experiment", "eta_bounds"}, {"t_list", {0.01, 0.1}}});
        }) == ErrorCode::config);
  CHECK(code_of([] {
          parse_config(json{{"experiment", "eta_bounds"}, {"t_list", {1.0, 0.1}}});
        }) == ErrorCode::config);
  CHECK(code_of([] { parse_config(json{{"experiment", "eta_bounds"}, {"t_list", json::array()}}); }) ==
        ErrorCode::config);
  CHECK(code_of([] {
          parse_config(json{{"experiment", "eta_bounds"}, {"tolerances", {{"ratio", 0.0}}}});
        }) == ErrorCode::config);
  CHECK(code_of([] { parse_config(json{{"experiment", "eta_bounds"}, {"emit", "xml"}}); }) ==
        ErrorCode::config);
  CHECK(code_of([] {
          parse_config(json{{"experiment", "eta_bounds"}, {"a", 0.1}, {"b", 0.2}});
        }) == ErrorCode::config);
  CHECK(code_of([] { parse_config(json::array()); }) == ErrorCode::config);
  CHECK(code_of([] { load_config("/nonexistent/cfg.json"); }) == ErrorCode::io_failure);

  const fs::path dir = scratch("cfg");
  std::ofstream(dir / "broken.json") << "{\"experiment\": ";
  CHECK(code_of([&] { load_config(dir / "broken.json"); }) == ErrorCode::malformed_input);

  const auto c = parse_config(json{{"experiment", "region_atlas"},
                                   {"range", {-2, 1}},
                                   {"emit", "json"},
                                   {"tolerances", {{"slope", 0.05}}}});
  CHECK(c.range_lo == -2.0);
  CHECK(c.range_hi == 1.0);
  CHECK(c.emit == std::vector<std::string>{"json"});
  CHECK(c.tol.slope == 0.05);
  CHECK(c.tol.ratio == 2.0);
}

TEST_CASE("relative model files resolve against the config location") {
  const fs::path dir = scratch("rel");
  fs::create_directories(dir / "models");
  std::ofstream(dir / "models" / "m.json")
      << R"j({"m": 3, "components": [{"profile": "capped_hyperboloid(1)", "link": "sphere:2",
            "ends": [{"kind": "AC", "nu": -2, "beta": -0.5, "boundary": 2}]}]})j";
  std::ofstream(dir / "cfg.json")
      << R"j({"experiment": "weight_crossing", "model_file": "models/m.json"})j";
  const auto cfg = load_config(dir / "cfg.json");
  REQUIRE(cfg.model_file);
  CHECK(*cfg.model_file == dir / "models" / "m.json");
  const ConifoldModel model = model_from_config(cfg);
  CHECK(model.components.size() == 1);
  CHECK(manifold_kind(model) == ManifoldKind::AC);
  // a single model is not a gluing
  CHECK(code_of([&] { glued_from_config(cfg, 1e-2); }) == ErrorCode::config);
}

TEST_CASE("model files") {
  const json good = json::parse(R"j({"m": 3, "components": [{"profile": "capped_hyperboloid(1)",
      "ends": [{"kind": "AC", "beta": -0.5, "boundary": 2}]}]})j");
  const ConifoldModel m = model_from_json(good);
  CHECK(m.components[0].ends[0].nu == -2.0);
  CHECK(m.components[0].link.same_cone(Link::sphere(2)));
  CHECK(code_of([] { model_from_json(json::object()); }) == ErrorCode::malformed_input);
  const json mixed = json::parse(R"j({"m": 3, "components": [{"profile": "hyperboloid(1)",
      "ends": [{"kind": "AC", "link": "sphere:2"}, {"kind": "AC", "link": "sphere:2:2"}]}]})j");
  CHECK(code_of([&] { model_from_json(mixed); }) == ErrorCode::link_mismatch);
}

TEST_CASE("fitted slope") {
  CHECK(fitted_slope({0, 1, 2, 3}, {1, 4, 7, 10}) == doctest::Approx(3.0));
  // symmetric noise does not move the slope
  CHECK(fitted_slope({-1, 0, 1}, {-2 + 0.1, 0, 2 + 0.1}) == doctest::Approx(2.0));
  CHECK(code_of([] { fitted_slope({1.0}, {1.0}); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { fitted_slope({1, 1}, {0, 1}); }) == ErrorCode::invalid_argument);
}

TEST_CASE("CSV output is deterministic for a fixed seed") {
  auto cfg = parse_config(json{{"experiment", "norm_identities"}, {"model", "capped_hyperboloid"}});
  const fs::path d1 = scratch("det1"), d2 = scratch("det2");
  const auto a = run(cfg), b = run(cfg);
  emit(a, "csv", d1);
  emit(b, "csv", d2);
  CHECK(slurp(d1 / "norm_identities.csv") == slurp(d2 / "norm_identities.csv"));
  CHECK(a.summary.pass);
  CHECK(a.seed == cfg.seed);
}

TEST_CASE("empty results still carry a header") {
  SweepResult r;
  r.experiment = "eta_bounds";
  r.columns = {"t", "value"};
  CHECK(to_csv(r) == "t,value\n");
  const fs::path dir = scratch("empty");
  const auto files = emit(r, "plotdata", dir);
  REQUIRE(files.size() == 1);
  CHECK(slurp(files[0]) == "# t value\n");
}

TEST_CASE("JSON results round-trip") {
  SweepResult r;
  r.experiment = "region_atlas";
  r.model = "AC:sphere:2";
  r.seed = 7;
  r.columns = {"x", "label"};
  r.rows = {{0.25, std::string("isomorphism")}, {1.5, std::string("exceptional")}};
  r.summary.metric = "x";
  r.summary.max = 1.5;
  r.summary.min = 0.25;
  r.summary.ratio = 6.0;
  r.summary.checks = {{"c", 1.0, 2.0, true}};
  const SweepResult back = result_from_json(json::parse(to_json(r).dump()));
  CHECK(to_csv(back) == to_csv(r));
  CHECK(back.seed == 7);
  CHECK(back.summary.ratio == 6.0);
  REQUIRE(back.summary.checks.size() == 1);
  CHECK(back.summary.checks[0].name == "c");
  CHECK(code_of([] { result_from_json(json{{"experiment", 1}}); }) == ErrorCode::malformed_input);
}

TEST_CASE("emitting into an unwritable location fails cleanly") {
  const fs::path dir = scratch("io");
  std::ofstream(dir / "plain") << "x";
  SweepResult r;
  r.experiment = "eta_bounds";
  r.columns = {"t"};
  CHECK(code_of([&] { emit(r, "csv", dir / "plain" / "sub"); }) == ErrorCode::io_failure);
  CHECK(code_of([&] { emit(r, "xml", dir); }) == ErrorCode::config);
}

TEST_CASE("region atlas labels chambers for two AC ends over S^2") {
  auto cfg = parse_config(
      json{{"experiment", "region_atlas"}, {"kind", "AC"}, {"grid_step", 0.5}, {"range", {-2, 1}}});
  const auto r = run(cfg);
  CHECK(r.summary.pass);
  REQUIRE(r.rows.size() == 36);
  auto cell = [&](double b1, double b2) -> const std::vector<Cell>& {
    for (const auto& row : r.rows)
      if (num(row[0]) == b1 && num(row[1]) == b2) return row;
    FAIL("missing cell");
    return r.rows.front();
  };
  // between 2-m = -1 and 0 on both ends nothing crosses
  CHECK(str(cell(-0.25, -0.25).back()) == "isomorphism");
  CHECK(num(cell(-0.25, -0.25)[4]) == 0.0);
  // above zero on both ends the constants join the kernel
  CHECK(str(cell(0.25, 0.75).back()) == "surjective");
  CHECK(num(cell(0.25, 0.75)[4]) == 2.0);
  CHECK(num(cell(0.25, 0.75)[5]) == 2.0);
  // below -1 on both ends: injective with cokernel
  CHECK(str(cell(-1.25, -1.75).back()) == "injective");
  CHECK(num(cell(-1.25, -1.75)[4]) == -2.0);

  // cells centred on a root are exceptional
  cfg.grid_step = 1.0;
  cfg.range_lo = -1.5;
  cfg.range_hi = 1.5;
  const auto coarse = run(cfg);
  REQUIRE(coarse.rows.size() == 9);
  for (const auto& row : coarse.rows) CHECK(str(row.back()) == "exceptional");

  const fs::path dir = scratch("atlas");
  CHECK(emit(coarse, "plotdata", dir).size() == 5);
  CHECK(slurp(dir / "region_atlas_exceptional.dat").find("0 0\n") != std::string::npos);
}

TEST_CASE("cutoff derivative maxima against finite differences") {
  auto cfg = parse_config(json{{"experiment", "eta_bounds"}, {"a", 0.4}, {"b", 0.2}});
  const auto r = run(cfg);
  REQUIRE(r.rows.size() == 4);
  // |log t| max |r eta'| is the slope of the profile in log r / log t, the same for every t
  for (const auto& row : r.rows)
    CHECK(num(row[4]) == doctest::Approx(num(r.rows[0][4])).epsilon(1e-8));
  CHECK(r.summary.checks[0].name == "first_derivative_exponent");
  CHECK(r.summary.checks[0].value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.summary.checks[0].pass);

  // independent oracle: sample eta itself and difference it
  for (std::size_t i : {0u, 1u}) {
    const double t = num(r.rows[i][0]);
    const CutoffEta eta(t, 0.4, 0.2);
    double m1 = 0, m2 = 0;
    const int n = 40000;
    for (int k = 1; k < n; ++k) {
      const double r0 = std::pow(t, 0.4 + (0.2 - 0.4) * k / double(n));
      const double h = 1e-4 * r0;
      const double p = eta(r0 + h).v, c = eta(r0).v, q = eta(r0 - h).v;
      m1 = std::max(m1, std::abs(r0 * (p - q) / (2 * h)));
      m2 = std::max(m2, std::abs(r0 * r0 * (p - 2 * c + q) / (h * h)));
    }
    CHECK(num(r.rows[i][2]) == doctest::Approx(m1).epsilon(1e-4));
    CHECK(num(r.rows[i][3]) == doctest::Approx(m2).epsilon(1e-3));
  }
}

TEST_CASE("neck convergence on the exact cone is machine zero") {
  auto cfg = parse_config(json{{"experiment", "neck_convergence"},
                               {"model", "exact_cone_gluing"},
                               {"t_list", {0.1, 0.01}}});
  const auto r = run(cfg);
  CHECK(r.summary.pass);
  for (const auto& row : r.rows)
    for (std::size_t c = 1; c < row.size(); ++c)
      if (const double* v = std::get_if<double>(&row[c])) CHECK(*v < 1e-12);
}

TEST_CASE("experiment errors carry the failing t") {
  auto cfg = parse_config(json{{"experiment", "invertibility_uniformity"},
                               {"model", "capped_hyperboloid"},
                               {"t_list", {0.1}}});
  try {
    run(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::config);
    CHECK(std::string(e.what()).find("t=0.1") != std::string::npos);
  }
}
