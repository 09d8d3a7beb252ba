#include "conifold/experiments.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "conifold/benchmarks.hpp"
#include "conifold/error.hpp"
#include "conifold/parallel.hpp"
#include "conifold/spectral_laplace.hpp"
#include "conifold/weighted_calc.hpp"

namespace conifold {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::config, what); }

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("config field '") + key + "': " + e.what());
  }
}

EndKind parse_end_kind(const std::string& s) {
  if (s == "AC") return EndKind::AC;
  if (s == "CS") return EndKind::CS;
  config_error("end kind must be AC or CS, got '" + s + "'");
}

Shape parse_profile(const json& p) {
  if (p.is_string()) return shape_preset(p.get<std::string>());
  if (p.is_object() && p.contains("x") && p.contains("f"))
    return spline_profile(p.at("x").get<std::vector<double>>(),
                          p.at("f").get<std::vector<double>>());
  config_error("profile must be a preset name or {x, f} knots");
}

double column_value(const std::vector<Cell>& row, std::size_t c) {
  if (const double* d = std::get_if<double>(&row[c])) return *d;
  return std::nan("");
}

std::string format_cell(const Cell& c) {
  if (const std::string* s = std::get_if<std::string>(&c)) return *s;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", std::get<double>(c));
  return buf;
}

// Anchor the bump lattice on the host: a host end chart boundary, or the
// first host core node on compact models.
double host_anchor(const GluedModel& g, const RadialGrid& grid) {
  for (const Boundary* b : {&g.model.right, &g.model.left}) {
    if (!b->is_end() || b->marked) continue;
    const double x = b->anchor + b->dir * b->chart;
    if (g.model.region(x) == Region::end) return x;
  }
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.label[i] == Region::core) return grid.x[i];
  return grid.x[grid.size() / 2];
}

double host_beta(const ExperimentConfig& cfg, const GluedModel& g) {
  if (cfg.beta) return *cfg.beta;
  if (!g.host_betas.empty()) return g.host_betas.front();
  return kBenchmarkWeight;
}

SolverOptions solver_options(const ExperimentConfig& cfg) {
  SolverOptions opt;
  opt.max_eigenvalue = cfg.max_eigenvalue;
  opt.grid.nodes_per_region = cfg.nodes_per_region;
  opt.beta = cfg.beta;
  return opt;
}

using Row = std::vector<Cell>;

// One row per t, computed in parallel, each error tagged with its t.
template <class Fn>
std::vector<Row> sweep(const ExperimentConfig& cfg, Fn fn) {
  std::vector<Row> rows(cfg.t_list.size());
  parallel_for(cfg.t_list.size(), [&](std::size_t i) {
    const double t = cfg.t_list[i];
    try {
      rows[i] = fn(t);
    } catch (const Error& e) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "t=%g: ", t);
      throw Error(e.code(), buf + std::string(e.what()));
    }
  });
  return rows;
}

// max/min and trend of a positive per-t column.
void summarize(SweepResult& r, const std::string& metric, bool check_trend,
               const Tolerances& tol) {
  const auto c = static_cast<std::size_t>(
      std::find(r.columns.begin(), r.columns.end(), metric) - r.columns.begin());
  std::vector<double> lt, lv;
  r.summary.metric = metric;
  r.summary.max = -INFINITY;
  r.summary.min = INFINITY;
  for (const auto& row : r.rows) {
    const double v = column_value(row, c);
    r.summary.max = std::max(r.summary.max, v);
    r.summary.min = std::min(r.summary.min, v);
    lt.push_back(std::log(column_value(row, 0)));
    lv.push_back(std::log(v));
  }
  if (r.rows.empty()) return;
  r.summary.ratio = r.summary.max / r.summary.min;
  r.summary.trend_slope = lt.size() > 1 ? fitted_slope(lt, lv) : 0.0;
  r.summary.checks.push_back(
      {"max_min_ratio", r.summary.ratio, tol.ratio, r.summary.ratio <= tol.ratio});
  if (check_trend)
    r.summary.checks.push_back({"trend_slope", r.summary.trend_slope, tol.slope,
                                std::abs(r.summary.trend_slope) <= tol.slope});
}

double first_angular_eigenvalue(const Link& link) {
  for (double cap = 4.0;; cap *= 2.0) {
    const auto spec = link.eigenvalues_below(cap);
    if (spec.size() > 1) return spec[1].eigenvalue;
  }
}

double b2d(bool b) { return b ? 1.0 : 0.0; }

SweepResult run_sobolev_family(const ExperimentConfig& cfg, bool gns) {
  SweepResult r;
  r.columns = {"t", "members", "ratio", "argmax_x", "argmax_region"};
  r.rows = sweep(cfg, [&](double t) -> Row {
    const GluedModel g = glued_from_config(cfg, t);
    GridSpec gs;
    gs.nodes_per_region = cfg.nodes_per_region;
    NormContext ctx(g.model, gs);
    BumpOptions bo;
    bo.anchor_x = host_anchor(g, ctx.grid());
    // p != 2 norms take one mode at a time; p = 2 also probes the first angular mode
    if (cfg.p == 2.0) bo.eigenvalues = {0.0, first_angular_eigenvalue(g.model.link)};
    const auto family = bump_family(ctx, bo);
    const double beta = host_beta(cfg, g);
    const EmbeddingReport e = gns ? gns_constant_estimate(ctx, cfg.p, beta, family)
                                  : embedding_constant_estimate(ctx, cfg.p, beta, family);
    const Bump& arg = family.at(e.argmax);
    return {t, double(family.size()), e.max_ratio, arg.centre_x, std::string(to_string(arg.region))};
  });
  double members = INFINITY;
  for (const auto& row : r.rows) members = std::min(members, column_value(row, 1));
  if (!r.rows.empty())
    r.summary.checks.push_back(
        {"family_size", members, cfg.tol.min_members, members >= cfg.tol.min_members});
  summarize(r, "ratio", true, cfg.tol);
  return r;
}

SweepResult run_invertibility(const ExperimentConfig& cfg) {
  SweepResult r;
  r.columns = {"t", "sigma_min", "constant", "grid_size", "near_exceptional"};
  const SolverOptions opt = solver_options(cfg);
  r.rows = sweep(cfg, [&](double t) -> Row {
    const auto rep = invertibility_constant(glued_from_config(cfg, t), opt);
    return {t, rep.sigma_min, rep.constant, double(rep.grid_size), b2d(rep.near_exceptional)};
  });
  summarize(r, "constant", false, cfg.tol);
  return r;
}

SweepResult run_compact(const ExperimentConfig& cfg) {
  SweepResult r;
  r.columns = {"t",         "sigma_min", "constant", "unconstrained_sigma0",
               "threshold", "constants_detected", "grid_size"};
  const SolverOptions opt = solver_options(cfg);
  r.rows = sweep(cfg, [&](double t) -> Row {
    const auto rep = restricted_invertibility_compact(glued_from_config(cfg, t), opt);
    return {t,
            rep.sigma_min,
            rep.constant,
            rep.unconstrained_sigma0,
            rep.threshold,
            b2d(rep.constants_detected),
            double(rep.grid_size)};
  });
  double missed = 0;
  for (const auto& row : r.rows) missed += 1.0 - column_value(row, 5);
  r.summary.checks.push_back({"constants_missed", missed, 0.0, missed == 0.0});
  summarize(r, "constant", false, cfg.tol);
  return r;
}

SweepResult run_poincare(const ExperimentConfig& cfg) {
  SweepResult r;
  r.columns = {"t", "constant", "grid_size"};
  const SolverOptions opt = solver_options(cfg);
  r.rows = sweep(cfg, [&](double t) -> Row {
    const auto rep = poincare_constant(glued_from_config(cfg, t), opt);
    return {t, rep.constant, double(rep.grid_size)};
  });
  summarize(r, "constant", false, cfg.tol);
  return r;
}

SweepResult run_neck(const ExperimentConfig& cfg) {
  SweepResult r;
  r.columns = {"t", "sup_j0", "sup_j1", "sup_j2"};
  r.rows = sweep(cfg, [&](double t) -> Row {
    const auto rows = neck_convergence_check(glued_from_config(cfg, t), 2);
    Row out{t};
    for (const auto& n : rows) out.push_back(n.sup);
    return out;
  });
  const bool zero = cfg.expect_zero.value_or(cfg.model == "exact_cone_gluing" && !cfg.model_file);
  if (zero) {
    double worst = 0.0;
    for (const auto& row : r.rows)
      for (std::size_t c = 1; c < row.size(); ++c) worst = std::max(worst, column_value(row, c));
    r.summary.checks.push_back({"max_deviation", worst, cfg.tol.identity, worst <= cfg.tol.identity});
  } else {
    for (std::size_t c : {1u, 2u}) {
      double bad = 0;
      for (std::size_t i = 1; i < r.rows.size(); ++i)
        if (!(column_value(r.rows[i], c) < column_value(r.rows[i - 1], c))) bad += 1;
      r.summary.checks.push_back({"non_decreasing_steps_" + r.columns[c], bad, 0.0, bad == 0});
    }
  }
  r.summary.metric = "sup_j0";
  return r;
}

// max over r in [t^a, t^b] of |r eta'| and |r^2 eta''|.
std::pair<double, double> eta_maxima(double t, double a, double b) {
  const CutoffEta eta(t, a, b);
  const double lt = std::log(t);
  const int samples = 4000;
  std::pair<double, double> best{0.0, 0.0};
  for (int which = 0; which < 2; ++which) {
    auto value = [&](double s) {
      const Jet j = eta.scaled(std::exp(s * lt));
      return std::abs(which == 0 ? j.d1 : j.d2);
    };
    double arg = b, top = -1.0;
    for (int i = 0; i <= samples; ++i) {
      const double s = b + (a - b) * i / samples;
      if (const double v = value(s); v > top) top = v, arg = s;
    }
    const double step = (a - b) / samples;
    const auto res = boost::math::tools::brent_find_minima(
        [&](double s) { return -value(s); }, std::max(b, arg - step), std::min(a, arg + step), 52);
    (which == 0 ? best.first : best.second) = std::max(top, -res.second);
  }
  return best;
}

SweepResult run_eta(const ExperimentConfig& cfg) {
  SweepResult r;
  r.columns = {"t", "inv_abs_log_t", "max_r_deta", "max_r2_ddeta", "scaled_first"};
  r.rows = sweep(cfg, [&](double t) -> Row {
    const auto [d1, d2] = eta_maxima(t, cfg.glue.a, cfg.glue.b);
    const double inv = 1.0 / std::abs(std::log(t));
    return {t, inv, d1, d2, d1 / inv};
  });
  if (r.rows.size() >= 2) {
    std::vector<double> x, y1, y2;
    for (const auto& row : r.rows) {
      x.push_back(std::log(column_value(row, 1)));
      y1.push_back(std::log(column_value(row, 2)));
      y2.push_back(std::log(column_value(row, 3)));
    }
    const double s1 = fitted_slope(x, y1), s2 = fitted_slope(x, y2);
    r.summary.checks.push_back(
        {"first_derivative_exponent", s1, cfg.tol.slope, std::abs(s1 - 1.0) <= cfg.tol.slope});
    r.summary.checks.push_back(
        {"second_derivative_exponent", s2, cfg.tol.slope2, std::abs(s2 - 1.0) <= cfg.tol.slope2});
    r.summary.trend_slope = s1;
  }
  r.summary.metric = "max_r_deta";
  return r;
}

RadialModel plain_radial(const ExperimentConfig& cfg) {
  if (!cfg.model_file && is_glued_preset(cfg.model))
    return glued_from_config(cfg, cfg.t_list.front()).model;
  return to_radial(model_from_config(cfg));
}

SweepResult run_crossing(const ExperimentConfig& cfg) {
  SweepResult r;
  r.columns = {"gamma",    "eigenvalue", "solve_beta", "slope",    "slope_bound",
               "vanishes", "residual",   "threshold",  "slope_ok", "residual_ok"};
  const RadialModel model = plain_radial(cfg);
  std::vector<WeightCrossingCase> cases = cfg.crossings;
  if (cases.empty()) cases = {{0.0, 0.0}, {1.0, 2.0}, {2.0, 6.0}};
  CrossingOptions opt;
  opt.grid.nodes_per_region = cfg.nodes_per_region;
  r.rows.resize(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    const auto rep = weight_crossing_kernel(model, cases[i].gamma, cases[i].eigenvalue, opt);
    r.rows[i] = {cases[i].gamma,      cases[i].eigenvalue,
                 rep.solve_beta,      rep.slope,
                 rep.slope_bound,     b2d(rep.remainder_vanishes),
                 rep.residual,        rep.threshold,
                 b2d(rep.slope_ok),   b2d(rep.residual_ok)};
  });
  for (const auto& row : r.rows) {
    char tag[48];
    std::snprintf(tag, sizeof tag, "gamma=%g,e=%g", column_value(row, 0), column_value(row, 1));
    r.summary.checks.push_back({std::string("slope ") + tag, column_value(row, 3),
                                column_value(row, 4), column_value(row, 8) == 1.0});
    r.summary.checks.push_back({std::string("residual ") + tag, column_value(row, 6),
                                column_value(row, 7), column_value(row, 9) == 1.0});
  }
  return r;
}

std::string tri(const std::optional<bool>& b) { return b ? (*b ? "yes" : "no") : "unknown"; }

SweepResult run_atlas(const ExperimentConfig& cfg) {
  SweepResult r;
  r.columns = {"beta1", "beta2", "injective", "surjective", "index", "kernel_dim", "label"};
  ManifoldKind kind;
  std::vector<EndType> ends;
  const Link link = parse_link(cfg.link);
  if (link.dim() != cfg.m - 1) config_error("link dimension must be m - 1");
  if (cfg.kind == "AC") {
    kind = ManifoldKind::AC;
    ends = {{EndKind::AC, link}, {EndKind::AC, link}};
  } else if (cfg.kind == "CS") {
    kind = ManifoldKind::CS;
    ends = {{EndKind::CS, link}, {EndKind::CS, link}};
  } else if (cfg.kind == "CSAC") {
    kind = ManifoldKind::CSAC;
    ends = {{EndKind::CS, link}, {EndKind::AC, link}};
  } else {
    config_error("region kind must be AC, CS or CSAC");
  }
  const auto cells = static_cast<std::size_t>(std::llround((cfg.range_hi - cfg.range_lo) / cfg.grid_step));
  for (std::size_t i = 0; i < cells; ++i) {
    for (std::size_t j = 0; j < cells; ++j) {
      const double b1 = cfg.range_lo + (i + 0.5) * cfg.grid_step;
      const double b2 = cfg.range_lo + (j + 0.5) * cfg.grid_step;
      try {
        const RegionFacts f = classify_weight_region(kind, {b1, b2}, ends, cfg.m);
        std::string label = "fredholm";
        if (f.injective == true && f.surjective == true) label = "isomorphism";
        else if (f.injective == true) label = "injective";
        else if (f.surjective == true) label = "surjective";
        r.rows.push_back({b1, b2, tri(f.injective), tri(f.surjective),
                          f.index ? Cell(double(*f.index)) : Cell(std::string("unknown")),
                          f.kernel_dim ? Cell(double(*f.kernel_dim)) : Cell(std::string("unknown")),
                          label});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::exceptional_weight) throw;
        r.rows.push_back({b1, b2, std::string("unknown"), std::string("unknown"),
                          std::string("unknown"), std::string("unknown"), std::string("exceptional")});
      }
    }
  }
  // the chamber around (2-m)/2 on every end has index zero
  const double mid = 0.5 * (2.0 - cfg.m);
  const long idx = classify_weight_region(kind, {mid, mid}, ends, cfg.m).index.value_or(-1);
  r.summary.checks.push_back({"index_at_centre", double(std::labs(idx)), 0.0, idx == 0});
  return r;
}

// Sum of three Gaussians in the node index, seeded.
std::vector<double> random_profile(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> centre(0.0, double(n - 1)), width(0.02, 0.2),
      amp(-1.0, 1.0);
  std::vector<double> u(n, 0.0);
  for (int g = 0; g < 3; ++g) {
    const double c = centre(rng), w = width(rng) * n, a = amp(rng);
    for (std::size_t i = 0; i < n; ++i) u[i] += a * std::exp(-0.5 * std::pow((i - c) / w, 2));
  }
  return u;
}

SweepResult run_norm_identities(const ExperimentConfig& cfg) {
  SweepResult r;
  r.columns = {"case", "kind", "p", "k", "beta", "t", "value"};
  const RadialModel model = plain_radial(cfg);
  GridSpec gs;
  gs.nodes_per_region = std::min(cfg.nodes_per_region, 800);
  const RadialGrid grid = RadialGrid::build(model, gs);
  const std::size_t n = grid.size();
  const double e1 = first_angular_eigenvalue(model.link);

  std::vector<double> bump(n), decay(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (double(i) - 0.5 * n) / (0.15 * n);
    bump[i] = std::exp(-z * z);
    decay[i] = 1.0 / std::cosh(z) + 0.1 * std::sin(7.0 * i / n);
  }
  struct Case {
    const std::vector<double>* u;
    double e, p, t;
    int k;
    std::optional<double> beta;
  };
  const std::vector<Case> cases = {
      {&bump, 0.0, 2.0, 0.5, 0, -0.5},   {&bump, 0.0, 3.0, 1e-2, 1, 0.7},
      {&decay, 0.0, 1.5, 1e-3, 2, -1.3}, {&decay, e1, 2.0, 0.2, 1, 0.0},
      {&bump, e1, 2.0, 1e-4, 2, -2.5},   {&decay, 0.0, 4.0, 3e-1, 0, 1.5},
      {&bump, 0.0, 2.0, 1e-1, 1, {}},    {&decay, e1, 2.0, 1e-2, 2, {}},
      {&bump, 0.0, 1.5, 1e-3, 0, {}},    {&decay, 0.0, 3.0, 2e-2, 2, {}},
  };
  std::vector<Row> rows(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    const Case& c = cases[i];
    WeightSpec spec{c.p, c.k, c.beta, {}};
    // variable weights: rescale with the reference weight folded into w
    if (!c.beta) spec.beta_ref = -0.5;
    const double v = rescaling_invariance_check(ModeFunction::single(c.e, *c.u), model, grid, spec, c.t);
    rows[i] = {double(i), std::string(c.beta ? "rescale_constant" : "rescale_reference"), c.p,
               double(c.k), c.beta ? *c.beta : -0.5, c.t, v};
  });
  double worst = 0.0;
  for (auto& row : rows) {
    worst = std::max(worst, column_value(row, 6));
    r.rows.push_back(std::move(row));
  }
  r.summary.checks.push_back({"rescaling_max_error", worst, cfg.tol.identity, worst <= cfg.tol.identity});

  NormContext ctx(model, grid);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> pd(1.2, 4.0), bd(-2.0, 1.0);
  double violations = 0;
  for (int i = 0; i < 100; ++i) {
    const double p = pd(rng), b1 = bd(rng), b2 = bd(rng);
    const auto u = ModeFunction::single(0.0, random_profile(rng, n));
    const auto v = ModeFunction::single(0.0, random_profile(rng, n));
    const HolderReport h = holder_check(u, v, ctx, p, b1, b2);
    if (h.violated) violations += 1;
    r.rows.push_back({double(cases.size() + i), std::string("holder"), p, 0.0, b1 + b2, 1.0,
                      h.rhs > 0 ? h.lhs / h.rhs : 0.0});
  }
  r.summary.checks.push_back({"holder_violations", violations, 0.0, violations == 0});
  return r;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "embedding_uniformity", "invertibility_uniformity", "compact_invertibility",
      "poincare_uniformity",  "gns_uniformity",           "neck_convergence",
      "eta_bounds",           "weight_crossing",          "region_atlas",
      "norm_identities"};
  return names;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::invalid_argument, "slope fit needs two or more points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorCode::invalid_argument, "slope fit needs distinct abscissae");
  return sxy / sxx;
}

void validate(const ExperimentConfig& cfg) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    config_error("unknown experiment '" + cfg.experiment + "'");
  if (cfg.t_list.empty()) config_error("t_list is empty");
  for (std::size_t i = 0; i < cfg.t_list.size(); ++i) {
    const double t = cfg.t_list[i];
    if (!(t > 0.0 && t < 1.0)) config_error("t values must lie in (0, 1)");
    if (i > 0 && !(t < cfg.t_list[i - 1])) config_error("t_list must be strictly decreasing");
  }
  const Tolerances& tl = cfg.tol;
  for (double v : {tl.ratio, tl.identity, tl.slope, tl.slope2, tl.min_members})
    if (!(v > 0.0)) config_error("tolerances must be positive");
  if (!(cfg.p >= 1.0)) config_error("p must be at least 1");
  if (cfg.k < 0 || cfg.k > 2) config_error("k must be 0, 1 or 2");
  if (cfg.nodes_per_region < 16) config_error("nodes_per_region must be at least 16");
  if (!(cfg.grid_step > 0.0) || !(cfg.range_hi > cfg.range_lo))
    config_error("region grid needs a positive step and a non-empty range");
  for (const auto& f : cfg.emit)
    if (f != "csv" && f != "json" && f != "plotdata") config_error("unknown emit format '" + f + "'");
  if (!(0.0 < cfg.glue.b && cfg.glue.b < cfg.glue.a && cfg.glue.a < cfg.glue.tau &&
        cfg.glue.tau < 1.0))
    config_error("gluing parameters need 0 < b < a < tau < 1");
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  ExperimentConfig c;
  read(j, "experiment", c.experiment);
  read(j, "model", c.model);
  if (j.contains("model_file")) c.model_file = j.at("model_file").get<std::string>();
  read(j, "m", c.m);
  read(j, "t_list", c.t_list);
  read(j, "p", c.p);
  read(j, "k", c.k);
  if (j.contains("beta") && !j.at("beta").is_null()) c.beta = j.at("beta").get<double>();
  read(j, "tau", c.glue.tau);
  read(j, "a", c.glue.a);
  read(j, "b", c.glue.b);
  read(j, "nodes_per_region", c.nodes_per_region);
  read(j, "max_eigenvalue", c.max_eigenvalue);
  if (j.contains("tolerances")) {
    const json& t = j.at("tolerances");
    read(t, "ratio", c.tol.ratio);
    read(t, "identity", c.tol.identity);
    read(t, "slope", c.tol.slope);
    read(t, "slope2", c.tol.slope2);
    read(t, "min_members", c.tol.min_members);
  }
  if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  if (j.contains("emit")) {
    if (j.at("emit").is_string()) c.emit = {j.at("emit").get<std::string>()};
    else read(j, "emit", c.emit);
  }
  read(j, "seed", c.seed);
  read(j, "kind", c.kind);
  read(j, "link", c.link);
  read(j, "grid_step", c.grid_step);
  if (j.contains("range")) {
    const auto r = j.at("range").get<std::vector<double>>();
    if (r.size() != 2) config_error("range must be [lo, hi]");
    c.range_lo = r[0];
    c.range_hi = r[1];
  }
  if (j.contains("crossings"))
    for (const auto& x : j.at("crossings"))
      c.crossings.push_back({x.at("gamma").get<double>(), x.at("eigenvalue").get<double>()});
  if (j.contains("expect_zero")) c.expect_zero = j.at("expect_zero").get<bool>();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io_failure, "cannot read " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_input, file.string() + ": " + e.what());
  }
  ExperimentConfig c = parse_config(j);
  if (c.model_file && c.model_file->is_relative())
    c.model_file = file.parent_path() / *c.model_file;
  return c;
}

ConifoldModel model_from_json(const json& j) {
  try {
    ConifoldModel model;
    model.m = j.value("m", 3);
    model.name = j.value("name", std::string("custom"));
    for (const auto& cj : j.at("components")) {
      Component comp;
      comp.shape = parse_profile(cj.at("profile"));
      std::optional<Link> link;
      if (cj.contains("link")) link = parse_link(cj.at("link").get<std::string>());
      for (const auto& ej : cj.value("ends", json::array())) {
        EndSpec e;
        e.kind = parse_end_kind(ej.at("kind").get<std::string>());
        e.nu = ej.value("nu", e.kind == EndKind::AC ? -2.0 : 2.0);
        e.beta = ej.value("beta", -0.5);
        e.boundary = ej.value("boundary", 1.0);
        e.marked = ej.value("marked", false);
        if (ej.contains("link")) {
          Link l = parse_link(ej.at("link").get<std::string>());
          if (link && !link->same_cone(l))
            throw Error(ErrorCode::link_mismatch, "ends of one component need the same link");
          link = l;
        }
        comp.ends.push_back(e);
      }
      comp.link = link.value_or(Link::sphere(model.m - 1));
      model.components.push_back(std::move(comp));
    }
    validate(model);
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_input, std::string("model file: ") + e.what());
  }
}

namespace {

json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::io_failure, "cannot read " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_input, file.string() + ": " + e.what());
  }
}

}  // namespace

ConifoldModel model_from_config(const ExperimentConfig& cfg) {
  if (!cfg.model_file) return model_preset(cfg.model, cfg.m);
  const json j = read_json_file(*cfg.model_file);
  if (j.contains("host")) config_error("model file describes a gluing, not a single model");
  return model_from_json(j);
}

GluedModel glued_from_config(const ExperimentConfig& cfg, double t) {
  if (!cfg.model_file) {
    if (!is_glued_preset(cfg.model))
      config_error("experiment '" + cfg.experiment + "' needs a glued model, got '" + cfg.model + "'");
    return glued_preset(cfg.model, t, cfg.glue);
  }
  const json j = read_json_file(*cfg.model_file);
  if (!j.contains("host") || !j.contains("partner"))
    config_error("glued model files need 'host' and 'partner'");
  const ConifoldModel host = model_from_json(j.at("host"));
  const ConifoldModel hat = model_from_json(j.at("partner"));
  GlueParams gp = cfg.glue;
  gp.tau = j.value("tau", gp.tau);
  gp.a = j.value("a", gp.a);
  gp.b = j.value("b", gp.b);
  std::size_t pairs = 0;
  for (const auto& c : hat.components)
    for (const auto& e : c.ends) pairs += e.marked;
  return parametric_connect_sum(host, hat, std::vector<double>(pairs, t), gp);
}

SweepResult run(const ExperimentConfig& cfg) {
  validate(cfg);
  SweepResult r;
  const std::string& x = cfg.experiment;
  if (x == "embedding_uniformity") r = run_sobolev_family(cfg, false);
  else if (x == "gns_uniformity") r = run_sobolev_family(cfg, true);
  else if (x == "invertibility_uniformity") r = run_invertibility(cfg);
  else if (x == "compact_invertibility") r = run_compact(cfg);
  else if (x == "poincare_uniformity") r = run_poincare(cfg);
  else if (x == "neck_convergence") r = run_neck(cfg);
  else if (x == "eta_bounds") r = run_eta(cfg);
  else if (x == "weight_crossing") r = run_crossing(cfg);
  else if (x == "region_atlas") r = run_atlas(cfg);
  else if (x == "norm_identities") r = run_norm_identities(cfg);
  r.experiment = x;
  r.model = x == "eta_bounds"     ? std::string("none")
            : x == "region_atlas" ? cfg.kind + ":" + cfg.link
            : cfg.model_file      ? cfg.model_file->filename().string()
                                  : cfg.model;
  r.seed = cfg.seed;
  r.summary.pass = std::all_of(r.summary.checks.begin(), r.summary.checks.end(),
                               [](const Check& c) { return c.pass; });
  return r;
}

std::string to_csv(const SweepResult& result) {
  std::ostringstream out;
  for (std::size_t c = 0; c < result.columns.size(); ++c)
    out << (c ? "," : "") << result.columns[c];
  out << '\n';
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_cell(row[c]);
    out << '\n';
  }
  return out.str();
}

json to_json(const SweepResult& result) {
  json rows = json::array();
  for (const auto& row : result.rows) {
    json jr = json::array();
    for (const auto& c : row) {
      if (const double* d = std::get_if<double>(&c)) jr.push_back(*d);
      else jr.push_back(std::get<std::string>(c));
    }
    rows.push_back(std::move(jr));
  }
  json checks = json::array();
  for (const auto& c : result.summary.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"bound", c.bound}, {"pass", c.pass}});
  const Summary& s = result.summary;
  return {{"experiment", result.experiment},
          {"model", result.model},
          {"seed", result.seed},
          {"columns", result.columns},
          {"rows", rows},
          {"summary",
           {{"metric", s.metric},
            {"max", s.max},
            {"min", s.min},
            {"ratio", s.ratio},
            {"trend_slope", s.trend_slope},
            {"pass", s.pass},
            {"checks", checks}}}};
}

SweepResult result_from_json(const json& j) {
  auto num = [](const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
  try {
    SweepResult r;
    r.experiment = j.at("experiment").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& jr : j.at("rows")) {
      Row row;
      for (const auto& c : jr) {
        if (c.is_string()) row.emplace_back(c.get<std::string>());
        else row.emplace_back(num(c));
      }
      r.rows.push_back(std::move(row));
    }
    const json& s = j.at("summary");
    r.summary.metric = s.at("metric").get<std::string>();
    r.summary.max = num(s.at("max"));
    r.summary.min = num(s.at("min"));
    r.summary.ratio = num(s.at("ratio"));
    r.summary.trend_slope = num(s.at("trend_slope"));
    r.summary.pass = s.at("pass").get<bool>();
    for (const auto& c : s.at("checks"))
      r.summary.checks.push_back({c.at("name").get<std::string>(), num(c.at("value")),
                                  num(c.at("bound")), c.at("pass").get<bool>()});
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::malformed_input, std::string("result JSON: ") + e.what());
  }
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io_failure, "write failed for " + path.string());
}

std::vector<std::pair<std::string, std::string>> plot_curves(const SweepResult& r) {
  std::vector<std::pair<std::string, std::string>> curves;
  if (r.columns.empty()) return curves;
  if (r.experiment == "region_atlas") {
    // one point cloud per label
    std::map<std::string, std::ostringstream> by_label;
    for (const char* l : {"isomorphism", "injective", "surjective", "fredholm", "exceptional"})
      by_label[l] << "# beta1 beta2\n";
    for (const auto& row : r.rows)
      by_label[std::get<std::string>(row.back())]
          << format_cell(row[0]) << ' ' << format_cell(row[1]) << '\n';
    for (auto& [label, text] : by_label) curves.emplace_back(label, text.str());
    return curves;
  }
  for (std::size_t c = 1; c < r.columns.size(); ++c) {
    std::ostringstream text;
    text << "# " << r.columns[0] << ' ' << r.columns[c] << '\n';
    bool numeric = true;
    for (const auto& row : r.rows) {
      if (!std::holds_alternative<double>(row[c]) || !std::holds_alternative<double>(row[0])) {
        numeric = false;
        break;
      }
      text << format_cell(row[0]) << ' ' << format_cell(row[c]) << '\n';
    }
    if (numeric) curves.emplace_back(r.columns[c], text.str());
  }
  return curves;
}

}  // namespace

std::vector<std::filesystem::path> emit(const SweepResult& result, const std::string& format,
                                        const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_failure, "cannot create " + dir.string() + ": " + ec.message());
  const std::string stem = result.experiment.empty() ? "result" : result.experiment;
  std::vector<std::filesystem::path> written;
  if (format == "csv") {
    written.push_back(dir / (stem + ".csv"));
    write_file(written.back(), to_csv(result));
  } else if (format == "json") {
    written.push_back(dir / (stem + ".json"));
    write_file(written.back(), to_json(result).dump(2) + "\n");
  } else if (format == "plotdata") {
    for (const auto& [name, text] : plot_curves(result)) {
      written.push_back(dir / (stem + "_" + name + ".dat"));
      write_file(written.back(), text);
    }
  } else {
    throw Error(ErrorCode::config, "unknown emit format '" + format + "'");
  }
  return written;
}

}  // namespace conifold
