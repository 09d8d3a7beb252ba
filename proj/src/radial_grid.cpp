#include "conifold/radial_grid.hpp"

#include <algorithm>
#include <cmath>

#include "conifold/error.hpp"

namespace conifold {

namespace {

constexpr double kMarchStep = 1e-3;  // xi step of the calibration march

double rk4(const std::function<Jet(double)>& sp, double x, double d) {
  const double k1 = sp(x).v;
  const double k2 = sp(x + 0.5 * d * k1).v;
  const double k3 = sp(x + 0.5 * d * k2).v;
  const double k4 = sp(x + d * k3).v;
  return x + d * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
}

double truncation(const Boundary& b, double domain_end, const GridSpec& spec) {
  switch (b.type) {
    case SideType::end:
      return b.anchor + b.dir * (b.kind == EndKind::AC ? spec.r_max : spec.r_min);
    case SideType::cap:
    case SideType::cut:
    case SideType::periodic:
      break;
  }
  if (!std::isfinite(domain_end))
    throw Error(ErrorCode::invalid_argument, "non-end side must have a finite coordinate");
  return domain_end;
}

}  // namespace

RadialGrid RadialGrid::build(const RadialModel& model, const GridSpec& spec) {
  if (spec.nodes_per_region < 8)
    throw Error(ErrorCode::invalid_argument, "need at least 8 nodes per region");
  const double x0 = model.periodic ? model.lo : truncation(model.left, model.lo, spec);
  const double x1 = model.periodic ? model.hi : truncation(model.right, model.hi, spec);
  if (!(x0 < x1)) throw Error(ErrorCode::invalid_argument, "grid truncation leaves an empty domain");
  if (x0 < model.lo || x1 > model.hi)
    throw Error(ErrorCode::invalid_argument, "grid truncation lies outside the model domain");
  const auto& sp = model.spacing;

  // calibration march: total xi-length and the number of region runs
  double x = x0, xi = 0.0;
  std::vector<Region> runs{model.region(x0)};
  while (true) {
    double nx = rk4(sp, x, kMarchStep);
    if (nx >= x1) {
      // finish with Simpson on dxi/dx = 1/s over the short remainder
      const double mid = 0.5 * (x + x1);
      xi += (x1 - x) / 6.0 * (1.0 / sp(x).v + 4.0 / sp(mid).v + 1.0 / sp(x1).v);
      break;
    }
    x = nx;
    xi += kMarchStep;
    Region r = model.region(x);
    if (r != runs.back()) runs.push_back(r);
  }
  std::size_t n_runs = runs.size();
  if (model.periodic && n_runs > 1 && runs.front() == runs.back()) --n_runs;

  RadialGrid g;
  g.periodic = model.periodic;
  g.period = model.periodic ? x1 - x0 : 0.0;
  const std::size_t cells = static_cast<std::size_t>(spec.nodes_per_region) * n_runs;
  const std::size_t n = model.periodic ? cells : cells + 1;
  g.h = xi / static_cast<double>(cells);
  int sub = std::max(2, static_cast<int>(std::ceil(g.h / kMarchStep)));
  if (sub % 2) ++sub;
  const double d = g.h / sub;

  g.x.resize(n);
  g.x_half.resize(model.periodic ? n : n - 1);
  x = x0;
  for (std::size_t i = 0; i < n; ++i) {
    g.x[i] = x;
    if (i + 1 == n && !model.periodic) break;
    for (int k = 0; k < sub; ++k) {
      x = rk4(sp, x, d);
      if (k + 1 == sub / 2) g.x_half[i] = x;
    }
  }
  if (!model.periodic) g.x.back() = x1;

  g.s.resize(n);
  g.ds.resize(n);
  g.w.resize(n);
  g.label.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Jet j = sp(g.x[i]);
    g.s[i] = j.v;
    g.ds[i] = j.d1;
    g.w[i] = g.h * j.v;
    g.label[i] = model.region(g.x[i]);
  }
  if (!model.periodic) {
    g.w.front() *= 0.5;
    g.w.back() *= 0.5;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (g.regions.empty() || g.regions.back().region != g.label[i])
      g.regions.push_back({g.label[i], i, i + 1});
    else
      g.regions.back().end = i + 1;
  }
  return g;
}

RadialGrid RadialGrid::rescaled(double t) const {
  if (!(t > 0)) throw Error(ErrorCode::invalid_argument, "rescaling factor must be > 0");
  RadialGrid g = *this;
  g.period *= t;
  for (auto& v : g.x) v *= t;
  for (auto& v : g.x_half) v *= t;
  for (auto& v : g.s) v *= t;
  for (auto& v : g.w) v *= t;
  return g;
}

GridGeometry sample_geometry(const RadialModel& model, const RadialGrid& grid) {
  GridGeometry geo;
  const std::size_t n = grid.size();
  geo.f.resize(n);
  geo.df.resize(n);
  geo.ddf.resize(n);
  geo.rho.resize(n);
  geo.log_w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.x[i];
    Warp w = model.warp(x);
    geo.f[i] = w.f;
    geo.df[i] = w.df;
    geo.ddf[i] = w.ddf;
    geo.rho[i] = model.rho(x);
    geo.log_w[i] = model.log_weight(x);
    if (!(geo.rho[i] > 0)) throw Error(ErrorCode::invalid_argument, "radius function must be > 0");
  }
  return geo;
}

DerivativeOps derivative_ops(const RadialGrid& g) {
  const auto n = static_cast<Eigen::Index>(g.size());
  using T = Eigen::Triplet<double>;
  std::vector<T> t1, t2;
  t1.reserve(4 * n);
  t2.reserve(5 * n);
  const double h = g.h;
  auto idx = [&](Eigen::Index i) { return g.periodic ? (i % n + n) % n : i; };
  for (Eigen::Index i = 0; i < n; ++i) {
    // xi-derivative stencils as (offset, coefficient) pairs
    std::vector<std::pair<int, double>> a, b;
    if (g.periodic || (i > 0 && i + 1 < n)) {
      a = {{-1, -0.5 / h}, {1, 0.5 / h}};
      b = {{-1, 1 / (h * h)}, {0, -2 / (h * h)}, {1, 1 / (h * h)}};
    } else if (i == 0) {
      a = {{0, -1.5 / h}, {1, 2 / h}, {2, -0.5 / h}};
      b = {{0, 2 / (h * h)}, {1, -5 / (h * h)}, {2, 4 / (h * h)}, {3, -1 / (h * h)}};
    } else {
      a = {{0, 1.5 / h}, {-1, -2 / h}, {-2, 0.5 / h}};
      b = {{0, 2 / (h * h)}, {-1, -5 / (h * h)}, {-2, 4 / (h * h)}, {-3, -1 / (h * h)}};
    }
    const double s = g.s[i], sp = g.ds[i];
    for (auto [o, c] : a) {
      t1.emplace_back(i, idx(i + o), c / s);
      t2.emplace_back(i, idx(i + o), -sp * c / (s * s));
    }
    for (auto [o, c] : b) t2.emplace_back(i, idx(i + o), c / (s * s));
  }
  DerivativeOps ops;
  ops.d1.resize(n, n);
  ops.d2.resize(n, n);
  ops.d1.setFromTriplets(t1.begin(), t1.end());
  ops.d2.setFromTriplets(t2.begin(), t2.end());
  return ops;
}

}  // namespace conifold
