#include "conifold/weighted_calc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conifold/error.hpp"
#include "conifold/weight_calculus.hpp"

namespace conifold {

ModeFunction ModeFunction::single(double eigenvalue, std::vector<double> profile) {
  ModeFunction u;
  u.modes.push_back({eigenvalue, std::move(profile)});
  return u;
}

ModeFunction ModeFunction::constant(const Link& link, std::size_t nodes, double value) {
  return single(0.0, std::vector<double>(nodes, value * std::sqrt(link.volume())));
}

ModeFunction ModeFunction::scaled(double c) const {
  ModeFunction out = *this;
  for (auto& m : out.modes)
    for (auto& v : m.profile) v *= c;
  return out;
}

NormContext::NormContext(RadialModel model, RadialGrid grid)
    : model_(std::move(model)), grid_(std::move(grid)) {
  geo_ = sample_geometry(model_, grid_);
  ops_ = derivative_ops(grid_);
}

NormContext::NormContext(RadialModel model, const GridSpec& spec)
    : NormContext(model, RadialGrid::build(model, spec)) {}

double NormContext::log_weight(std::size_t i, std::optional<double> beta) const {
  return beta ? -*beta * std::log(geo_.rho[i]) : geo_.log_w[i];
}

HessianCoefficients hessian_coefficients(double e, double f, double df, int m, double einstein) {
  const double f2 = f * f, f4 = f2 * f2;
  return {2.0 * e * df * df / f4 + (e * e - einstein * e) / f4, -3.0 * e * df / (f2 * f),
          2.0 * e / f2 + (m - 1.0) * df * df / f2};
}

namespace {

struct Derivs {
  Eigen::VectorXd u, ux, uxx;
};

Derivs derivs(const ModeComponent& c, const NormContext& ctx, int k) {
  const std::size_t n = ctx.grid().size();
  if (c.profile.size() != n)
    throw Error(ErrorCode::invalid_argument, "mode profile does not match the grid");
  Derivs d;
  d.u = Eigen::Map<const Eigen::VectorXd>(c.profile.data(), static_cast<Eigen::Index>(n));
  if (!d.u.allFinite()) throw Error(ErrorCode::invalid_argument, "profile has non-finite values");
  if (k >= 1) d.ux = ctx.ops().d1 * d.u;
  if (k >= 2) d.uxx = ctx.ops().d2 * d.u;
  return d;
}

void check_mode_rules(const ModeFunction& u, double p, int k) {
  if (k < 0 || k > 2) throw Error(ErrorCode::invalid_argument, "derivative depth k must be 0, 1 or 2");
  if (!(p >= 1.0)) throw Error(ErrorCode::invalid_argument, "p must be >= 1");
  if (u.modes.empty()) throw Error(ErrorCode::invalid_argument, "mode function has no modes");
  if (p != 2.0) {
    if (u.modes.size() != 1)
      throw Error(ErrorCode::invalid_argument, "p != 2 norms need a single-mode function");
    if (k >= 1 && u.modes[0].eigenvalue != 0.0)
      throw Error(ErrorCode::invalid_argument, "p != 2 with derivatives needs a mode-0 function");
  }
}

// Per-node contributions to ||u||^p, already multiplied by the quadrature weight.
std::vector<double> integrand(const ModeFunction& u, const NormContext& ctx, double p, int j_lo,
                              int j_hi, std::optional<double> beta) {
  check_mode_rules(u, p, j_hi);
  const auto& g = ctx.grid();
  const auto& geo = ctx.geometry();
  const auto& link = ctx.model().link;
  const int m = ctx.model().m;
  const double ric = link.einstein_constant();
  const std::size_t n = g.size();
  std::vector<Derivs> d;
  for (const auto& c : u.modes) d.push_back(derivs(c, ctx, j_hi));
  std::vector<double> moment;
  if (p != 2.0) {
    moment.push_back(link.eigenfunction_moment(u.modes[0].eigenvalue, p));
  }
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = geo.f[i];
    if (!(f > 0) || g.w[i] == 0.0) continue;  // cone tip or cap centre
    const double lr = std::log(geo.rho[i]);
    const double base = std::log(g.w[i]) + (m - 1) * std::log(f) - m * lr;
    const double lw = ctx.log_weight(i, beta);
    const auto ii = static_cast<Eigen::Index>(i);
    double total = 0.0;
    for (int j = j_lo; j <= j_hi; ++j) {
      double q = 0.0;  // link-integrated |nabla^j u|^p
      if (p == 2.0) {
        for (std::size_t c = 0; c < u.modes.size(); ++c) {
          const double e = u.modes[c].eigenvalue;
          const double v = d[c].u[ii];
          if (j == 0) q += v * v;
          if (j == 1) q += d[c].ux[ii] * d[c].ux[ii] + e * v * v / (f * f);
          if (j == 2) {
            auto hc = hessian_coefficients(e, f, geo.df[i], m, ric);
            const double vx = d[c].ux[ii], vxx = d[c].uxx[ii];
            q += vxx * vxx + hc.xx * vx * vx + 2 * hc.ux * v * vx + hc.uu * v * v;
          }
        }
      } else {
        const auto& dd = d[0];
        double radial = 0.0;
        if (j == 0) radial = std::abs(dd.u[ii]);
        if (j == 1) radial = std::abs(dd.ux[ii]);
        if (j == 2) {
          const double c1 = geo.df[i] / f;
          radial = std::sqrt(dd.uxx[ii] * dd.uxx[ii] + (m - 1) * c1 * c1 * dd.ux[ii] * dd.ux[ii]);
        }
        q = std::pow(radial, p) * moment[0];
      }
      if (q == 0.0) continue;
      total += std::exp(base + p * (lw + j * lr)) * q;
    }
    out[i] = total;
  }
  return out;
}

struct TailResult {
  double tail = 0.0;
  bool divergent = false;
};

// Extrapolate the integrand past an end truncation from its slope in xi.
TailResult tail_at(const std::vector<double>& I, const NormContext& ctx, bool right_side) {
  const auto& g = ctx.grid();
  const auto& b = right_side ? ctx.model().right : ctx.model().left;
  TailResult res;
  if (g.periodic || !b.is_end()) return res;
  const std::size_t n = g.size();
  const std::size_t window = std::max<std::size_t>(6, n / 40);
  if (window + 1 >= n) return res;
  double total = 0.0;
  for (double v : I) total += v;
  // density per unit xi, outward-ordered
  std::vector<double> dens, xi;
  for (std::size_t k = 1; k <= window; ++k) {
    const std::size_t i = right_side ? n - 1 - k : k;
    const double full = g.h * g.s[i];
    if (I[i] <= 0.0) return res;  // vanishes near the truncation
    dens.push_back(std::log(I[i] * g.s[i] / g.w[i] * (g.w[i] / full)));
    xi.push_back(-static_cast<double>(k) * g.h);
  }
  // least-squares slope of log-density against outward xi
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < dens.size(); ++k) {
    mx += xi[k];
    my += dens[k];
  }
  mx /= dens.size();
  my /= dens.size();
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < dens.size(); ++k) {
    sxx += (xi[k] - mx) * (xi[k] - mx);
    sxy += (xi[k] - mx) * (dens[k] - my);
  }
  const double slope = sxy / sxx;
  const double at_edge = std::exp(my - slope * mx);  // extrapolated to xi = 0
  if (slope < -1e-8) {
    res.tail = at_edge / -slope;
  } else if (at_edge > 1e-14 * total) {
    res.divergent = true;
    res.tail = std::numeric_limits<double>::infinity();
  }
  return res;
}

NormReport finish(const std::vector<double>& I, const NormContext& ctx, double p) {
  double total = 0.0;
  for (double v : I) total += v;
  NormReport r;
  r.value = std::pow(total, 1.0 / p);
  TailResult a = tail_at(I, ctx, false), b = tail_at(I, ctx, true);
  r.tail_flag = a.divergent || b.divergent;
  r.value_with_tail = std::pow(total + a.tail + b.tail, 1.0 / p);
  return r;
}

}  // namespace

NormReport weighted_sobolev_norm(const ModeFunction& u, const NormContext& ctx,
                                 const WeightSpec& spec) {
  return finish(integrand(u, ctx, spec.p, 0, spec.k, spec.beta), ctx, spec.p);
}

NormReport weighted_gradient_norm(const ModeFunction& u, const NormContext& ctx, double p,
                                  std::optional<double> beta) {
  return finish(integrand(u, ctx, p, 1, 1, beta), ctx, p);
}

CkReport weighted_ck_norm(const ModeFunction& u, const NormContext& ctx, int k,
                          std::optional<double> beta) {
  if (k < 0 || k > 2) throw Error(ErrorCode::invalid_argument, "derivative depth k must be 0, 1 or 2");
  if (u.modes.size() != 1) throw Error(ErrorCode::invalid_argument, "C^k norms need a single mode");
  const double e = u.modes[0].eigenvalue;
  if (k >= 1 && e != 0.0)
    throw Error(ErrorCode::invalid_argument, "C^k norms with derivatives need a mode-0 function");
  const auto& g = ctx.grid();
  const auto& geo = ctx.geometry();
  const int m = ctx.model().m;
  const double sup_sigma = ctx.model().link.eigenfunction_sup(e);
  Derivs d = derivs(u.modes[0], ctx, k);
  const std::size_t n = g.size();
  std::vector<double> term(n, 0.0);
  CkReport rep;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = geo.f[i];
    if (!(f > 0)) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    const double lw = ctx.log_weight(i, beta), lr = std::log(geo.rho[i]);
    double t = std::exp(lw) * std::abs(d.u[ii]);
    if (k >= 1) t += std::exp(lw + lr) * std::abs(d.ux[ii]);
    if (k >= 2) {
      const double c1 = geo.df[i] / f;
      t += std::exp(lw + 2 * lr) *
           std::sqrt(d.uxx[ii] * d.uxx[ii] + (m - 1) * c1 * c1 * d.ux[ii] * d.ux[ii]);
    }
    term[i] = t * sup_sigma;
    rep.value = std::max(rep.value, term[i]);
  }
  // growth towards an end truncation means the sup is truncation-dependent
  for (bool right : {false, true}) {
    const auto& b = right ? ctx.model().right : ctx.model().left;
    if (g.periodic || !b.is_end()) continue;
    const std::size_t window = std::max<std::size_t>(6, n / 40);
    const std::size_t i_edge = right ? n - 2 : 1;
    const std::size_t i_in = right ? n - 2 - window : 1 + window;
    if (term[i_edge] <= 0 || term[i_in] <= 0) continue;
    const double slope = std::log(term[i_edge] / term[i_in]) / (window * g.h);
    if (slope > 1e-3) rep.divergent = true;
  }
  return rep;
}

double rescaling_invariance_check(const ModeFunction& u, const RadialModel& model,
                                  const RadialGrid& grid, const WeightSpec& spec, double t) {
  NormContext base(model, grid);
  const double n0 = weighted_sobolev_norm(u, base, spec).value;
  if (n0 == 0.0) return 0.0;
  double ref;
  RadialModel scaled_model;
  if (spec.beta) {
    ref = *spec.beta;  // constant weight: w = (t rho)^-beta
    scaled_model = rescale(model, t);
  } else {
    if (!spec.beta_ref)
      throw Error(ErrorCode::invalid_argument, "variable weights need a reference weight");
    ref = *spec.beta_ref;
    scaled_model = rescale(model, t, ref);
  }
  NormContext scaled(scaled_model, grid.rescaled(t));
  const double n1 = weighted_sobolev_norm(u, scaled, spec).value;
  return std::abs(std::pow(t, ref) * n1 - n0) / n0;
}

ModeFunction product(const ModeFunction& u, const ModeFunction& v, const Link& link) {
  if (u.modes.size() != 1 || v.modes.size() != 1 || u.modes[0].eigenvalue != 0.0 ||
      v.modes[0].eigenvalue != 0.0)
    throw Error(ErrorCode::invalid_argument, "pointwise products need mode-0 functions");
  const auto& a = u.modes[0].profile;
  const auto& b = v.modes[0].profile;
  if (a.size() != b.size()) throw Error(ErrorCode::invalid_argument, "profiles differ in length");
  const double sigma0 = 1.0 / std::sqrt(link.volume());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i] * sigma0;
  return ModeFunction::single(0.0, std::move(out));
}

HolderReport holder_check(const ModeFunction& u, const ModeFunction& v, const NormContext& ctx,
                          double p, double beta1, double beta2) {
  if (!(p > 1.0)) throw Error(ErrorCode::invalid_argument, "Hölder check needs p > 1");
  const double q = p / (p - 1.0);
  const auto& link = ctx.model().link;
  HolderReport r;
  r.lhs = weighted_sobolev_norm(product(u, v, link), ctx, {1.0, 0, beta1 + beta2, {}}).value;
  r.rhs = weighted_sobolev_norm(u, ctx, {p, 0, beta1, {}}).value *
          weighted_sobolev_norm(v, ctx, {q, 0, beta2, {}}).value;
  r.violated = r.lhs > r.rhs * (1.0 + 1e-10);
  return r;
}

BanachReport banach_algebra_check(const ModeFunction& u, const ModeFunction& v,
                                  const NormContext& ctx, double p, double beta1, double beta2) {
  const int m = ctx.model().m;
  if (!(2.0 * p > m))
    throw Error(ErrorCode::invalid_argument, "Banach algebra check needs l p > m with l = 2");
  const auto& link = ctx.model().link;
  BanachReport r;
  r.lhs = weighted_sobolev_norm(product(u, v, link), ctx, {p, 2, beta1 + beta2, {}}).value;
  const double nu = weighted_sobolev_norm(u, ctx, {p, 2, beta1, {}}).value;
  const double nv = weighted_sobolev_norm(v, ctx, {p, 2, beta2, {}}).value;
  r.rhs_ratio = r.lhs == 0.0 ? 0.0 : r.lhs / (nu * nv);
  return r;
}

std::vector<Bump> bump_family(const NormContext& ctx, const BumpOptions& opt) {
  if (!(opt.spacing > 0 && opt.half_width > 0) || opt.eigenvalues.empty())
    throw Error(ErrorCode::invalid_argument, "bump family needs positive spacing and width");
  const auto& g = ctx.grid();
  const std::size_t n = g.size();
  // xi of the anchor, by linear interpolation between nodes
  double xi_anchor = 0.0;
  if (opt.anchor_x <= g.x.front()) {
    xi_anchor = 0.0;
  } else if (opt.anchor_x >= g.x.back()) {
    xi_anchor = (n - 1) * g.h;
  } else {
    auto it = std::upper_bound(g.x.begin(), g.x.end(), opt.anchor_x);
    const std::size_t i = static_cast<std::size_t>(it - g.x.begin()) - 1;
    xi_anchor = g.h * (i + (opt.anchor_x - g.x[i]) / (g.x[i + 1] - g.x[i]));
  }
  const double xi_max = (g.periodic ? n : n - 1) * g.h;
  const double margin = opt.half_width + 2 * g.h;
  std::vector<Bump> family;
  const long k_lo = static_cast<long>(std::ceil((margin - xi_anchor) / opt.spacing));
  const long k_hi = static_cast<long>(std::floor((xi_max - margin - xi_anchor) / opt.spacing));
  for (long k = k_lo; k <= k_hi; ++k) {
    const double c = xi_anchor + k * opt.spacing;
    std::vector<double> prof(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double z = (i * g.h - c) / opt.half_width;
      if (std::abs(z) < 1.0) prof[i] = std::exp(1.0 - 1.0 / (1.0 - z * z));
    }
    const std::size_t ic = std::min(n - 1, static_cast<std::size_t>(std::lround(c / g.h)));
    for (double e : opt.eigenvalues)
      family.push_back({c, g.x[ic], g.label[ic], ModeFunction::single(e, prof)});
  }
  return family;
}

namespace {

EmbeddingReport family_max(const NormContext& ctx, double p, double beta,
                           const std::vector<Bump>& family, bool gradient_only) {
  if (family.empty()) throw Error(ErrorCode::invalid_argument, "empty test family");
  const auto ex = conjugate_exponents(p, ctx.model().m, 1);
  if (!ex.p_star) throw Error(ErrorCode::invalid_argument, "embedding needs p < m");
  EmbeddingReport rep;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& u = family[i].u;
    const double top = weighted_sobolev_norm(u, ctx, {*ex.p_star, 0, beta, {}}).value;
    const double bottom = gradient_only ? weighted_gradient_norm(u, ctx, p, beta).value
                                        : weighted_sobolev_norm(u, ctx, {p, 1, beta, {}}).value;
    if (!(bottom > 0)) throw Error(ErrorCode::invalid_argument, "test function with zero norm");
    rep.ratios.push_back(top / bottom);
    if (rep.ratios.back() > rep.max_ratio) {
      rep.max_ratio = rep.ratios.back();
      rep.argmax = i;
    }
  }
  return rep;
}

}  // namespace

EmbeddingReport embedding_constant_estimate(const NormContext& ctx, double p, double beta,
                                            const std::vector<Bump>& family) {
  return family_max(ctx, p, beta, family, false);
}

EmbeddingReport gns_constant_estimate(const NormContext& ctx, double p, double beta,
                                      const std::vector<Bump>& family) {
  return family_max(ctx, p, beta, family, true);
}

}  // namespace conifold
