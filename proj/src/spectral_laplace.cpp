#include "conifold/spectral_laplace.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "conifold/error.hpp"
#include "conifold/parallel.hpp"
#include "conifold/weight_calculus.hpp"

namespace conifold {

const char* to_string(Closure c) {
  switch (c) {
    case Closure::free: return "free";
    case Closure::dirichlet: return "dirichlet";
    case Closure::neumann: return "neumann";
    case Closure::robin: return "robin";
    case Closure::periodic: return "periodic";
  }
  return "?";
}

EndClosure admissible_closure(const Boundary& b, double e, int m, double beta) {
  switch (b.type) {
    case SideType::periodic: return {Closure::periodic, 0.0};
    case SideType::cap: return {e == 0.0 ? Closure::neumann : Closure::dirichlet, 0.0};
    case SideType::cut: return {Closure::dirichlet, 0.0};
    case SideType::end: break;
  }
  const RootPair g = mode_roots(e, m);
  // r^gamma lies in the weighted space near infinity iff gamma < beta, near 0 iff gamma > beta
  if (b.kind == EndKind::AC) {
    if (beta > g.plus) return {Closure::free, 0.0};
    return {Closure::robin, g.minus};
  }
  if (beta < g.minus) return {Closure::free, 0.0};
  return {Closure::robin, g.plus};
}

Eigen::SparseMatrix<double> ModeOperator::reduced() const {
  Eigen::SparseMatrix<double> sel(static_cast<Eigen::Index>(rows.size()), nodal.rows());
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t k = 0; k < rows.size(); ++k)
    t.emplace_back(static_cast<Eigen::Index>(k), rows[k], 1.0);
  sel.setFromTriplets(t.begin(), t.end());
  return sel * nodal * embed;
}

Eigen::VectorXd ModeOperator::apply(const Eigen::VectorXd& u) const {
  Eigen::VectorXd full = nodal * u;
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out[static_cast<Eigen::Index>(k)] = full[rows[k]];
  return out;
}

namespace {

using Trip = Eigen::Triplet<double>;

// Coefficients (of u_0, u_1, u_2) expressing an eliminated end value.
struct Elimination {
  bool unknown = true;
  double c1 = 0.0, c2 = 0.0;
};

Elimination eliminate(const EndClosure& c, const Boundary& b, const RadialGrid& g, bool right) {
  const std::size_t i = right ? g.size() - 1 : 0;
  switch (c.type) {
    case Closure::free:
    case Closure::periodic: return {true, 0, 0};
    case Closure::dirichlet: return {false, 0, 0};
    case Closure::neumann:
    case Closure::robin: break;
  }
  // one-sided du/dx = dir gamma u / r with the end's own radius
  double k = 0.0;
  if (c.type == Closure::robin) {
    const double r = b.local_r(g.x[i]);
    if (!(r > 0)) throw Error(ErrorCode::invalid_argument, "Robin closure needs a positive radius");
    k = 2.0 * g.h * g.s[i] * b.dir * c.gamma / r;
  }
  const double den = right ? 3.0 - k : 3.0 + k;
  return {false, 4.0 / den, -1.0 / den};
}

}  // namespace

ModeOperator assemble_mode_operator(const RadialModel& model, const RadialGrid& g, double e,
                                    const EndClosure& left, const EndClosure& right) {
  const std::size_t n = g.size();
  if (n < 6) throw Error(ErrorCode::invalid_argument, "grid too small for the mode operator");
  if (!(e >= 0)) throw Error(ErrorCode::invalid_argument, "mode eigenvalue must be >= 0");
  if (g.periodic != model.periodic)
    throw Error(ErrorCode::invalid_argument, "grid and model disagree on periodicity");
  if (!g.periodic && (g.x.front() < model.lo - 1e-12 || g.x.back() > model.hi + 1e-12))
    throw Error(ErrorCode::invalid_argument, "grid does not lie in the model domain");
  if (g.periodic != (left.type == Closure::periodic) ||
      g.periodic != (right.type == Closure::periodic))
    throw Error(ErrorCode::invalid_argument, "periodic closures need a periodic grid");
  const int m = model.m;
  const double h = g.h;

  // face coefficients f^(m-1) / s at the half nodes
  std::vector<double> face(g.x_half.size());
  for (std::size_t i = 0; i < face.size(); ++i) {
    const double f = model.warp(g.x_half[i]).f;
    const double s = model.spacing(g.x_half[i]).v;
    face[i] = std::pow(f, m - 1) / s;
  }

  ModeOperator op;
  op.eigenvalue = e;
  op.left = left;
  op.right = right;
  std::vector<Trip> t;
  const auto N = static_cast<Eigen::Index>(n);
  auto wrap = [&](long i) { return static_cast<Eigen::Index>((i % static_cast<long>(n) + n) % n); };
  const std::size_t first = g.periodic ? 0 : 1, last = g.periodic ? n : n - 1;
  for (std::size_t i = first; i < last; ++i) {
    const double f = model.warp(g.x[i]).f;
    if (!(f > 0)) throw Error(ErrorCode::invalid_argument, "warp vanishes at an interior node");
    const double ap = face[i];
    const double am = i == 0 ? face[n - 1] : face[i - 1];
    const double den = h * h * g.s[i] * std::pow(f, m - 1);
    const auto ii = static_cast<Eigen::Index>(i);
    const double cp = -ap / den, cm = -am / den;
    t.emplace_back(ii, wrap(static_cast<long>(i) + 1), cp);
    t.emplace_back(ii, wrap(static_cast<long>(i) - 1), cm);
    t.emplace_back(ii, ii, -(cp + cm) + e / (f * f));
    op.rows.push_back(ii);
  }
  op.nodal.resize(N, N);
  op.nodal.setFromTriplets(t.begin(), t.end());

  // unknowns: every node except the eliminated end values
  Elimination el = g.periodic ? Elimination{} : eliminate(left, model.left, g, false);
  Elimination er = g.periodic ? Elimination{} : eliminate(right, model.right, g, true);
  std::vector<Eigen::Index> col(n, -1);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool end_l = !g.periodic && i == 0, end_r = !g.periodic && i + 1 == n;
    if ((end_l && !el.unknown) || (end_r && !er.unknown)) continue;
    col[i] = k++;
  }
  std::vector<Trip> te;
  for (std::size_t i = 0; i < n; ++i)
    if (col[i] >= 0) te.emplace_back(static_cast<Eigen::Index>(i), col[i], 1.0);
  if (!g.periodic) {
    if (!el.unknown && (el.c1 != 0 || el.c2 != 0)) {
      te.emplace_back(0, col[1], el.c1);
      te.emplace_back(0, col[2], el.c2);
    }
    if (!er.unknown && (er.c1 != 0 || er.c2 != 0)) {
      te.emplace_back(N - 1, col[n - 2], er.c1);
      te.emplace_back(N - 1, col[n - 3], er.c2);
    }
  }
  op.embed.resize(N, k);
  op.embed.setFromTriplets(te.begin(), te.end());
  return op;
}

namespace {

double end_beta(const Boundary& b, std::optional<double> beta) { return beta.value_or(b.beta); }

}  // namespace

ModeOperator assemble_mode_operator(const RadialModel& model, const RadialGrid& grid, double e,
                                    std::optional<double> beta) {
  return assemble_mode_operator(
      model, grid, e, admissible_closure(model.left, e, model.m, end_beta(model.left, beta)),
      admissible_closure(model.right, e, model.m, end_beta(model.right, beta)));
}

ModeOperator assemble_mode_operator(const GluedModel& glued, const RadialGrid& grid, double e,
                                    std::optional<double> beta) {
  return assemble_mode_operator(glued.model, grid, e, beta);
}

Eigen::VectorXd pointwise_laplacian(const NormContext& ctx, double e, const Eigen::VectorXd& u) {
  const auto& geo = ctx.geometry();
  const int m = ctx.model().m;
  Eigen::VectorXd d1 = ctx.ops().d1 * u, d2 = ctx.ops().d2 * u;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double f = geo.f[i];
    if (!(f > 0)) continue;
    out[i] = -d2[i] - (m - 1) * geo.df[i] / f * d1[i] + e * u[i] / (f * f);
  }
  return out;
}

ConeHarmonics harmonic_basis_cone(const Link& link, int m, double e) {
  if (link.dim() != m - 1)
    throw Error(ErrorCode::link_mismatch, "link dimension must be m - 1");
  auto mult = link.multiplicity_of(e);
  if (!mult) {
    std::ostringstream os;
    os << "eigenvalue " << e << " is not in the spectrum of " << link.describe();
    throw Error(ErrorCode::invalid_argument, os.str());
  }
  const RootPair r = mode_roots(e, m);
  return {r.plus, r.minus, *mult};
}

namespace {

// Exact cone over `link` with nodes r_i = exp(i h).
struct ConeSample {
  RadialModel model;
  RadialGrid grid;
};

ConeSample cone_sample(const Link& link, int m, double h, int cells) {
  ConifoldModel cm;
  cm.m = m;
  EndSpec tip, far;
  tip.kind = EndKind::CS;
  tip.nu = 2.0;
  far.kind = EndKind::AC;
  cm.components.push_back({exact_cone(), link, {tip, far}});
  ConeSample cs{to_radial(cm), {}};
  auto& g = cs.grid;
  g.h = h;
  const double z0 = -0.5 * cells * h;  // centred on r = 1
  for (int i = 0; i <= cells; ++i) {
    const double x = std::exp(z0 + i * h);
    g.x.push_back(x);
    g.s.push_back(x);
    g.ds.push_back(1.0);
    g.w.push_back(h * x);
    g.label.push_back(Region::core);
    if (i < cells) g.x_half.push_back(std::exp(z0 + (i + 0.5) * h));
  }
  g.w.front() *= 0.5;
  g.w.back() *= 0.5;
  g.regions.push_back({Region::core, 0, g.x.size()});
  return cs;
}

}  // namespace

double cone_consistency_residual(const Link& link, int m, double e, double h) {
  if (!(h > 0)) throw Error(ErrorCode::invalid_argument, "step must be > 0");
  ConeSample cs = cone_sample(link, m, h, 64);
  NormContext ctx(cs.model, cs.grid);
  ModeOperator op = assemble_mode_operator(cs.model, cs.grid, e, EndClosure{}, EndClosure{});
  const RootPair roots = mode_roots(e, m);
  const auto n = static_cast<Eigen::Index>(cs.grid.size());
  double worst = 0.0;
  for (double gamma : {roots.plus, roots.minus}) {
    Eigen::VectorXd u(n);
    for (Eigen::Index i = 0; i < n; ++i) u[i] = std::pow(cs.grid.x[i], gamma);
    Eigen::VectorXd fv = op.nodal * u, pw = pointwise_laplacian(ctx, e, u);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const double r2 = cs.grid.x[i] * cs.grid.x[i];
      worst = std::max({worst, r2 * std::abs(fv[i]) / u[i], r2 * std::abs(pw[i]) / u[i]});
    }
  }
  return worst;
}

double near_null_threshold(const Link& link, int m, double max_eigenvalue, double h) {
  double worst = 0.0;
  for (const auto& p : link.eigenvalues_below(max_eigenvalue))
    worst = std::max(worst, cone_consistency_residual(link, m, p.eigenvalue, h));
  return 10.0 * worst;
}

ModeForms mode_forms(const NormContext& ctx, const ModeOperator& op, std::optional<double> beta) {
  const auto& g = ctx.grid();
  const auto& geo = ctx.geometry();
  const int m = ctx.model().m;
  const double ric = ctx.model().link.einstein_constant();
  const double e = op.eigenvalue;
  const auto n = static_cast<Eigen::Index>(g.size());
  if (op.nodal.rows() != n) throw Error(ErrorCode::invalid_argument, "operator and grid differ");
  Eigen::VectorXd c0(n), c0g(n), c1(n), c1h(n), c2(n), cx(n), w0(n), wp(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = geo.f[i];
    if (!(f > 0) || g.w[i] == 0.0) {
      c0[i] = c0g[i] = c1[i] = c1h[i] = c2[i] = cx[i] = w0[i] = wp[i] = 0.0;
      continue;
    }
    const double lr = std::log(geo.rho[i]);
    const double W = std::exp(std::log(g.w[i]) + (m - 1) * std::log(f) - m * lr +
                              2.0 * ctx.log_weight(static_cast<std::size_t>(i), beta));
    const double r2 = std::exp(2 * lr), r4 = r2 * r2;
    const auto hc = hessian_coefficients(e, f, geo.df[i], m, ric);
    wp[i] = W;
    c0g[i] = W * r2 * e / (f * f);
    c0[i] = W * (1.0 + r2 * e / (f * f) + r4 * hc.uu);
    c1[i] = W * (r2 + r4 * hc.xx);
    c1h[i] = W * r2;
    c2[i] = W * r4;
    cx[i] = W * r4 * hc.ux;
    w0[i] = W * r4;
  }
  const auto& d1 = ctx.ops().d1;
  const auto& d2 = ctx.ops().d2;
  using Sp = Eigen::SparseMatrix<double>;
  auto diag = [&](const Eigen::VectorXd& v) {
    Sp d(n, n);
    std::vector<Trip> t;
    for (Eigen::Index i = 0; i < n; ++i)
      if (v[i] != 0.0) t.emplace_back(i, i, v[i]);
    d.setFromTriplets(t.begin(), t.end());
    return d;
  };
  const Sp E = op.embed;
  const Sp Et = E.transpose();
  const Sp d1t = d1.transpose();
  Sp dc1 = diag(c1), dcx = diag(cx);
  Sp g2 = diag(c0) + d1t * dc1 * d1 + Sp(d2.transpose()) * diag(c2) * d2 + dcx * d1 +
          d1t * dcx;
  Sp c1h_d = diag(c1h);
  Sp grad = diag(c0g) + d1t * c1h_d * d1;
  Sp g1 = diag(wp) + grad;

  ModeForms forms;
  forms.sobolev2 = Et * g2 * E;
  forms.sobolev1 = Et * g1 * E;
  forms.gradient = Et * grad * E;
  Sp ar = op.reduced();
  Eigen::VectorXd rw(static_cast<Eigen::Index>(op.rows.size()));
  for (std::size_t k = 0; k < op.rows.size(); ++k) rw[static_cast<Eigen::Index>(k)] = w0[op.rows[k]];
  Sp sq(rw.size(), rw.size());
  {
    std::vector<Trip> t;
    for (Eigen::Index i = 0; i < rw.size(); ++i) t.emplace_back(i, i, std::sqrt(rw[i]));
    sq.setFromTriplets(t.begin(), t.end());
  }
  forms.laplacian_factor = sq * ar;
  forms.laplacian = Sp(forms.laplacian_factor.transpose()) * forms.laplacian_factor;
  return forms;
}

namespace {

struct ModeEntry {
  double e;
  long mult;
};

std::vector<ModeEntry> mode_list(const Link& link, double max_e) {
  if (!(max_e >= 0)) throw Error(ErrorCode::invalid_argument, "mode cutoff must be >= 0");
  std::vector<ModeEntry> out;
  for (const auto& p : link.eigenvalues_below(max_e)) out.push_back({p.eigenvalue, p.multiplicity});
  return out;
}

std::vector<double> sqrt_all(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(std::sqrt(std::max(0.0, x)));
  return out;
}

// Smallest generalised singular values of every mode, in mode order.
std::vector<ModeSigma> mode_sigmas(const NormContext& ctx, const SolverOptions& opt,
                                   std::optional<double> beta) {
  const auto modes = mode_list(ctx.model().link, opt.max_eigenvalue);
  std::vector<ModeSigma> out(modes.size());
  parallel_for(modes.size(), [&](std::size_t k) {
    const double e = modes[k].e;
    ModeOperator op = assemble_mode_operator(ctx.model(), ctx.grid(), e, beta);
    ModeForms forms = mode_forms(ctx, op, beta);
    PencilResult pr = smallest_eigenpairs_gram(forms.laplacian_factor, forms.sobolev2, std::nullopt, opt.pencil);
    out[k] = {e, modes[k].mult, sqrt_all(pr.values), op.left, op.right};
  });
  return out;
}

void require_end_weights(const RadialModel& model, std::optional<double> beta,
                         InvertibilityReport& rep) {
  const int m = model.m;
  bool anchor = false;
  for (const auto& b : model.ends()) {
    const double bb = end_beta(b, beta);
    std::ostringstream os;
    os << to_string(b.kind) << " end with weight " << bb;
    const double d = distance_to_exceptional(model.link, m, bb);
    if (d < kExceptionalTol)
      throw Error(ErrorCode::exceptional_weight, os.str() + " is exceptional");
    if (b.kind == EndKind::AC && !(bb < 0))
      throw Error(ErrorCode::weight_condition, os.str() + ": injectivity needs weights < 0 on AC ends");
    if (b.kind == EndKind::CS && !(bb > 2 - m))
      throw Error(ErrorCode::weight_condition,
                  os.str() + ": injectivity needs weights > 2-m on CS ends");
    if (b.kind == EndKind::AC || bb > 0) anchor = true;
    if (d < 0.05) rep.near_exceptional = true;
  }
  if (!anchor)
    throw Error(ErrorCode::weight_condition,
                "injectivity needs an AC end with weight < 0 or a CS end with weight > 0");
}

void require_glued_weights(const GluedModel& g) {
  const int m = g.model.m;
  auto check = [&](const std::vector<EndType>& ends, const std::vector<double>& betas,
                   const char* side) {
    for (std::size_t i = 0; i < ends.size(); ++i) {
      const double b = betas[i];
      if (distance_to_exceptional(ends[i].link, m, b) < kExceptionalTol)
        throw Error(ErrorCode::exceptional_weight, std::string(side) + " end weight is exceptional");
      const bool ok = ends[i].kind == EndKind::AC ? b < 0 : b > 2 - m;
      if (!ok) {
        std::ostringstream os;
        os << side << " " << to_string(ends[i].kind) << " end " << i << " has weight " << b
           << ", outside the injectivity range";
        throw Error(ErrorCode::weight_condition, os.str());
      }
    }
  };
  check(g.host_ends, g.host_betas, "host");
  check(g.hat_ends, g.hat_betas, "partner");
  bool anchor = false;
  for (std::size_t i = 0; i < g.host_ends.size(); ++i) {
    if (g.host_marked[i]) continue;
    const double b = g.host_betas[i];
    if ((g.host_ends[i].kind == EndKind::AC && b < 0) || (g.host_ends[i].kind == EndKind::CS && b > 0))
      anchor = true;
  }
  if (!anchor)
    throw Error(ErrorCode::weight_condition,
                "the host needs an unmarked AC end with weight < 0 or CS end with weight > 0");
}

}  // namespace

InvertibilityReport invertibility_constant(const RadialModel& model, const SolverOptions& opt) {
  if (model.compact())
    throw Error(ErrorCode::not_compact,
                "model has no ends; use the restricted solver for compact models");
  InvertibilityReport rep;
  require_end_weights(model, opt.beta, rep);
  NormContext ctx(model, opt.grid);
  rep.grid_size = ctx.grid().size();
  rep.h = ctx.grid().h;
  rep.modes = mode_sigmas(ctx, opt, opt.beta);
  rep.sigma_min = std::numeric_limits<double>::infinity();
  for (const auto& ms : rep.modes)
    if (!ms.sigmas.empty()) rep.sigma_min = std::min(rep.sigma_min, ms.sigmas.front());
  rep.constant = rep.sigma_min > 0 ? 1.0 / rep.sigma_min : std::numeric_limits<double>::infinity();
  return rep;
}

InvertibilityReport invertibility_constant(const GluedModel& glued, const SolverOptions& opt) {
  if (glued.model.compact())
    throw Error(ErrorCode::not_compact,
                "glued model has no ends; use the restricted solver for compact models");
  if (!opt.beta) require_glued_weights(glued);
  return invertibility_constant(glued.model, opt);
}

CompactReport restricted_invertibility_compact(const GluedModel& glued, const SolverOptions& opt) {
  const RadialModel& model = glued.model;
  if (!model.compact())
    throw Error(ErrorCode::not_compact, "restricted invertibility needs a compact glued model");
  const int m = model.m;
  // without an override the pieces must already share one weight
  std::optional<double> common = opt.beta;
  if (!common) {
    std::vector<double> all = glued.host_betas;
    all.insert(all.end(), glued.hat_betas.begin(), glued.hat_betas.end());
    if (!all.empty() && std::all_of(all.begin(), all.end(), [&](double b) { return b == all[0]; }))
      common = all[0];
  }
  if (!common)
    throw Error(ErrorCode::weight_condition, "compact gluing needs a constant weight");
  const double beta = *common;
  if (!(beta > 2 - m && beta < 0))
    throw Error(ErrorCode::weight_condition, "compact gluing needs a weight in (2-m, 0)");
  if (distance_to_exceptional(model.link, m, beta) < kExceptionalTol)
    throw Error(ErrorCode::exceptional_weight, "weight is exceptional");

  NormContext ctx(model, opt.grid);
  const auto& g = ctx.grid();
  const auto& geo = ctx.geometry();
  CompactReport rep;
  rep.grid_size = g.size();
  rep.threshold = near_null_threshold(model.link, m, opt.max_eigenvalue, g.h);

  const auto modes = mode_list(model.link, opt.max_eigenvalue);
  rep.modes.resize(modes.size());
  std::vector<double> free0;
  const CutoffEta eta(glued.t, glued.params.a, glued.params.b);
  parallel_for(modes.size(), [&](std::size_t k) {
    const double e = modes[k].e;
    ModeOperator op = assemble_mode_operator(model, g, e, beta);
    ModeForms forms = mode_forms(ctx, op, beta);
    std::optional<Eigen::VectorXd> constraint;
    if (e == 0.0) {
      // Q(eta_t u) = integral over the host core of eta_t u vol
      Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.label[i] != Region::core) continue;
        double r = std::numeric_limits<double>::infinity();
        for (const auto& nk : glued.necks) {
          double d = std::abs(g.x[i] - nk.tip);
          if (model.periodic) d = std::min(d, g.period - d);
          r = std::min(r, d);
        }
        c[static_cast<Eigen::Index>(i)] = g.w[i] * std::pow(geo.f[i], m - 1) * eta(r).v;
      }
      if (c.isZero()) throw Error(ErrorCode::invalid_argument, "grid has no host core nodes");
      constraint = Eigen::VectorXd(op.embed.transpose() * c);
      PencilResult pf = smallest_eigenpairs_gram(forms.laplacian_factor, forms.sobolev2, std::nullopt, opt.pencil);
      free0 = sqrt_all(pf.values);
    }
    PencilResult pr = smallest_eigenpairs_gram(forms.laplacian_factor, forms.sobolev2, constraint, opt.pencil);
    rep.modes[k] = {e, modes[k].mult, sqrt_all(pr.values), op.left, op.right};
  });
  rep.unconstrained_sigma0 = free0.empty() ? 0.0 : free0.front();
  rep.constants_detected = rep.unconstrained_sigma0 < rep.threshold;
  rep.sigma_min = std::numeric_limits<double>::infinity();
  for (const auto& ms : rep.modes)
    if (!ms.sigmas.empty()) rep.sigma_min = std::min(rep.sigma_min, ms.sigmas.front());
  rep.constant = rep.sigma_min > 0 ? 1.0 / rep.sigma_min : std::numeric_limits<double>::infinity();
  return rep;
}

namespace {

EndClosure poincare_closure(const Boundary& b, double e, double beta) {
  switch (b.type) {
    case SideType::periodic: return {Closure::periodic, 0.0};
    case SideType::cap: return {e == 0.0 ? Closure::neumann : Closure::dirichlet, 0.0};
    case SideType::cut: return {Closure::dirichlet, 0.0};
    case SideType::end: break;
  }
  // keep the end value free where constants are in the space there
  const bool constants = b.kind == EndKind::AC ? beta > 0 : beta < 0;
  return {constants ? Closure::free : Closure::dirichlet, 0.0};
}

void require_poincare_weights(const RadialModel& model, std::optional<double> beta) {
  bool excluded = false;
  for (const auto& b : model.ends()) {
    const double bb = end_beta(b, beta);
    if ((b.kind == EndKind::AC && bb < 0) || (b.kind == EndKind::CS && bb > 0)) excluded = true;
  }
  if (!excluded)
    throw Error(ErrorCode::weight_condition,
                "constants lie in the weighted space, so no Poincare inequality holds");
}

}  // namespace

PoincareReport poincare_constant(const RadialModel& model, const SolverOptions& opt) {
  require_poincare_weights(model, opt.beta);
  NormContext ctx(model, opt.grid);
  PoincareReport rep;
  rep.grid_size = ctx.grid().size();
  const auto modes = mode_list(model.link, opt.max_eigenvalue);
  rep.per_mode.resize(modes.size());
  parallel_for(modes.size(), [&](std::size_t k) {
    const double e = modes[k].e;
    ModeOperator op = assemble_mode_operator(
        model, ctx.grid(), e, poincare_closure(model.left, e, end_beta(model.left, opt.beta)),
        poincare_closure(model.right, e, end_beta(model.right, opt.beta)));
    ModeForms forms = mode_forms(ctx, op, opt.beta);
    PencilOptions po = opt.pencil;
    po.count = 1;
    PencilResult pr = smallest_eigenpairs(forms.gradient, forms.sobolev1, std::nullopt, po);
    const double lam = pr.values.front();
    rep.per_mode[k] = {e, lam > 0 ? 1.0 / std::sqrt(lam) : std::numeric_limits<double>::infinity()};
  });
  for (const auto& pm : rep.per_mode) rep.constant = std::max(rep.constant, pm.second);
  return rep;
}

PoincareReport poincare_constant(const GluedModel& glued, const SolverOptions& opt) {
  for (std::size_t i = 0; i < glued.hat_ends.size(); ++i)
    if (glued.hat_marked[i] && !(glued.hat_betas[i] < 0))
      throw Error(ErrorCode::weight_condition, "marked partner ends need weights < 0");
  return poincare_constant(glued.model, opt);
}

double poincare_quotient(const ModeFunction& u, const NormContext& ctx, std::optional<double> beta) {
  const double top = weighted_sobolev_norm(u, ctx, {2.0, 1, beta, {}}).value;
  const double bottom = weighted_gradient_norm(u, ctx, 2.0, beta).value;
  if (bottom <= 1e-14 * top) return std::numeric_limits<double>::infinity();
  return top / bottom;
}

std::vector<KernelScanRow> kernel_dimension_scan(const RadialModel& model,
                                                 const std::vector<double>& betas,
                                                 const SolverOptions& opt) {
  for (const auto& b : model.ends())
    if (b.kind != EndKind::AC)
      throw Error(ErrorCode::invalid_argument, "kernel scans need an AC model");
  if (model.ends().empty()) throw Error(ErrorCode::invalid_argument, "kernel scans need an AC model");
  for (double b : betas)
    if (distance_to_exceptional(model.link, model.m, b) < 1e-6) {
      std::ostringstream os;
      os << "weight " << b << " is exceptional";
      throw Error(ErrorCode::exceptional_weight, os.str());
    }
  NormContext ctx(model, opt.grid);
  const double thr = near_null_threshold(model.link, model.m, opt.max_eigenvalue, ctx.grid().h);
  std::vector<KernelScanRow> rows;
  for (double b : betas) {
    KernelScanRow row{b, 0, thr, false, mode_sigmas(ctx, opt, b)};
    for (const auto& ms : row.modes)
      for (double s : ms.sigmas) {
        if (s < thr) row.dimension += ms.mult;
        if (s > thr / 3 && s < 3 * thr) row.ambiguous = true;
      }
    rows.push_back(std::move(row));
  }
  return rows;
}

CrossingReport weight_crossing_kernel(const RadialModel& model, double gamma, double e,
                                      const CrossingOptions& opt) {
  const int m = model.m;
  const Link& link = model.link;
  const ConeHarmonics hb = harmonic_basis_cone(link, m, e);
  if (std::abs(hb.plus - gamma) > 1e-9)
    throw Error(ErrorCode::invalid_argument, "gamma is not the growing exceptional weight of mode e");
  const bool target_right = model.right.is_end() && model.right.kind == EndKind::AC;
  if (!target_right && !(model.left.is_end() && model.left.kind == EndKind::AC))
    throw Error(ErrorCode::invalid_argument, "weight crossing needs an AC end");
  const Boundary& tb = target_right ? model.right : model.left;

  // solve just below gamma, inside the chamber it bounds from above
  double below = -std::numeric_limits<double>::infinity();
  for (const auto& w : exceptional_weights(link, m, gamma - 50.0, gamma)) below = std::max(below, w.gamma);
  const double gap = std::isfinite(below) ? gamma - below : std::abs(opt.nu);
  const double solve_beta = gamma - 0.5 * std::min(gap, std::abs(opt.nu));

  std::vector<EndType> ends;
  std::vector<double> weights;
  int n_ac = 0, n_cs = 0;
  for (const auto* b : {&model.left, &model.right}) {
    if (!b->is_end()) continue;
    ends.push_back({b->kind, link});
    weights.push_back(b == &tb ? solve_beta : b->beta);
    (b->kind == EndKind::AC ? n_ac : n_cs)++;
  }
  const ManifoldKind kind = n_cs == 0 ? ManifoldKind::AC : ManifoldKind::CSAC;
  (void)n_ac;
  const RegionFacts facts = classify_weight_region(kind, weights, ends, m);
  if (!facts.surjective.has_value())
    throw Error(ErrorCode::precondition_unknown, "surjectivity below gamma is not known here");
  if (!*facts.surjective)
    throw Error(ErrorCode::weight_condition, "the Laplacian is not surjective below gamma");

  NormContext ctx(model, opt.grid);
  const auto& g = ctx.grid();
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::VectorXd sigma(n), pure(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = tb.local_r(g.x[i]);
    if (!opt.cutoff && !(r > 0))
      throw Error(ErrorCode::invalid_argument, "r^gamma is not defined on the whole model");
    pure[i] = r > 0 ? std::pow(r, gamma) : 0.0;
    double chi = 1.0;
    if (opt.cutoff) chi = r <= tb.chart ? 0.0 : smooth_step(std::log2(r / tb.chart)).v;
    sigma[i] = chi * pure[i];
  }

  auto closure = [&](const Boundary& b) {
    return admissible_closure(b, e, m, &b == &tb ? solve_beta : b.beta);
  };
  ModeOperator op = assemble_mode_operator(model, g, e, closure(model.left), closure(model.right));
  Eigen::SparseMatrix<double> ar = op.reduced();
  if (ar.rows() != ar.cols())
    throw Error(ErrorCode::invalid_argument, "mode problem below gamma is not square");
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  ar.makeCompressed();
  lu.compute(ar);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::invalid_argument, "mode problem below gamma is singular");
  Eigen::VectorXd v = lu.solve(op.apply(sigma));
  Eigen::VectorXd corr = op.embed * v;
  Eigen::VectorXd cand = sigma - corr;

  CrossingReport rep;
  rep.solve_beta = solve_beta;
  rep.correction.assign(corr.data(), corr.data() + n);
  rep.candidate = ModeFunction::single(e, std::vector<double>(cand.data(), cand.data() + n));
  rep.slope_bound = gamma + opt.nu + opt.slack;

  // remainder slope over the fit window
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  bool all_small = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = tb.local_r(g.x[i]);
    if (r < opt.fit_lo || r > opt.fit_hi) continue;
    const double rem = std::abs(cand[i] - pure[i]);
    if (rem > 1e-12 * std::max(1.0, pure[i])) all_small = false;
    if (rem == 0.0) continue;
    const double lx = std::log(r), ly = std::log(rem);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++cnt;
  }
  if (all_small) {
    rep.remainder_vanishes = true;
    rep.slope = -std::numeric_limits<double>::infinity();
  } else if (cnt >= 3) {
    rep.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  } else {
    throw Error(ErrorCode::invalid_argument, "fit window holds too few nodes");
  }
  rep.slope_ok = rep.remainder_vanishes || rep.slope <= rep.slope_bound;

  // independent pointwise discretisation, measured in the same weighted pairing
  // as the kernel scan, at a weight just above gamma so the candidate is admitted
  double above = std::numeric_limits<double>::infinity();
  for (const auto& w : exceptional_weights(link, m, gamma, gamma + 50.0)) above = std::min(above, w.gamma);
  const double norm_beta = gamma + 0.5 * std::min(std::isfinite(above) ? above - gamma : 1.0, 1.0);
  Eigen::VectorXd lap = pointwise_laplacian(ctx, e, cand);
  for (Eigen::Index i = 0; i < n; ++i)
    if (i < 2 || i + 2 >= n) lap[i] = 0.0;  // one-sided stencils
  const double top = weighted_sobolev_norm(
      ModeFunction::single(e, std::vector<double>(lap.data(), lap.data() + n)), ctx,
      {2.0, 0, norm_beta - 2.0, {}}).value;
  const double bottom = weighted_sobolev_norm(rep.candidate, ctx, {2.0, 2, norm_beta, {}}).value;
  rep.residual = bottom > 0 ? top / bottom : std::numeric_limits<double>::infinity();
  rep.threshold = near_null_threshold(link, m, e, g.h);
  rep.residual_ok = rep.residual < rep.threshold;
  return rep;
}

}  // namespace conifold
