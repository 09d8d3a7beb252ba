#include "conifold/conifold_model.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/Splines>

namespace conifold {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Side cs_side(double anchor, int dir) { return {SideType::end, EndKind::CS, anchor, dir}; }
Side ac_side(int dir) { return {SideType::end, EndKind::AC, 0.0, dir}; }

Jet log_spacing(double x) { return {x, 1.0, 0.0}; }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Shape exact_cone() {
  Shape s;
  s.name = "exact_cone";
  s.lo = 0.0;
  s.hi = kInf;
  s.left = cs_side(0.0, 1);
  s.right = ac_side(1);
  s.warp = [](double x) { return Warp{x, 1.0, 0.0}; };
  s.spacing = log_spacing;
  return s;
}

Shape hyperboloid(double c) {
  if (!(c > 0)) throw Error(ErrorCode::invalid_argument, "hyperboloid scale must be > 0");
  Shape s;
  s.name = "hyperboloid(" + fmt(c) + ")";
  s.lo = -kInf;
  s.hi = kInf;
  s.left = ac_side(-1);
  s.right = ac_side(1);
  s.warp = [c](double x) {
    double f = std::hypot(x, c);
    return Warp{f, x / f, c * c / (f * f * f)};
  };
  s.spacing = [c](double x) {
    double v = std::hypot(x, c);
    return Jet{v, x / v, 0.0};
  };
  return s;
}

Shape capped_hyperboloid(double c) {
  if (!(c > 0)) throw Error(ErrorCode::invalid_argument, "capped hyperboloid scale must be > 0");
  Shape s;
  s.name = "capped_hyperboloid(" + fmt(c) + ")";
  s.lo = 0.0;
  s.hi = kInf;
  s.left = {SideType::cap, EndKind::AC, 0.0, 1};
  s.right = ac_side(1);
  // odd in x with f'(0) = 1, so the centre is smooth; f/r - 1 ~ (c^2/2) r^-2
  s.warp = [c](double x) {
    const double c2 = c * c, x2 = x * x, q = c2 + x2;
    const double f = x + 0.5 * c2 * x * x2 / (q * q);
    const double df = 1.0 + c2 * x2 * (3.0 * c2 - x2) / (2.0 * q * q * q);
    const double ddf = c2 * x * (12.0 * x2 * x2 - 14.0 * x2 * q + 3.0 * q * q) / (q * q * q * q);
    return Warp{f, df, ddf};
  };
  s.spacing = [c](double x) {
    double v = std::hypot(x, c);
    return Jet{v, x / v, 0.0};
  };
  return s;
}

Shape sine_spindle() {
  Shape s;
  s.name = "sine_spindle";
  s.lo = 0.0;
  s.hi = std::numbers::pi;
  s.left = cs_side(0.0, 1);
  s.right = cs_side(std::numbers::pi, -1);
  s.warp = [](double x) { return Warp{std::sin(x), std::cos(x), -std::sin(x)}; };
  s.spacing = [](double x) { return Jet{std::sin(x), std::cos(x), 0.0}; };
  return s;
}

Shape perturbed_cone(double c, double nu) {
  if (nu == 0.0) throw Error(ErrorCode::invalid_argument, "perturbed cone needs nu != 0");
  Shape s;
  s.name = "perturbed_cone(" + fmt(c) + "," + fmt(nu) + ")";
  // only one end is conical; the other side is cut at x = 1
  if (nu < 0) {
    s.lo = 1.0;
    s.hi = kInf;
    s.left = {SideType::cut, EndKind::AC, 1.0, 1};
    s.right = ac_side(1);
  } else {
    s.lo = 0.0;
    s.hi = 1.0;
    s.left = cs_side(0.0, 1);
    s.right = {SideType::cut, EndKind::CS, 1.0, -1};
  }
  s.warp = [c, nu](double x) {
    const double p = std::pow(x, nu);
    return Warp{x * (1.0 + c * p), 1.0 + c * (1.0 + nu) * p, c * nu * (1.0 + nu) * p / x};
  };
  s.spacing = log_spacing;
  return s;
}

Shape spline_profile(std::vector<double> xs, std::vector<double> fs) {
  if (xs.size() != fs.size() || xs.size() < 4)
    throw Error(ErrorCode::invalid_argument, "spline profile needs >= 4 matching knots");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw Error(ErrorCode::invalid_argument, "spline knots must increase");
  for (double f : fs)
    if (!(f > 0)) throw Error(ErrorCode::invalid_argument, "spline values must be positive");
  using Spline1 = Eigen::Spline<double, 1>;
  const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
  const double x0 = xs.front(), len = xs.back() - xs.front();
  Eigen::RowVectorXd pts(n), params(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts(i) = fs[static_cast<std::size_t>(i)];
    params(i) = (xs[static_cast<std::size_t>(i)] - x0) / len;
  }
  auto spline = std::make_shared<Spline1>(
      Eigen::SplineFitting<Spline1>::Interpolate(pts, 3, params));
  Shape s;
  s.name = "spline";
  s.lo = xs.front();
  s.hi = xs.back();
  s.left = {SideType::cut, EndKind::AC, s.lo, 1};
  s.right = {SideType::cut, EndKind::AC, s.hi, -1};
  s.warp = [spline, x0, len](double x) {
    const double u = std::clamp((x - x0) / len, 0.0, 1.0);
    auto d = spline->derivatives(u, 2);
    return Warp{d(0, 0), d(0, 1) / len, d(0, 2) / (len * len)};
  };
  s.spacing = [](double) { return Jet{1.0, 0.0, 0.0}; };
  return s;
}

Shape shape_preset(const std::string& spec) {
  std::string name = spec;
  std::vector<double> args;
  if (auto open = spec.find('('); open != std::string::npos) {
    auto close = spec.rfind(')');
    if (close == std::string::npos || close < open)
      throw Error(ErrorCode::config, "bad profile preset '" + spec + "'");
    name = spec.substr(0, open);
    std::stringstream ss(spec.substr(open + 1, close - open - 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        args.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw Error(ErrorCode::config, "bad preset argument in '" + spec + "'");
      }
    }
  }
  auto arg = [&](std::size_t i, double def) { return i < args.size() ? args[i] : def; };
  if (name == "exact_cone") return exact_cone();
  if (name == "hyperboloid") return hyperboloid(arg(0, 1.0));
  if (name == "capped_hyperboloid") return capped_hyperboloid(arg(0, 1.0));
  if (name == "sine_spindle") return sine_spindle();
  if (name == "perturbed_cone") return perturbed_cone(arg(0, 0.1), arg(1, -2.0));
  throw Error(ErrorCode::config, "unknown profile preset '" + spec + "'");
}

namespace {

std::vector<const Side*> end_sides(const Shape& s) {
  std::vector<const Side*> out;
  if (s.left.type == SideType::end) out.push_back(&s.left);
  if (s.right.type == SideType::end) out.push_back(&s.right);
  return out;
}

// x-position where the chart of an end stops and the core begins
double chart_edge(const Side& side, double boundary) { return side.anchor + side.dir * boundary; }

}  // namespace

void validate(const ConifoldModel& model) {
  if (model.m < 3) throw Error(ErrorCode::invalid_argument, "dimension m must be >= 3");
  if (model.components.empty()) throw Error(ErrorCode::invalid_argument, "model has no components");
  for (std::size_t ci = 0; ci < model.components.size(); ++ci) {
    const auto& comp = model.components[ci];
    const std::string where = "component " + std::to_string(ci) + ": ";
    if (comp.link.dim() != model.m - 1)
      throw Error(ErrorCode::invalid_argument, where + "link dimension must equal m-1");
    auto sides = end_sides(comp.shape);
    if (sides.size() != comp.ends.size())
      throw Error(ErrorCode::invalid_argument,
                  where + "profile '" + comp.shape.name + "' has " + std::to_string(sides.size()) +
                      " ends but " + std::to_string(comp.ends.size()) + " were specified");
    std::optional<double> marked_beta;
    for (std::size_t j = 0; j < sides.size(); ++j) {
      const auto& e = comp.ends[j];
      if (e.kind != sides[j]->kind)
        throw Error(ErrorCode::invalid_argument,
                    where + "end " + std::to_string(j) + " kind does not match the profile");
      if (e.kind == EndKind::CS ? !(e.nu > 0) : !(e.nu < 0))
        throw Error(ErrorCode::invalid_argument,
                    where + "rate nu must be > 0 on CS ends and < 0 on AC ends");
      if (!(e.boundary > 0))
        throw Error(ErrorCode::invalid_argument, where + "end boundary must be > 0");
      if (e.marked) {
        if (marked_beta && *marked_beta != e.beta)
          throw Error(ErrorCode::weight_mismatch,
                      where + "marked ends of one component need equal weights");
        marked_beta = e.beta;
      }
      const double edge = chart_edge(*sides[j], e.boundary);
      if (!(edge > comp.shape.lo && edge < comp.shape.hi))
        throw Error(ErrorCode::invalid_argument, where + "end chart leaves the profile domain");
    }
    if (sides.size() == 2) {
      double l = chart_edge(*sides[0], comp.ends[0].boundary);
      double r = chart_edge(*sides[1], comp.ends[1].boundary);
      if (l > r) throw Error(ErrorCode::invalid_argument, where + "end charts overlap");
    }
  }
}

ManifoldKind manifold_kind(const ConifoldModel& model) {
  bool cs = false, ac = false;
  for (const auto& c : model.components)
    for (const auto& e : c.ends) (e.kind == EndKind::CS ? cs : ac) = true;
  if (cs && ac) return ManifoldKind::CSAC;
  if (cs) return ManifoldKind::CS;
  if (ac) return ManifoldKind::AC;
  return ManifoldKind::compact;
}

std::vector<EndType> end_types(const ConifoldModel& model) {
  std::vector<EndType> out;
  for (const auto& c : model.components)
    for (const auto& e : c.ends) out.push_back({e.kind, c.link});
  return out;
}

std::vector<double> end_weights(const ConifoldModel& model) {
  std::vector<double> out;
  for (const auto& c : model.components)
    for (const auto& e : c.ends) out.push_back(e.beta);
  return out;
}

namespace {

Side scale_side(Side s, double t) {
  s.anchor *= t;
  return s;
}

Shape rescale_shape(const Shape& in, double t) {
  Shape s = in;
  s.lo = in.lo * t;
  s.hi = in.hi * t;
  s.left = scale_side(in.left, t);
  s.right = scale_side(in.right, t);
  s.warp = [w = in.warp, t](double x) {
    Warp v = w(x / t);
    return Warp{t * v.f, v.df, v.ddf / t};
  };
  s.spacing = [sp = in.spacing, t](double x) {
    Jet v = sp(x / t);
    return Jet{t * v.v, v.d1, v.d2 / t};
  };
  return s;
}

}  // namespace

ConifoldModel rescale(const ConifoldModel& model, double t, std::optional<double> beta_ref) {
  if (!(t > 0)) throw Error(ErrorCode::invalid_argument, "rescaling factor must be > 0");
  ConifoldModel out = model;
  for (auto& comp : out.components) {
    comp.shape = rescale_shape(comp.shape, t);
    for (auto& e : comp.ends) e.boundary *= t;
  }
  out.log_scale += std::log(t);
  if (beta_ref) out.beta_ref = beta_ref;
  return out;
}

const char* to_string(Region r) {
  switch (r) {
    case Region::core: return "core";
    case Region::end: return "end";
    case Region::neck: return "neck";
    case Region::hat_core: return "hat_core";
    case Region::hat_end: return "hat_end";
  }
  return "?";
}

std::vector<Boundary> RadialModel::ends() const {
  std::vector<Boundary> out;
  if (left.is_end()) out.push_back(left);
  if (right.is_end()) out.push_back(right);
  return out;
}

RadialModel to_radial(const ConifoldModel& model, std::size_t component) {
  validate(model);
  if (component >= model.components.size())
    throw Error(ErrorCode::invalid_argument, "component index out of range");
  const Component& comp = model.components[component];
  const Shape& sh = comp.shape;
  RadialModel rm;
  rm.m = model.m;
  rm.link = comp.link;
  rm.name = model.name.empty() ? sh.name : model.name;
  rm.lo = sh.lo;
  rm.hi = sh.hi;
  rm.warp = sh.warp;
  rm.spacing = sh.spacing;

  std::size_t next = 0;
  auto make_boundary = [&](const Side& side) {
    Boundary b;
    b.type = side.type;
    b.kind = side.kind;
    b.anchor = side.anchor;
    b.dir = side.dir;
    if (side.type == SideType::end) {
      const EndSpec& e = comp.ends[next++];
      b.beta = e.beta;
      b.nu = e.nu;
      b.chart = e.boundary;
      b.marked = e.marked;
    }
    return b;
  };
  rm.left = make_boundary(sh.left);
  rm.right = make_boundary(sh.right);

  const Boundary L = rm.left, R = rm.right;
  const double xl = L.is_end() ? chart_edge(sh.left, L.chart) : sh.lo;
  const double xr = R.is_end() ? chart_edge(sh.right, R.chart) : sh.hi;
  // core values of rho and beta interpolate linearly between the chart edges
  auto core = [=](double vl, double vr, bool hl, bool hr) {
    return [=](double x) {
      if (hl && hr) {
        if (xr <= xl) return vl;
        double s = std::clamp((x - xl) / (xr - xl), 0.0, 1.0);
        return (1 - s) * vl + s * vr;
      }
      return hl ? vl : hr ? vr : 0.0;
    };
  };
  auto rho_core = core(L.chart, R.chart, L.is_end(), R.is_end());
  const bool no_ends = !L.is_end() && !R.is_end();
  rm.rho = [=](double x) {
    if (L.is_end() && x <= xl) return L.local_r(x);
    if (R.is_end() && x >= xr) return R.local_r(x);
    return no_ends ? 1.0 : rho_core(x);
  };
  auto beta_core = core(L.beta, R.beta, L.is_end(), R.is_end());
  rm.beta = [=](double x) {
    if (L.is_end() && x <= xl) return L.beta;
    if (R.is_end() && x >= xr) return R.beta;
    return beta_core(x);
  };
  if (model.beta_ref) {
    const double ref = *model.beta_ref, ls = model.log_scale;
    auto beta = rm.beta;
    rm.weight_correction = [=](double x) { return (beta(x) - ref) * ls; };
  } else {
    rm.weight_correction = [](double) { return 0.0; };
  }
  rm.region = [=](double x) {
    if ((L.is_end() && x <= xl) || (R.is_end() && x >= xr)) return Region::end;
    return Region::core;
  };
  return rm;
}

RadialModel rescale(const RadialModel& in, double t, std::optional<double> beta_ref) {
  if (!(t > 0)) throw Error(ErrorCode::invalid_argument, "rescaling factor must be > 0");
  RadialModel rm = in;
  rm.lo = in.lo * t;
  rm.hi = in.hi * t;
  rm.left.anchor *= t;
  rm.left.chart *= t;
  rm.right.anchor *= t;
  rm.right.chart *= t;
  rm.warp = [w = in.warp, t](double x) {
    Warp v = w(x / t);
    return Warp{t * v.f, v.df, v.ddf / t};
  };
  rm.spacing = [sp = in.spacing, t](double x) {
    Jet v = sp(x / t);
    return Jet{t * v.v, v.d1, v.d2 / t};
  };
  rm.rho = [f = in.rho, t](double x) { return t * f(x / t); };
  rm.beta = [f = in.beta, t](double x) { return f(x / t); };
  rm.region = [f = in.region, t](double x) { return f(x / t); };
  const double lt = std::log(t);
  if (beta_ref) {
    rm.weight_correction = [c = in.weight_correction, b = in.beta, t, lt, ref = *beta_ref](double x) {
      return c(x / t) + (b(x / t) - ref) * lt;
    };
  } else {
    rm.weight_correction = [c = in.weight_correction, t](double x) { return c(x / t); };
  }
  return rm;
}

const CompatibilityItem* CompatibilityReport::first_failure() const {
  for (const auto& it : items)
    if (!it.ok) return &it;
  return nullptr;
}

namespace {

struct MarkedEnd {
  std::size_t component;
  const Side* side;
  const EndSpec* spec;
};

std::vector<MarkedEnd> marked_ends(const ConifoldModel& m) {
  std::vector<MarkedEnd> out;
  for (std::size_t ci = 0; ci < m.components.size(); ++ci) {
    const auto& c = m.components[ci];
    auto sides = end_sides(c.shape);
    for (std::size_t j = 0; j < sides.size(); ++j)
      if (c.ends[j].marked) out.push_back({ci, sides[j], &c.ends[j]});
  }
  return out;
}

// sup of |f/r - 1| sampled over an end chart
double chart_deviation(const Shape& shape, const Side& side, EndKind kind, double boundary) {
  double worst = 0.0;
  for (int i = 0; i <= 200; ++i) {
    double r = kind == EndKind::CS ? boundary * std::pow(10.0, -6.0 * i / 200.0)
                                   : boundary * std::pow(10.0, 6.0 * i / 200.0);
    double x = side.anchor + side.dir * r;
    worst = std::max(worst, std::abs(shape.warp(x).f / r - 1.0));
  }
  return worst;
}

}  // namespace

CompatibilityReport check_compatible(const ConifoldModel& host, const ConifoldModel& hat) {
  validate(host);
  validate(hat);
  CompatibilityReport rep;
  auto add = [&](ErrorCode code, bool ok, std::string detail) {
    rep.items.push_back({code, ok, std::move(detail)});
    rep.pass = rep.pass && ok;
  };
  auto mh = marked_ends(host), mk = marked_ends(hat);
  bool kinds_ok = !mh.empty() && mh.size() == mk.size();
  for (auto& e : mh) kinds_ok = kinds_ok && e.spec->kind == EndKind::CS;
  for (auto& e : mk) kinds_ok = kinds_ok && e.spec->kind == EndKind::AC;
  add(ErrorCode::invalid_argument, kinds_ok,
      "host carries " + std::to_string(mh.size()) + " marked CS ends, partner " +
          std::to_string(mk.size()) + " marked AC ends");
  if (!kinds_ok) return rep;
  const double kEquivalence = 0.5;  // f/r within [1/2, 3/2] on every marked chart
  for (std::size_t i = 0; i < mh.size(); ++i) {
    const auto& h = mh[i];
    const auto& k = mk[i];
    const auto& lh = host.components[h.component].link;
    const auto& lk = hat.components[k.component].link;
    const std::string pair = "pair " + std::to_string(i) + ": ";
    add(ErrorCode::link_mismatch, lh.same_cone(lk) && host.m == hat.m,
        pair + "cone " + lh.describe() + " vs " + lk.describe());
    add(ErrorCode::boundary_order, k.spec->boundary < h.spec->boundary,
        pair + "Rhat = " + fmt(k.spec->boundary) + ", epsilon = " + fmt(h.spec->boundary));
    double dh = chart_deviation(host.components[h.component].shape, *h.side, EndKind::CS,
                                h.spec->boundary);
    double dk = chart_deviation(hat.components[k.component].shape, *k.side, EndKind::AC,
                                k.spec->boundary);
    add(ErrorCode::asymptotics, dh <= kEquivalence && dk <= kEquivalence,
        pair + "sup|f/r - 1| = " + fmt(dh) + " (host), " + fmt(dk) + " (partner)");
    add(ErrorCode::weight_mismatch, h.spec->beta == k.spec->beta,
        pair + "beta = " + fmt(h.spec->beta) + ", betahat = " + fmt(k.spec->beta));
  }
  return rep;
}

namespace {

// Everything about one glued half, as functions of the neck radius r. Negative
// and small r lie inside the rescaled partner, large r inside the host.
struct HalfGlue {
  std::function<Warp(double)> warp;
  std::function<Warp(double)> hat_warp;
  std::function<Jet(double)> spacing;
  std::function<double(double)> rho, beta, correction;
  std::function<Region(double)> region;
};

HalfGlue make_half(const RadialModel& host, const Boundary& hs, const RadialModel& hat,
                   const Boundary& ks, double t, const GlueParams& gp, const InterpolationRule& rule,
                   double marked_beta) {
  // host point: x = hs.anchor + hs.dir r ; partner point: x = ks.anchor + ks.dir r / t
  const double a_h = hs.anchor, a_k = ks.anchor;
  const int d_h = hs.dir, d_k = ks.dir;
  const double r_in = t * ks.chart, r_out = hs.chart;
  const double band = std::pow(t, gp.tau);
  const double ln2 = std::log(2.0);
  auto host_warp = host.warp, hat_warp = hat.warp;
  auto host_sp = host.spacing, hat_sp = hat.spacing;
  auto step = rule.step;

  auto F = [=](double r) {
    Warp w = hat_warp(a_k + d_k * r / t);
    return Warp{t * w.f, d_k * w.df, w.ddf / t};
  };
  auto G = [=](double r) {
    Warp w = host_warp(a_h + d_h * r);
    return Warp{w.f, d_h * w.df, w.ddf};
  };
  // chi = 1 on r <= t^tau, 0 on r >= 2 t^tau, smooth in log r
  auto chi = [=](double r) {
    if (r <= band) return Jet{1.0, 0.0, 0.0};
    if (r >= 2 * band) return Jet{0.0, 0.0, 0.0};
    Jet s = step(std::log(r / band) / ln2);
    return Jet{1.0 - s.v, -s.d1 / (r * ln2), -s.d2 / (r * r * ln2 * ln2) + s.d1 / (r * r * ln2)};
  };

  HalfGlue hg;
  hg.hat_warp = F;
  hg.warp = [=](double r) {
    if (r <= band) return F(r);
    if (r >= 2 * band) return G(r);
    Warp a = F(r), b = G(r);
    Jet c = chi(r);
    const double da = a.f * a.f - b.f * b.f;
    // written as host + chi * (partner - host), exact when the two agree
    const double p1 = 2 * a.f * a.df, h1 = 2 * b.f * b.df;
    const double p2 = 2 * a.df * a.df + 2 * a.f * a.ddf, h2 = 2 * b.df * b.df + 2 * b.f * b.ddf;
    const double q = b.f * b.f + c.v * da;
    const double q1 = h1 + c.d1 * da + c.v * (p1 - h1);
    const double q2 = h2 + c.d2 * da + 2 * c.d1 * (p1 - h1) + c.v * (p2 - h2);
    if (!(q > 0)) throw Error(ErrorCode::invalid_argument, "interpolation rule makes f_t vanish");
    const double f = std::sqrt(q), f1 = q1 / (2 * f);
    return Warp{f, f1, (q2 - 2 * f1 * f1) / (2 * f)};
  };
  hg.spacing = [=](double r) {
    auto sk = [&] {
      Jet s = hat_sp(a_k + d_k * r / t);
      return Jet{t * s.v, d_k * s.d1, 0.0};
    };
    auto sh = [&] {
      Jet s = host_sp(a_h + d_h * r);
      return Jet{s.v, d_h * s.d1, 0.0};
    };
    if (r <= band) return sk();
    if (r >= 2 * band) return sh();
    Jet a = sk(), b = sh(), c = chi(r);
    return Jet{c.v * a.v + (1 - c.v) * b.v, c.d1 * (a.v - b.v) + c.v * a.d1 + (1 - c.v) * b.d1,
               0.0};
  };
  auto hat_rho = hat.rho, host_rho = host.rho;
  auto hat_beta = hat.beta, host_beta = host.beta;
  auto hat_corr = hat.weight_correction, host_corr = host.weight_correction;
  auto hat_region = hat.region, host_region = host.region;
  const double lt = std::log(t);
  hg.rho = [=](double r) {
    if (r < r_in) return t * hat_rho(a_k + d_k * r / t);
    if (r > r_out) return host_rho(a_h + d_h * r);
    return r;
  };
  hg.beta = [=](double r) {
    if (r < r_in) return hat_beta(a_k + d_k * r / t);
    if (r > r_out) return host_beta(a_h + d_h * r);
    return marked_beta;
  };
  hg.correction = [=](double r) {
    if (r < r_in) {
      const double x = a_k + d_k * r / t;
      return hat_corr(x) + (hat_beta(x) - marked_beta) * lt;
    }
    if (r > r_out) return host_corr(a_h + d_h * r);
    return 0.0;
  };
  hg.region = [=](double r) {
    if (r < r_in) return hat_region(a_k + d_k * r / t) == Region::end ? Region::hat_end
                                                                      : Region::hat_core;
    if (r > r_out) return host_region(a_h + d_h * r);
    return Region::neck;
  };
  return hg;
}

// The side `other` of a model, re-expressed in the neck radius coordinate
// r = dir_map * (x - anchor_map) * scale.
Boundary map_boundary(Boundary b, double anchor_map, int dir_map, double scale) {
  if (b.type == SideType::cap || b.type == SideType::cut || b.type == SideType::end) {
    b.anchor = dir_map * scale * (b.anchor - anchor_map);
    b.dir = b.dir * dir_map;
    b.chart *= scale;
    b.marked = false;
  }
  return b;
}

double map_point(double x, double anchor_map, int dir_map, double scale) {
  if (std::isinf(x)) return dir_map * x;
  return dir_map * scale * (x - anchor_map);
}

}  // namespace

GluedModel parametric_connect_sum(const ConifoldModel& host_model, const ConifoldModel& hat_model,
                                  const std::vector<double>& tv, const GlueParams& gp,
                                  const InterpolationRule& rule) {
  auto rep = check_compatible(host_model, hat_model);
  if (!rep.pass) {
    const auto* f = rep.first_failure();
    throw Error(f->code, "models are not compatible: " + f->detail);
  }
  if (host_model.components.size() != 1 || hat_model.components.size() != 1)
    throw Error(ErrorCode::invalid_argument, "gluing supports one component on each side");
  if (!(gp.b > 0 && gp.b < gp.a && gp.a < gp.tau && gp.tau < 1))
    throw Error(ErrorCode::invalid_argument, "need 0 < b < a < tau < 1");
  const auto marks = marked_ends(host_model);
  if (tv.size() != marks.size())
    throw Error(ErrorCode::invalid_argument, "one t per marked pair is required");
  for (double x : tv)
    if (x != tv.front())
      throw Error(ErrorCode::invalid_argument,
                  "t must agree on marked ends of one partner component");
  const double t = tv.front();
  if (!(t > 0 && t < 1)) throw Error(ErrorCode::invalid_argument, "t must lie in (0,1)");

  const RadialModel host = to_radial(host_model), hat = to_radial(hat_model);
  auto mk = marked_ends(hat_model);
  const double band = std::pow(t, gp.tau);
  for (std::size_t i = 0; i < marks.size(); ++i) {
    const double rh = mk[i].spec->boundary, eps = marks[i].spec->boundary;
    if (!(t * rh < band && 2 * band < eps))
      throw Error(ErrorCode::t_too_large,
                  "t = " + fmt(t) + " violates t*Rhat < t^tau < 2 t^tau < epsilon");
  }

  GluedModel g;
  g.t = t;
  g.params = gp;
  g.r_hat = mk[0].spec->boundary;
  g.epsilon = marks[0].spec->boundary;
  g.marked_beta = marks[0].spec->beta;
  g.host_ends = end_types(host_model);
  g.host_betas = end_weights(host_model);
  g.hat_ends = end_types(hat_model);
  g.hat_betas = end_weights(hat_model);
  for (const auto& c : host_model.components)
    for (const auto& e : c.ends) g.host_marked.push_back(e.marked);
  for (const auto& c : hat_model.components)
    for (const auto& e : c.ends) g.hat_marked.push_back(e.marked);

  RadialModel& rm = g.model;
  rm.m = host.m;
  rm.link = host.link;
  std::ostringstream name;
  name << "glued(" << host_model.components[0].shape.name << "#"
       << hat_model.components[0].shape.name << ",t=" << t << ")";
  rm.name = host_model.name.empty() ? name.str() : host_model.name + name.str();

  auto pick = [](const RadialModel& r, bool right) { return right ? r.right : r.left; };
  auto other = [](const RadialModel& r, bool right) { return right ? r.left : r.right; };

  if (marks.size() == 1) {
    const bool host_right = marks[0].side == &host_model.components[0].shape.right;
    const bool hat_right = mk[0].side == &hat_model.components[0].shape.right;
    const Boundary hs = pick(host, host_right), ks = pick(hat, hat_right);
    HalfGlue hg = make_half(host, hs, hat, ks, t, gp, rule, g.marked_beta);
    // y = r: the partner sits at small y, the host at large y
    const Boundary ho = other(host, host_right), ko = other(hat, hat_right);
    rm.left = map_boundary(ko, ks.anchor, ks.dir, t);
    rm.right = map_boundary(ho, hs.anchor, hs.dir, 1.0);
    rm.lo = map_point(hat_right ? hat.lo : hat.hi, ks.anchor, ks.dir, t);
    rm.hi = map_point(host_right ? host.lo : host.hi, hs.anchor, hs.dir, 1.0);
    rm.periodic = false;
    rm.warp = hg.warp;
    rm.spacing = hg.spacing;
    rm.rho = hg.rho;
    rm.beta = hg.beta;
    rm.weight_correction = hg.correction;
    rm.region = hg.region;
    g.necks = {{0.0, 1}};
    g.neck_warp = hg.warp;
    g.hat_warp = hg.hat_warp;
    return g;
  }

  if (marks.size() == 2) {
    // both host tips are glued to the two ends of the partner: the result is a circle
    const auto& hs_shape = host_model.components[0].shape;
    const auto& ks_shape = hat_model.components[0].shape;
    if (!(marks[0].side == &hs_shape.left && marks[1].side == &hs_shape.right &&
          mk[0].side == &ks_shape.left && mk[1].side == &ks_shape.right))
      throw Error(ErrorCode::invalid_argument, "two-pair gluing needs both ends marked on each side");
    if (std::isinf(host.lo) || std::isinf(host.hi))
      throw Error(ErrorCode::invalid_argument, "two-pair gluing needs a bounded host");
    HalfGlue right = make_half(host, host.right, hat, hat.right, t, gp, rule, g.marked_beta);
    HalfGlue left = make_half(host, host.left, hat, hat.left, t, gp, rule, g.marked_beta);
    const double tip_r = t * hat.right.anchor, tip_l = t * hat.left.anchor;
    const double period = (host.hi - host.lo) + (tip_r - tip_l);
    const double centre = 0.5 * (tip_l + tip_r);
    rm.periodic = true;
    rm.lo = centre - 0.5 * period;
    rm.hi = centre + 0.5 * period;
    rm.left = Boundary{};
    rm.left.type = SideType::periodic;
    rm.right = rm.left;
    // right half: r = y - tip_r ; left half: r = tip_l - y
    const double ylo = rm.lo;
    auto wrap = [=](double y) {
      double p = std::fmod(y - ylo, period);
      if (p < 0) p += period;
      return ylo + p;
    };
    auto rsel = [=](double y, double& r) {
      y = wrap(y);
      if (y >= centre) {
        r = y - tip_r;
        return true;
      }
      r = tip_l - y;
      return false;
    };
    rm.warp = [=](double y) {
      double r;
      if (rsel(y, r)) return right.warp(r);
      Warp w = left.warp(r);
      return Warp{w.f, -w.df, w.ddf};
    };
    rm.spacing = [=](double y) {
      double r;
      if (rsel(y, r)) return right.spacing(r);
      Jet s = left.spacing(r);
      return Jet{s.v, -s.d1, s.d2};
    };
    rm.rho = [=](double y) {
      double r;
      return rsel(y, r) ? right.rho(r) : left.rho(r);
    };
    rm.beta = [=](double y) {
      double r;
      return rsel(y, r) ? right.beta(r) : left.beta(r);
    };
    rm.weight_correction = [=](double y) {
      double r;
      return rsel(y, r) ? right.correction(r) : left.correction(r);
    };
    rm.region = [=](double y) {
      double r;
      return rsel(y, r) ? right.region(r) : left.region(r);
    };
    g.necks = {{tip_r, 1}, {tip_l, -1}};
    g.neck_warp = right.warp;
    g.hat_warp = right.hat_warp;
    return g;
  }
  throw Error(ErrorCode::invalid_argument, "unsupported number of marked ends");
}

CutoffEta::CutoffEta(double t, double a, double b) : t_(t), a_(a), b_(b) {
  if (!(t > 0 && t < 1)) throw Error(ErrorCode::invalid_argument, "cutoff needs 0 < t < 1");
  if (!(b > 0 && b < a)) throw Error(ErrorCode::invalid_argument, "cutoff needs 0 < b < a");
  log_t_ = std::log(t);
}

Jet CutoffEta::scaled(double r) const {
  const double s = std::log(r) / log_t_;
  // eta(s) = 1 - step((s - b)/(a - b)) is decreasing in s
  const double w = a_ - b_;
  Jet st = smooth_step((s - b_) / w);
  const double e1 = -st.d1 / w, e2 = -st.d2 / (w * w);
  return {1.0 - st.v, e1 / log_t_, e2 / (log_t_ * log_t_) - e1 / log_t_};
}

Jet CutoffEta::operator()(double r) const {
  Jet s = scaled(r);
  return {s.v, s.d1 / r, s.d2 / (r * r)};
}

std::vector<NeckRow> neck_convergence_check(const GluedModel& g, int j_max, int samples) {
  if (j_max < 0 || j_max > 2) throw Error(ErrorCode::invalid_argument, "j_max must be in [0,2]");
  const double lo = std::log(g.t * g.r_hat), hi = g.params.b * std::log(g.t);
  std::vector<NeckRow> rows;
  for (int j = 0; j <= j_max; ++j) rows.push_back({j, 0.0});
  for (int i = 0; i <= samples; ++i) {
    const double r = std::exp(lo + (hi - lo) * i / samples);
    const Warp a = g.neck_warp(r), b = g.hat_warp(r);
    const double norm = b.f * b.f;
    const double d0 = a.f * a.f - norm;
    const double d1 = 2 * (a.f * a.df - b.f * b.df);
    const double d2 = 2 * (a.df * a.df + a.f * a.ddf - b.df * b.df - b.f * b.ddf);
    const double vals[3] = {std::abs(d0), r * std::abs(d1), r * r * std::abs(d2)};
    for (int j = 0; j <= j_max; ++j) rows[j].sup = std::max(rows[j].sup, vals[j] / norm);
  }
  return rows;
}

}  // namespace conifold
