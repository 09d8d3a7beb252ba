#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conifold/error.hpp"
#include "conifold/link_spectra.hpp"
#include "conifold/smooth_step.hpp"
#include "conifold/weight_calculus.hpp"

namespace conifold {

struct Warp {
  double f;
  double df;
  double ddf;
};

enum class SideType { cap, end, cut, periodic };

// One side of a radial interval. On an end, the cone radius is dir*(x - anchor).
struct Side {
  SideType type = SideType::cut;
  EndKind kind = EndKind::AC;
  double anchor = 0.0;
  int dir = 1;
  double local_r(double x) const { return dir * (x - anchor); }
};

// Warp profile of one component in its own coordinate x, together with the
// smooth grid spacing dx/dxi the discretisation should follow.
struct Shape {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;  // infinite on AC sides
  Side left;
  Side right;
  std::function<Warp(double)> warp;
  std::function<Jet(double)> spacing;  // v = dx/dxi, d1 = d/dx of it
};

Shape exact_cone();
Shape hyperboloid(double c);
Shape capped_hyperboloid(double c);
Shape sine_spindle();
Shape perturbed_cone(double c, double nu);
Shape spline_profile(std::vector<double> x, std::vector<double> f);
// "exact_cone", "hyperboloid(2)", "perturbed_cone(0.1,-2)", ...
Shape shape_preset(const std::string& spec);

struct EndSpec {
  EndKind kind = EndKind::AC;
  double nu = -2.0;
  double beta = -0.5;
  double boundary = 1.0;  // epsilon on CS ends, R on AC ends
  bool marked = false;
};

struct Component {
  Shape shape;
  Link link = Link::sphere(2);
  std::vector<EndSpec> ends;  // ordered left to right over the end sides
};

struct ConifoldModel {
  int m = 3;
  std::vector<Component> components;
  std::string name;
  // Accumulated rescaling and the reference weight used for the correction
  // factor t^(beta - beta_ref) in the weight function.
  double log_scale = 0.0;
  std::optional<double> beta_ref;
};

// Throws on inconsistent end data (rates, boundaries, link dimension, markings).
void validate(const ConifoldModel& model);

ManifoldKind manifold_kind(const ConifoldModel& model);
std::vector<EndType> end_types(const ConifoldModel& model);
std::vector<double> end_weights(const ConifoldModel& model);

ConifoldModel rescale(const ConifoldModel& model, double t,
                      std::optional<double> beta_ref = std::nullopt);

enum class Region { core, end, neck, hat_core, hat_end };
const char* to_string(Region r);

struct Boundary {
  SideType type = SideType::cut;
  EndKind kind = EndKind::AC;
  double anchor = 0.0;
  int dir = 1;
  double beta = 0.0;
  double nu = 0.0;
  double chart = 1.0;  // epsilon or R
  bool marked = false;
  double local_r(double x) const { return dir * (x - anchor); }
  bool is_end() const { return type == SideType::end; }
};

// Everything the discretisation needs about one connected radial domain.
struct RadialModel {
  int m = 3;
  Link link = Link::sphere(2);
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool periodic = false;
  Boundary left;
  Boundary right;
  std::function<Warp(double)> warp;
  std::function<Jet(double)> spacing;
  std::function<double(double)> rho;
  std::function<double(double)> beta;
  std::function<double(double)> weight_correction;  // added to log w
  std::function<Region(double)> region;

  double log_weight(double x) const { return -beta(x) * std::log(rho(x)) + weight_correction(x); }
  bool compact() const { return !left.is_end() && !right.is_end(); }
  std::vector<Boundary> ends() const;
};

RadialModel to_radial(const ConifoldModel& model, std::size_t component = 0);

// Model of (t^2 g, t rho); with beta_ref the weight picks up t^(beta - beta_ref).
RadialModel rescale(const RadialModel& model, double t,
                    std::optional<double> beta_ref = std::nullopt);

struct CompatibilityItem {
  ErrorCode code;
  bool ok;
  std::string detail;
};

struct CompatibilityReport {
  bool pass = true;
  std::vector<CompatibilityItem> items;
  const CompatibilityItem* first_failure() const;
};

CompatibilityReport check_compatible(const ConifoldModel& host, const ConifoldModel& hat);

struct GlueParams {
  double tau = 0.5;
  double a = 0.4;
  double b = 0.2;
};

// Blend used on [t^tau, 2 t^tau]: f_t^2 = chi (t fhat)^2 + (1 - chi) f^2, with
// chi = 1 - step(log2(r / t^tau)).
struct InterpolationRule {
  std::function<Jet(double)> step = smooth_step;
};

struct Neck {
  double tip;  // glued coordinate of the collapsed cone tip
  int dir;     // neck radius r = dir * (y - tip)
  double radius(double y) const { return dir * (y - tip); }
};

struct GluedModel {
  RadialModel model;
  double t = 0.1;
  GlueParams params;
  double r_hat = 1.0;
  double epsilon = 1.0;
  double marked_beta = 0.0;
  std::vector<Neck> necks;
  // Warps of the glued metric and of the rescaled partner t fhat(r/t), both as
  // functions of the radius along the first neck.
  std::function<Warp(double)> neck_warp;
  std::function<Warp(double)> hat_warp;
  // Weights on the unglued pieces, checked before gluing.
  std::vector<EndType> host_ends;
  std::vector<double> host_betas;
  std::vector<bool> host_marked;
  std::vector<EndType> hat_ends;
  std::vector<double> hat_betas;
  std::vector<bool> hat_marked;
};

GluedModel parametric_connect_sum(const ConifoldModel& host, const ConifoldModel& hat,
                                  const std::vector<double>& t, const GlueParams& params = {},
                                  const InterpolationRule& rule = {});

// eta_t(r) = eta(log r / log t): 0 for r <= t^a, 1 for r >= t^b.
class CutoffEta {
 public:
  CutoffEta(double t, double a, double b);
  Jet operator()(double r) const;  // derivatives in r
  // r eta_t' and r^2 eta_t'' directly, which stay accurate for tiny r
  Jet scaled(double r) const;
  double t() const { return t_; }
  double a() const { return a_; }
  double b() const { return b_; }

 private:
  double t_, a_, b_, log_t_;
};

struct NeckRow {
  int j;
  double sup;
};

// sup over r in [t Rhat, t^b] of |r^j d^j(f_t^2 - (t fhat)^2)| / (t fhat)^2, j <= j_max.
std::vector<NeckRow> neck_convergence_check(const GluedModel& glued, int j_max,
                                            int samples = 20000);

}  // namespace conifold
