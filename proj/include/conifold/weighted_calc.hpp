#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "conifold/radial_grid.hpp"

namespace conifold {

// u(x, theta) = sum of profile(x) sigma(theta) over L^2-normalised link
// eigenfunctions sigma; distinct entries are orthogonal eigenfunctions.
struct ModeComponent {
  double eigenvalue = 0.0;
  std::vector<double> profile;
};

struct ModeFunction {
  std::vector<ModeComponent> modes;

  static ModeFunction single(double eigenvalue, std::vector<double> profile);
  // The constant function `value`, i.e. profile value * sqrt(vol(link)) in mode 0.
  static ModeFunction constant(const Link& link, std::size_t nodes, double value);
  ModeFunction scaled(double c) const;
};

struct WeightSpec {
  double p = 2.0;
  int k = 0;
  std::optional<double> beta;      // constant weight; otherwise the model's own weight
  std::optional<double> beta_ref;  // reference weight for rescaling comparisons
};

struct NormReport {
  double value = 0.0;            // truncated-domain quadrature
  double value_with_tail = 0.0;  // plus the extrapolated power-law tails
  bool tail_flag = false;        // some tail does not decay
};

// Model, grid and sampled geometry bundled so repeated evaluations are cheap.
class NormContext {
 public:
  NormContext(RadialModel model, RadialGrid grid);
  NormContext(RadialModel model, const GridSpec& spec);

  const RadialModel& model() const { return model_; }
  const RadialGrid& grid() const { return grid_; }
  const GridGeometry& geometry() const { return geo_; }
  const DerivativeOps& ops() const { return ops_; }
  double log_weight(std::size_t i, std::optional<double> beta) const;

 private:
  RadialModel model_;
  RadialGrid grid_;
  GridGeometry geo_;
  DerivativeOps ops_;
};

// Link-integrated |Hess(u sigma)|^2 for a unit eigenfunction sigma with
// eigenvalue e on an Einstein link: u''^2 + xx u'^2 + 2 ux u u' + uu u^2.
struct HessianCoefficients {
  double uu;
  double ux;
  double xx;
};

HessianCoefficients hessian_coefficients(double e, double f, double df, int m, double einstein);

NormReport weighted_sobolev_norm(const ModeFunction& u, const NormContext& ctx,
                                 const WeightSpec& spec);

// ||du||_{L^p_{beta-1}}: the first-derivative part of the W_{1,beta} norm.
NormReport weighted_gradient_norm(const ModeFunction& u, const NormContext& ctx, double p,
                                  std::optional<double> beta = std::nullopt);

struct CkReport {
  double value = 0.0;
  bool divergent = false;  // the sup keeps growing towards an end truncation
};

CkReport weighted_ck_norm(const ModeFunction& u, const NormContext& ctx, int k,
                          std::optional<double> beta = std::nullopt);

// |t^beta' ||u||_rescaled - ||u||| / ||u|| with the nodes mapped by x -> t x.
double rescaling_invariance_check(const ModeFunction& u, const RadialModel& model,
                                  const RadialGrid& grid, const WeightSpec& spec, double t);

struct HolderReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool violated = false;
};

// Products are formed pointwise, so both factors must be mode-0 functions.
HolderReport holder_check(const ModeFunction& u, const ModeFunction& v, const NormContext& ctx,
                          double p, double beta1, double beta2);

struct BanachReport {
  double lhs = 0.0;
  double rhs_ratio = 0.0;
};

BanachReport banach_algebra_check(const ModeFunction& u, const ModeFunction& v,
                                  const NormContext& ctx, double p, double beta1, double beta2);

ModeFunction product(const ModeFunction& u, const ModeFunction& v, const Link& link);

struct BumpOptions {
  double spacing = 0.75;    // centre spacing in the mapped coordinate
  double half_width = 1.0;  // support half-width in the mapped coordinate
  std::vector<double> eigenvalues{0.0};  // one member per centre and eigenvalue
  double anchor_x = 0.0;    // a centre sits at this coordinate
};

struct Bump {
  double centre_xi;
  double centre_x;
  Region region;
  ModeFunction u;
};

// Smooth bumps of fixed width in the mapped coordinate (so width ~ rho on ends),
// on a lattice of centres anchored at `anchor_x`, fully inside the grid.
std::vector<Bump> bump_family(const NormContext& ctx, const BumpOptions& opt);

struct EmbeddingReport {
  double max_ratio = 0.0;
  std::size_t argmax = 0;
  std::vector<double> ratios;
};

// max over the family of ||u||_{L^{p*}_beta} / ||u||_{W^p_{1,beta}}, a lower
// bound for the best embedding constant.
EmbeddingReport embedding_constant_estimate(const NormContext& ctx, double p, double beta,
                                            const std::vector<Bump>& family);

// Same family, ratio ||u||_{L^{p*}_beta} / ||du||_{L^p_{beta-1}}.
EmbeddingReport gns_constant_estimate(const NormContext& ctx, double p, double beta,
                                      const std::vector<Bump>& family);

}  // namespace conifold
