#pragma once

#include <Eigen/SparseCore>
#include <optional>
#include <vector>

#include "conifold/conifold_model.hpp"
#include "conifold/pencil.hpp"
#include "conifold/radial_grid.hpp"
#include "conifold/weighted_calc.hpp"

namespace conifold {

// free: boundary value is an unknown with no equation (both local solutions
// admissible). robin: du/dr = gamma u / r in the end's own radius.
enum class Closure { free, dirichlet, neumann, robin, periodic };
const char* to_string(Closure c);

struct EndClosure {
  Closure type = Closure::free;
  double gamma = 0.0;
};

// Closure matching the homogeneous solutions of mode e admitted by weight beta.
EndClosure admissible_closure(const Boundary& b, double e, int m, double beta);

// A_e u = -u'' - (m-1)(f'/f) u' + (e/f^2) u in conservative finite-volume form.
struct ModeOperator {
  double eigenvalue = 0.0;
  EndClosure left;
  EndClosure right;
  Eigen::SparseMatrix<double> nodal;  // n x n, empty rows where no equation is imposed
  Eigen::SparseMatrix<double> embed;  // nodal values from unknowns
  std::vector<Eigen::Index> rows;     // nodes that carry an equation

  Eigen::Index unknowns() const { return embed.cols(); }
  Eigen::SparseMatrix<double> reduced() const;  // rows x unknowns
  // A applied to nodal values, restricted to the equation rows.
  Eigen::VectorXd apply(const Eigen::VectorXd& nodal_values) const;
};

ModeOperator assemble_mode_operator(const RadialModel& model, const RadialGrid& grid, double e,
                                    const EndClosure& left, const EndClosure& right);
// Closures chosen by admissible_closure, at the model's end weights or a constant beta.
ModeOperator assemble_mode_operator(const RadialModel& model, const RadialGrid& grid, double e,
                                    std::optional<double> beta = std::nullopt);
ModeOperator assemble_mode_operator(const GluedModel& glued, const RadialGrid& grid, double e,
                                    std::optional<double> beta = std::nullopt);

// Same operator in pointwise (non-conservative) form, for independent residuals.
Eigen::VectorXd pointwise_laplacian(const NormContext& ctx, double e, const Eigen::VectorXd& u);

struct ConeHarmonics {
  double plus;
  double minus;
  long mult;
};

ConeHarmonics harmonic_basis_cone(const Link& link, int m, double e);

// max over interior nodes of |r^2 A r^gamma| / r^gamma for both roots, on an
// exact cone sampled with mapped step h (both discretisations).
double cone_consistency_residual(const Link& link, int m, double e, double h);
// 10 x the largest consistency residual over the modes up to max_eigenvalue.
double near_null_threshold(const Link& link, int m, double max_eigenvalue, double h);

// Weighted quadratic forms of one mode on the unknowns of a ModeOperator.
struct ModeForms {
  Eigen::SparseMatrix<double> sobolev2;   // ||u||^2_{W_{2,beta}}
  Eigen::SparseMatrix<double> sobolev1;   // ||u||^2_{W_{1,beta}}
  Eigen::SparseMatrix<double> gradient;   // ||du||^2_{L_{beta-1}}
  Eigen::SparseMatrix<double> laplacian;  // ||A u||^2_{L_{beta-2}}
  Eigen::SparseMatrix<double> laplacian_factor;  // C with laplacian = C^T C
};

ModeForms mode_forms(const NormContext& ctx, const ModeOperator& op,
                     std::optional<double> beta = std::nullopt);

struct SolverOptions {
  double max_eigenvalue = 12.0;
  GridSpec grid;
  std::optional<double> beta;  // constant weight instead of the model's own
  PencilOptions pencil;
};

struct ModeSigma {
  double eigenvalue;
  long mult;
  std::vector<double> sigmas;  // smallest generalised singular values, ascending
  EndClosure left;
  EndClosure right;
};

struct InvertibilityReport {
  double constant = 0.0;   // 1 / sigma_min
  double sigma_min = 0.0;
  std::vector<ModeSigma> modes;
  std::size_t grid_size = 0;
  double h = 0.0;
  bool near_exceptional = false;
};

// sigma_min = min over modes of min ||A u||_{0,beta-2} / ||u||_{2,beta}.
InvertibilityReport invertibility_constant(const RadialModel& model, const SolverOptions& opt);
InvertibilityReport invertibility_constant(const GluedModel& glued, const SolverOptions& opt);

struct CompactReport {
  double constant = 0.0;             // 1 / constrained sigma_min over all modes
  double sigma_min = 0.0;
  double unconstrained_sigma0 = 0.0; // mode 0 without the constraint
  double threshold = 0.0;
  bool constants_detected = false;
  std::vector<ModeSigma> modes;      // mode 0 entry is the constrained one
  std::size_t grid_size = 0;
};

// Mode 0 restricted to {int_K eta_t u vol = 0} over the host core K.
CompactReport restricted_invertibility_compact(const GluedModel& glued, const SolverOptions& opt);

struct PoincareReport {
  double constant = 0.0;  // max over modes of ||u||_{W_{1,beta}} / ||du||_{L_{beta-1}}
  std::vector<std::pair<double, double>> per_mode;  // (eigenvalue, ratio)
  std::size_t grid_size = 0;
};

PoincareReport poincare_constant(const RadialModel& model, const SolverOptions& opt);
PoincareReport poincare_constant(const GluedModel& glued, const SolverOptions& opt);

// ||u||_{W_{1,beta}} / ||du||_{L_{beta-1}}, infinite when du vanishes.
double poincare_quotient(const ModeFunction& u, const NormContext& ctx,
                         std::optional<double> beta = std::nullopt);

struct KernelScanRow {
  double beta;
  long dimension;
  double threshold;
  bool ambiguous;  // some sigma within a factor 3 of the threshold
  std::vector<ModeSigma> modes;
};

std::vector<KernelScanRow> kernel_dimension_scan(const RadialModel& model,
                                                 const std::vector<double>& betas,
                                                 const SolverOptions& opt);

struct CrossingOptions {
  GridSpec grid;
  double nu = -2.0;
  double slack = 0.2;
  double fit_lo = 10.0;   // radius window of the remainder slope fit
  double fit_hi = 100.0;
  bool cutoff = true;     // extend r^gamma by a cutoff; off for globally defined r^gamma
};

struct CrossingReport {
  ModeFunction candidate;
  std::vector<double> correction;  // u_sigma
  double solve_beta = 0.0;
  double slope = 0.0;              // of log|candidate - r^gamma| against log r
  bool remainder_vanishes = false;
  double slope_bound = 0.0;
  bool slope_ok = false;
  double residual = 0.0;           // ||A candidate|| / ||candidate|| just above gamma
  double threshold = 0.0;
  bool residual_ok = false;
};

CrossingReport weight_crossing_kernel(const RadialModel& model, double gamma, double e,
                                      const CrossingOptions& opt = {});

}  // namespace conifold
