#pragma once

#include <Eigen/SparseCore>
#include <cstddef>
#include <vector>

#include "conifold/conifold_model.hpp"

namespace conifold {

struct GridSpec {
  int nodes_per_region = 400;
  double r_max = 1e3;  // AC truncation radius
  double r_min = 1e-3; // CS truncation radius
};

struct RegionSpan {
  Region region;
  std::size_t begin;
  std::size_t end;  // one past the last node
};

// Nodes x_i = X(xi_i) on a uniform grid in a smooth mapped coordinate xi with
// dX/dxi = spacing(X). On ends the spacing is ~ r, so xi ~ log r there.
class RadialGrid {
 public:
  static RadialGrid build(const RadialModel& model, const GridSpec& spec = {});
  // Same nodes pushed forward by x -> t x, for matched-quadrature comparisons.
  RadialGrid rescaled(double t) const;

  std::size_t size() const { return x.size(); }

  double h = 0.0;
  bool periodic = false;
  double period = 0.0;     // in x, periodic grids only
  std::vector<double> x;   // nodes
  std::vector<double> s;   // dx/dxi at nodes
  std::vector<double> ds;  // d(dx/dxi)/dx at nodes
  std::vector<double> x_half;  // x at xi_i + h/2, size n-1 (n if periodic)
  std::vector<double> w;       // trapezoid weights in x
  std::vector<Region> label;
  std::vector<RegionSpan> regions;
};

// Pointwise geometry of a model sampled on a grid.
struct GridGeometry {
  std::vector<double> f, df, ddf, rho, log_w;
};

GridGeometry sample_geometry(const RadialModel& model, const RadialGrid& grid);

// Second-order x-derivatives of nodal values (one-sided at non-periodic ends).
struct DerivativeOps {
  Eigen::SparseMatrix<double> d1;
  Eigen::SparseMatrix<double> d2;
};

DerivativeOps derivative_ops(const RadialGrid& grid);

}  // namespace conifold
