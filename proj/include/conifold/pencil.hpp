#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <optional>
#include <vector>

namespace conifold {

// Smallest eigenpairs of the symmetric pencil B x = lambda G x with G positive
// definite, optionally restricted to {x : c.x = 0}.
struct PencilOptions {
  int count = 3;
  int max_steps = 90;
  double shift = 1e-8;   // K = B + shift G is factorised
  double tol = 1e-11;    // relative Ritz residual for convergence
  std::uint64_t seed = 20240229;
};

struct PencilResult {
  std::vector<double> values;  // ascending
  std::vector<Eigen::VectorXd> vectors;
  bool converged = false;
  int steps = 0;
};

PencilResult smallest_eigenpairs(const Eigen::SparseMatrix<double>& B,
                                 const Eigen::SparseMatrix<double>& G,
                                 const std::optional<Eigen::VectorXd>& constraint = std::nullopt,
                                 const PencilOptions& opt = {});

// Same with B = C^T C, formed in extended precision so exact null vectors of C
// keep a Rayleigh quotient at roundoff level.
PencilResult smallest_eigenpairs_gram(const Eigen::SparseMatrix<double>& C,
                                      const Eigen::SparseMatrix<double>& G,
                                      const std::optional<Eigen::VectorXd>& constraint = std::nullopt,
                                      const PencilOptions& opt = {});

// Dense reference solver for small problems.
PencilResult dense_smallest_eigenpairs(const Eigen::MatrixXd& B, const Eigen::MatrixXd& G,
                                       const std::optional<Eigen::VectorXd>& constraint,
                                       int count);

}  // namespace conifold
