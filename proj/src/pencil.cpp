#include "conifold/pencil.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

#include "conifold/error.hpp"

namespace conifold {

namespace {

// Extended precision keeps the tiny eigenvalues of the squared operator
// resolvable after the factorisation.
using Real = long double;
using SpR = Eigen::SparseMatrix<Real>;
using VecR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

PencilResult lanczos(const SpR& b, const SpR& g, const std::optional<Eigen::VectorXd>& constraint,
                     const PencilOptions& opt);

}  // namespace

PencilResult smallest_eigenpairs(const Eigen::SparseMatrix<double>& B,
                                 const Eigen::SparseMatrix<double>& G,
                                 const std::optional<Eigen::VectorXd>& constraint,
                                 const PencilOptions& opt) {
  if (B.rows() != B.cols())
    throw Error(ErrorCode::invalid_argument, "pencil matrices must be square and of equal size");
  return lanczos(B.cast<Real>(), G.cast<Real>(), constraint, opt);
}

PencilResult smallest_eigenpairs_gram(const Eigen::SparseMatrix<double>& C,
                                      const Eigen::SparseMatrix<double>& G,
                                      const std::optional<Eigen::VectorXd>& constraint,
                                      const PencilOptions& opt) {
  const SpR c = C.cast<Real>();
  const SpR ct = c.transpose();
  return lanczos(ct * c, G.cast<Real>(), constraint, opt);
}

namespace {

PencilResult lanczos(const SpR& B, const SpR& g, const std::optional<Eigen::VectorXd>& constraint,
                     const PencilOptions& opt) {
  const Eigen::Index n = B.rows();
  if (B.cols() != n || g.rows() != n || g.cols() != n || n == 0)
    throw Error(ErrorCode::invalid_argument, "pencil matrices must be square and of equal size");
  if (constraint && constraint->size() != n)
    throw Error(ErrorCode::invalid_argument, "constraint length does not match the pencil");

  SpR k = B + static_cast<Real>(opt.shift) * g;
  k.makeCompressed();
  Eigen::SimplicialLDLT<SpR> solver(k);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::invalid_argument, "pencil factorisation failed");

  VecR kc;
  Real kc_norm = 0;
  VecR c;
  if (constraint) {
    c = constraint->cast<Real>();
    kc = solver.solve(c);
    kc_norm = c.dot(kc);
    if (!(kc_norm > 0)) throw Error(ErrorCode::invalid_argument, "degenerate constraint");
  }
  // shift-invert operator, self-adjoint in the G inner product on c.x = 0
  auto apply = [&](const VecR& v) {
    VecR x = solver.solve(g * v);
    if (constraint) x -= (c.dot(x) / kc_norm) * kc;
    return x;
  };
  auto gdot = [&](const VecR& a, const VecR& b) { return a.dot(g * b); };

  const Eigen::Index dim = constraint ? n - 1 : n;
  const int steps_max = static_cast<int>(std::min<Eigen::Index>(opt.max_steps, dim));
  const int want = static_cast<int>(std::min<Eigen::Index>(opt.count, dim));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  VecR q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = normal(rng);
  q = apply(q);  // lands in the constrained subspace
  q /= std::sqrt(gdot(q, q));

  std::vector<VecR> basis{q};
  std::vector<Real> alpha, beta;
  PencilResult res;
  Eigen::MatrixXd tri_vecs;
  Eigen::VectorXd tri_vals;
  for (int j = 0; j < steps_max; ++j) {
    VecR w = apply(basis[j]);
    alpha.push_back(gdot(basis[j], w));
    // full reorthogonalisation, twice
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) w -= gdot(b, w) * b;
    const Real bnorm = std::sqrt(std::max<Real>(gdot(w, w), 0));
    const int size = j + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(size, size);
    for (int i = 0; i < size; ++i) {
      t(i, i) = static_cast<double>(alpha[i]);
      if (i + 1 < size) t(i, i + 1) = t(i + 1, i) = static_cast<double>(beta[i]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    tri_vals = es.eigenvalues();
    tri_vecs = es.eigenvectors();
    res.steps = size;
    std::vector<int> order(size);
    for (int i = 0; i < size; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(tri_vals[a]) > std::abs(tri_vals[b]);
    });
    const Real scale = std::abs(tri_vals[order[0]]);
    bool ok = size >= want;
    for (int i = 0; ok && i < want; ++i) {
      const double resid = std::abs(static_cast<double>(bnorm) * tri_vecs(size - 1, order[i]));
      if (resid > opt.tol * std::abs(tri_vals[order[i]])) ok = false;
    }
    const bool exhausted = bnorm <= 1e-14L * scale || size == steps_max;
    if (ok || exhausted) {
      res.converged = ok || bnorm <= 1e-14L * scale;
      break;
    }
    beta.push_back(bnorm);
    basis.push_back(w / bnorm);
  }
  // eigenvalues closest to zero have the largest |theta|; roundoff can push an
  // exact null direction slightly below -shift, which flips the sign of theta
  const int size = res.steps;
  std::vector<int> order(size);
  for (int i = 0; i < size; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(tri_vals[a]) > std::abs(tri_vals[b]);
  });
  for (int i = 0; i < std::min(want, size); ++i) {
    const int col = order[i];
    const double theta = tri_vals[col];
    res.values.push_back(std::max(0.0, 1.0 / theta - opt.shift));
    VecR v = VecR::Zero(n);
    for (int j = 0; j < size; ++j) v += static_cast<Real>(tri_vecs(j, col)) * basis[j];
    res.vectors.push_back(v.cast<double>());
  }
  return res;
}

}  // namespace

PencilResult dense_smallest_eigenpairs(const Eigen::MatrixXd& B, const Eigen::MatrixXd& G,
                                       const std::optional<Eigen::VectorXd>& constraint,
                                       int count) {
  const Eigen::Index n = B.rows();
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(n, n);
  if (constraint) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(*constraint);
    Eigen::MatrixXd q = qr.householderQ();
    z = q.rightCols(n - 1);
  }
  Eigen::MatrixXd bz = z.transpose() * B * z, gz = z.transpose() * G * z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(bz, gz);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::invalid_argument, "dense pencil solve failed");
  PencilResult res;
  res.converged = true;
  for (int i = 0; i < std::min<Eigen::Index>(count, bz.rows()); ++i) {
    res.values.push_back(std::max(0.0, es.eigenvalues()[i]));
    res.vectors.push_back(z * es.eigenvectors().col(i));
  }
  return res;
}

}  // namespace conifold
