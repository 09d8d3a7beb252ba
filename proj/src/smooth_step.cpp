#include "conifold/smooth_step.hpp"

#include <cmath>

namespace conifold {

namespace {

// psi(u) = exp(-1/u) for u > 0, with its first two derivatives
Jet psi(double u) {
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  const double v = std::exp(-1.0 / u);
  const double u2 = u * u;
  return {v, v / u2, v * (1.0 / (u2 * u2) - 2.0 / (u2 * u))};
}

}  // namespace

Jet smooth_step(double u) {
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  if (u >= 1.0) return {1.0, 0.0, 0.0};
  const Jet a = psi(u);
  Jet b = psi(1.0 - u);
  b.d1 = -b.d1;  // chain rule for 1-u
  const double s = a.v + b.v;
  const double num = a.d1 * b.v - a.v * b.d1;
  const double dnum = a.d2 * b.v - a.v * b.d2;
  const double den = s * s;
  const double dden = 2.0 * s * (a.d1 + b.d1);
  return {a.v / s, num / den, (dnum * den - num * dden) / (den * den)};
}

}  // namespace conifold
