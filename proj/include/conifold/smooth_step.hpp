#pragma once

namespace conifold {

// Value and first two derivatives of a scalar function at a point.
struct Jet {
  double v;
  double d1;
  double d2;
};

// C-infinity step: 0 for u <= 0, 1 for u >= 1, monotone in between.
Jet smooth_step(double u);

}  // namespace conifold
