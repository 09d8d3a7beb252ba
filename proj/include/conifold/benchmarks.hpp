#pragma once

#include <string>

#include "conifold/conifold_model.hpp"

namespace conifold {

// Exact cone over S^2 (m = 3), CS end marked at epsilon = 2, AC end at R = 2.
ConifoldModel dumbbell_host();
// Hyperboloid(1) over S^2 with its right AC end marked at Rhat = 1.
ConifoldModel dumbbell_partner();
GluedModel dumbbell(double t, const GlueParams& params = {});

// Sine spindle over S^2 with both CS ends marked at epsilon = 1.2.
ConifoldModel spindle_host();
// Hyperboloid(1) with both AC ends marked.
ConifoldModel spindle_partner();
GluedModel spindle(double t, const GlueParams& params = {});

// Capped hyperboloid over S^2: one AC end (R = 2, nu = -2).
ConifoldModel capped_hyperboloid_model(double c = 1.0);

// Exact cone glued into an exact cone: the neck metric is exactly conical.
GluedModel exact_cone_gluing(double t, const GlueParams& params = {});

// All weights on the benchmarks are -0.5.
constexpr double kBenchmarkWeight = -0.5;

// "dumbbell", "spindle", "capped_hyperboloid", "exact_cone_gluing" for glued or
// plain presets; plain shape presets are wrapped with default end data.
bool is_glued_preset(const std::string& name);
GluedModel glued_preset(const std::string& name, double t, const GlueParams& params = {});
ConifoldModel model_preset(const std::string& name, int m = 3);

}  // namespace conifold
