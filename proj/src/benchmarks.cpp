#include "conifold/benchmarks.hpp"

#include "conifold/error.hpp"

namespace conifold {

namespace {

EndSpec end(EndKind kind, double boundary, bool marked, double nu) {
  EndSpec e;
  e.kind = kind;
  e.boundary = boundary;
  e.marked = marked;
  e.nu = nu;
  e.beta = kBenchmarkWeight;
  return e;
}

ConifoldModel single(Shape shape, std::vector<EndSpec> ends, std::string name) {
  ConifoldModel m;
  m.m = 3;
  m.name = std::move(name);
  m.components.push_back({std::move(shape), Link::sphere(2), std::move(ends)});
  validate(m);
  return m;
}

}  // namespace

ConifoldModel dumbbell_host() {
  return single(exact_cone(), {end(EndKind::CS, 2.0, true, 2.0), end(EndKind::AC, 2.0, false, -2.0)},
                "dumbbell_host");
}

ConifoldModel dumbbell_partner() {
  return single(hyperboloid(1.0),
                {end(EndKind::AC, 1.0, false, -2.0), end(EndKind::AC, 1.0, true, -2.0)},
                "dumbbell_partner");
}

GluedModel dumbbell(double t, const GlueParams& params) {
  GluedModel g = parametric_connect_sum(dumbbell_host(), dumbbell_partner(), {t}, params);
  return g;
}

ConifoldModel spindle_host() {
  return single(sine_spindle(), {end(EndKind::CS, 1.2, true, 2.0), end(EndKind::CS, 1.2, true, 2.0)},
                "spindle_host");
}

ConifoldModel spindle_partner() {
  return single(hyperboloid(1.0),
                {end(EndKind::AC, 1.0, true, -2.0), end(EndKind::AC, 1.0, true, -2.0)},
                "spindle_partner");
}

GluedModel spindle(double t, const GlueParams& params) {
  return parametric_connect_sum(spindle_host(), spindle_partner(), {t, t}, params);
}

ConifoldModel capped_hyperboloid_model(double c) {
  return single(capped_hyperboloid(c), {end(EndKind::AC, 2.0, false, -2.0)}, "capped_hyperboloid");
}

GluedModel exact_cone_gluing(double t, const GlueParams& params) {
  ConifoldModel host = single(exact_cone(), {end(EndKind::CS, 2.0, true, 2.0), end(EndKind::AC, 2.0, false, -2.0)},
                              "cone_host");
  ConifoldModel hat = single(exact_cone(), {end(EndKind::CS, 1.0, false, 2.0), end(EndKind::AC, 1.0, true, -2.0)},
                             "cone_partner");
  return parametric_connect_sum(host, hat, {t}, params);
}

bool is_glued_preset(const std::string& name) {
  return name == "dumbbell" || name == "spindle" || name == "exact_cone_gluing";
}

GluedModel glued_preset(const std::string& name, double t, const GlueParams& params) {
  if (name == "dumbbell") return dumbbell(t, params);
  if (name == "spindle") return spindle(t, params);
  if (name == "exact_cone_gluing") return exact_cone_gluing(t, params);
  throw Error(ErrorCode::config, "unknown glued preset '" + name + "'");
}

ConifoldModel model_preset(const std::string& name, int m) {
  if (name == "capped_hyperboloid" && m == 3) return capped_hyperboloid_model();
  if (name == "dumbbell_host" && m == 3) return dumbbell_host();
  if (name == "dumbbell_partner" && m == 3) return dumbbell_partner();
  if (name == "spindle_host" && m == 3) return spindle_host();
  // generic: a shape preset over the round sphere of dimension m-1 with default end data
  Shape shape = shape_preset(name);
  std::vector<EndSpec> ends;
  for (const Side* s : {&shape.left, &shape.right}) {
    if (s->type != SideType::end) continue;
    const bool ac = s->kind == EndKind::AC;
    ends.push_back(end(s->kind, ac ? 2.0 : 0.5, false, ac ? -2.0 : 2.0));
  }
  ConifoldModel model;
  model.m = m;
  model.name = shape.name;
  model.components.push_back({std::move(shape), Link::sphere(m - 1), std::move(ends)});
  validate(model);
  return model;
}

}  // namespace conifold
