#include <doctest.h>

#include <cmath>

#include "conifold/benchmarks.hpp"
#include "conifold/conifold_model.hpp"
#include "conifold/error.hpp"

using namespace conifold;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

// f', f'' from the profile itself by central differences
void check_derivatives(const Shape& s, std::initializer_list<double> xs) {
  for (double x : xs) {
    const double h = 1e-4 * std::max(1.0, std::abs(x));
    const Warp w = s.warp(x), p = s.warp(x + h), m = s.warp(x - h);
    CHECK(w.df == doctest::Approx((p.f - m.f) / (2 * h)).epsilon(1e-6));
    CHECK(w.ddf == doctest::Approx((p.f - 2 * w.f + m.f) / (h * h)).epsilon(1e-4).scale(1e-3));
  }
}

ConifoldModel one_end(Shape s, EndSpec e, Link link = Link::sphere(2)) {
  ConifoldModel m;
  m.components.push_back({std::move(s), std::move(link), {e}});
  return m;
}

}  // namespace

TEST_CASE("profile presets carry consistent derivatives") {
  check_derivatives(hyperboloid(1.3), {-3.0, -0.2, 0.0, 0.7, 12.0});
  check_derivatives(capped_hyperboloid(1.0), {0.05, 0.5, 1.0, 3.0, 40.0});
  check_derivatives(sine_spindle(), {0.1, 1.0, 2.5});
  check_derivatives(perturbed_cone(0.1, -2.0), {1.5, 4.0, 30.0});
  check_derivatives(perturbed_cone(0.2, 2.0), {0.05, 0.3, 0.9});
  check_derivatives(exact_cone(), {0.1, 5.0});
}

TEST_CASE("capped hyperboloid closes smoothly and is asymptotically conical") {
  const Shape s = capped_hyperboloid(1.0);
  CHECK(s.warp(0.0).f == 0.0);
  CHECK(s.warp(0.0).df == doctest::Approx(1.0));
  CHECK(s.warp(0.0).ddf == doctest::Approx(0.0));
  // f/r - 1 ~ c^2 / (2 r^2)
  for (double r : {50.0, 200.0})
    CHECK((s.warp(r).f / r - 1.0) * r * r == doctest::Approx(0.5).epsilon(1e-2));
}

TEST_CASE("shape presets by name") {
  CHECK(shape_preset("hyperboloid(2)").warp(0.0).f == doctest::Approx(2.0));
  CHECK(shape_preset("perturbed_cone(0.1,-2)").warp(2.0).f == doctest::Approx(2.0 * 1.025));
  CHECK(shape_preset("sine_spindle").hi == doctest::Approx(M_PI));
  CHECK(code_of([] { shape_preset("torus_knot"); }) == ErrorCode::config);
  CHECK(code_of([] { shape_preset("hyperboloid(x)"); }) == ErrorCode::config);
  CHECK(code_of([] { hyperboloid(0.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("model validation rejects inconsistent end data") {
  EndSpec ac{EndKind::AC, -2.0, -0.5, 2.0, false};
  CHECK_NOTHROW(validate(one_end(capped_hyperboloid(1.0), ac)));
  EndSpec bad_rate = ac;
  bad_rate.nu = 1.0;
  CHECK(code_of([&] { validate(one_end(capped_hyperboloid(1.0), bad_rate)); }) ==
        ErrorCode::invalid_argument);
  EndSpec bad_kind = ac;
  bad_kind.kind = EndKind::CS;
  bad_kind.nu = 2.0;
  CHECK(code_of([&] { validate(one_end(capped_hyperboloid(1.0), bad_kind)); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([&] { validate(one_end(capped_hyperboloid(1.0), ac, Link::sphere(3))); }) ==
        ErrorCode::invalid_argument);
  ConifoldModel two = one_end(capped_hyperboloid(1.0), ac);
  two.components[0].ends.push_back(ac);
  CHECK(code_of([&] { validate(two); }) == ErrorCode::invalid_argument);
}

TEST_CASE("manifold kinds, end types and weights") {
  CHECK(manifold_kind(capped_hyperboloid_model()) == ManifoldKind::AC);
  CHECK(manifold_kind(dumbbell_host()) == ManifoldKind::CSAC);
  CHECK(manifold_kind(spindle_host()) == ManifoldKind::CS);
  CHECK(end_types(dumbbell_partner()).size() == 2);
  CHECK(end_weights(spindle_host()) == std::vector<double>{-0.5, -0.5});
}

TEST_CASE("rescaling multiplies the warp and the charts by t") {
  const ConifoldModel m = capped_hyperboloid_model();
  const ConifoldModel s = rescale(m, 0.25);
  const Shape& a = m.components[0].shape;
  const Shape& b = s.components[0].shape;
  for (double x : {0.3, 1.0, 7.0}) {
    CHECK(b.warp(0.25 * x).f == doctest::Approx(0.25 * a.warp(x).f));
    CHECK(b.warp(0.25 * x).df == doctest::Approx(a.warp(x).df));
    CHECK(b.warp(0.25 * x).ddf == doctest::Approx(a.warp(x).ddf / 0.25));
  }
  CHECK(s.components[0].ends[0].boundary == doctest::Approx(0.5));
  const RadialModel r = rescale(to_radial(m), 0.25);
  CHECK(r.rho(0.25 * 10.0) == doctest::Approx(0.25 * to_radial(m).rho(10.0)));
  CHECK(code_of([&] { rescale(m, 0.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("radial model regions and radius function") {
  const RadialModel r = to_radial(capped_hyperboloid_model());
  CHECK(r.region(1.0) == Region::core);
  CHECK(r.region(5.0) == Region::end);
  CHECK(r.rho(5.0) == doctest::Approx(5.0));
  CHECK(r.beta(5.0) == doctest::Approx(-0.5));
  CHECK(!r.compact());
  CHECK(r.ends().size() == 1);
}

TEST_CASE("compatibility of marked pairs") {
  CHECK(check_compatible(dumbbell_host(), dumbbell_partner()).pass);
  CHECK(check_compatible(spindle_host(), spindle_partner()).pass);

  ConifoldModel far = dumbbell_partner();
  far.components[0].ends[1].boundary = 3.0;  // Rhat >= epsilon
  auto rep = check_compatible(dumbbell_host(), far);
  REQUIRE(!rep.pass);
  CHECK(rep.first_failure()->code == ErrorCode::boundary_order);

  ConifoldModel w = dumbbell_partner();
  w.components[0].ends[1].beta = -0.25;
  CHECK(check_compatible(dumbbell_host(), w).first_failure()->code == ErrorCode::weight_mismatch);

  ConifoldModel l = dumbbell_partner();
  l.components[0].link = Link::sphere(2, 2.0);
  CHECK(check_compatible(dumbbell_host(), l).first_failure()->code == ErrorCode::link_mismatch);

  // no marked ends on the partner
  CHECK(!check_compatible(dumbbell_host(), capped_hyperboloid_model()).pass);
}

TEST_CASE("glued dumbbell reproduces both pieces away from the band") {
  const double t = 1e-3;
  const GluedModel g = dumbbell(t);
  const double band = std::pow(t, g.params.tau);
  // host is the exact cone, partner the hyperboloid: t fhat(r/t) = sqrt(r^2 + t^2)
  for (double r : {0.5 * band, 0.1 * band, 2 * t}) {
    CHECK(g.neck_warp(r).f == doctest::Approx(std::hypot(r, t)).epsilon(1e-12));
    CHECK(g.hat_warp(r).f == doctest::Approx(std::hypot(r, t)).epsilon(1e-12));
  }
  for (double r : {2.5 * band, 0.5, 1.5}) CHECK(g.neck_warp(r).f == doctest::Approx(r));
  // blend stays between the two
  const double r = 1.5 * band;
  CHECK(g.neck_warp(r).f >= r);
  CHECK(g.neck_warp(r).f <= std::hypot(r, t));
  CHECK(!g.model.compact());
  CHECK(spindle(1e-2).model.compact());
}

TEST_CASE("gluing preconditions") {
  CHECK(code_of([] { spindle(0.5); }) == ErrorCode::t_too_large);  // 2 t^tau > epsilon = 1.2
  CHECK(code_of([] { dumbbell(0.0); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] { dumbbell(1e-2, GlueParams{0.5, 0.2, 0.4}); }) == ErrorCode::invalid_argument);
  CHECK(code_of([] {
          parametric_connect_sum(spindle_host(), spindle_partner(), {1e-2, 2e-2});
        }) == ErrorCode::invalid_argument);
}

TEST_CASE("cutoff eta") {
  const double a = 0.4, b = 0.2;
  for (double t : {1e-1, 1e-3}) {
    const CutoffEta eta(t, a, b);
    CHECK(eta(std::pow(t, a)).v == doctest::Approx(0.0));
    CHECK(eta(std::pow(t, b)).v == doctest::Approx(1.0));
    CHECK(eta(0.5 * std::pow(t, a)).v == 0.0);
    CHECK(eta(2.0 * std::pow(t, b)).v == 1.0);
    double prev = -1;
    for (int i = 0; i <= 100; ++i) {
      const double r = std::pow(t, a + (b - a) * i / 100.0);
      const Jet j = eta(r);
      CHECK(j.v >= prev);
      prev = j.v;
      const double h = 1e-5 * r;
      CHECK(j.d1 == doctest::Approx((eta(r + h).v - eta(r - h).v) / (2 * h)).scale(1.0 / r).epsilon(1e-5));
    }
  }
  // max |r eta'| scales like 1/|log t|: ratio 2 between 1e-2 and 1e-4
  auto peak = [&](double t) {
    const CutoffEta eta(t, a, b);
    double m = 0;
    for (int i = 0; i <= 20000; ++i) m = std::max(m, std::abs(eta.scaled(std::pow(t, b + (a - b) * i / 20000.0)).d1));
    return m;
  };
  CHECK(peak(1e-2) / peak(1e-4) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(code_of([] { CutoffEta(0.1, 0.2, 0.4); }) == ErrorCode::invalid_argument);
}

TEST_CASE("neck convergence") {
  double prev0 = INFINITY, prev1 = INFINITY;
  for (double t : {1e-1, 1e-2, 1e-3}) {
    const auto rows = neck_convergence_check(dumbbell(t), 2);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].sup < prev0);
    CHECK(rows[1].sup < prev1);
    prev0 = rows[0].sup;
    prev1 = rows[1].sup;
    // the exact cone glued into itself agrees to rounding
    for (const auto& row : neck_convergence_check(exact_cone_gluing(t), 2)) CHECK(row.sup < 1e-13);
  }
  CHECK(code_of([] { neck_convergence_check(dumbbell(1e-2), 3); }) == ErrorCode::invalid_argument);
}
