#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "conifold/benchmarks.hpp"
#include "conifold/error.hpp"
#include "conifold/weighted_calc.hpp"

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

// Exact cone over S^2: rho = f = r and xi = log r on the grid, so profiles
// r^beta g(log r) have weighted norms that are plain integrals of g in xi.
NormContext cone_context(int nodes = 2000) {
  GridSpec gs;
  gs.nodes_per_region = nodes;
  return NormContext(to_radial(model_preset("exact_cone")), gs);
}

std::vector<double> sample(const NormContext& ctx, auto fn) {
  std::vector<double> v;
  for (double x : ctx.grid().x) v.push_back(fn(x));
  return v;
}

double integrate(auto fn) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(fn, -12.0, 12.0, 15, 1e-14);
}

}  // namespace

TEST_CASE("mode-0 and mode-e norms on the exact cone match closed-form integrals") {
  const NormContext ctx = cone_context();
  const double beta = -0.5;
  const auto u = sample(ctx, [&](double r) { return std::pow(r, beta) * std::exp(-std::log(r) * std::log(r)); });
  auto g = [](double x) { return std::exp(-x * x); };
  auto g1 = [](double x) { return -2 * x * std::exp(-x * x); };
  auto g2 = [](double x) { return (4 * x * x - 2) * std::exp(-x * x); };

  // k = 0, p = 2
  const double i0 = integrate([&](double x) { return g(x) * g(x); });
  CHECK(i0 == doctest::Approx(std::sqrt(M_PI / 2)));
  auto n0 = weighted_sobolev_norm(ModeFunction::single(0.0, u), ctx, {2.0, 0, beta, {}});
  CHECK(n0.value * n0.value == doctest::Approx(i0).epsilon(1e-8));

  // k = 1 in mode e: |r du|^2 + e |u|^2
  for (double e : {0.0, 2.0, 6.0}) {
    const double i1 = integrate([&](double x) {
      const double d = beta * g(x) + g1(x);
      return g(x) * g(x) + d * d + e * g(x) * g(x);
    });
    auto n1 = weighted_sobolev_norm(ModeFunction::single(e, u), ctx, {2.0, 1, beta, {}});
    CHECK(n1.value * n1.value == doctest::Approx(i1).epsilon(1e-5));
  }

  // k = 2 in mode 0: Hessian has r^2 u'' and (m-1) (u'/r)^2
  const double i2 = integrate([&](double x) {
    const double d1 = beta * g(x) + g1(x);
    const double d2 = beta * (beta - 1) * g(x) + (2 * beta - 1) * g1(x) + g2(x);
    return g(x) * g(x) + d1 * d1 + d2 * d2 + 2 * d1 * d1;
  });
  auto n2 = weighted_sobolev_norm(ModeFunction::single(0.0, u), ctx, {2.0, 2, beta, {}});
  CHECK(n2.value * n2.value == doctest::Approx(i2).epsilon(1e-5));

  // p = 3 picks up the angular moment vol^(1 - p/2)
  const double i3 = integrate([&](double x) { return std::pow(g(x), 3); });
  auto n3 = weighted_sobolev_norm(ModeFunction::single(0.0, u), ctx, {3.0, 0, beta, {}});
  CHECK(std::pow(n3.value, 3) == doctest::Approx(i3 * std::pow(4 * M_PI, -0.5)).epsilon(1e-8));
  CHECK(i3 == doctest::Approx(std::sqrt(M_PI / 3)));
}

TEST_CASE("power-law tails are extrapolated, growing ones flagged") {
  const NormContext ctx = cone_context();
  const double beta = -0.5;
  // g = sech(x/2): integral of g^2 over the line is 4; truncation at |log r| = log 1e3 misses ~0.2%
  const auto u = sample(ctx, [&](double r) { return std::pow(r, beta) / std::cosh(0.5 * std::log(r)); });
  auto n = weighted_sobolev_norm(ModeFunction::single(0.0, u), ctx, {2.0, 0, beta, {}});
  CHECK(n.value * n.value < 4.0 * 0.999);
  CHECK(n.value_with_tail * n.value_with_tail == doctest::Approx(4.0).epsilon(1e-4));
  CHECK(!n.tail_flag);

  const auto grow = sample(ctx, [&](double r) { return std::pow(r, beta + 0.3); });
  CHECK(weighted_sobolev_norm(ModeFunction::single(0.0, grow), ctx, {2.0, 0, beta, {}}).tail_flag);
}

TEST_CASE("gradient norm is the first-derivative part") {
  const NormContext ctx = cone_context(800);
  const auto u = sample(ctx, [](double r) { return std::exp(-std::pow(std::log(r), 2)); });
  const auto mu = ModeFunction::single(2.0, u);
  const double w1 = weighted_sobolev_norm(mu, ctx, {2.0, 1, 0.3, {}}).value;
  const double l0 = weighted_sobolev_norm(mu, ctx, {2.0, 0, 0.3, {}}).value;
  const double du = weighted_gradient_norm(mu, ctx, 2.0, 0.3).value;
  CHECK(w1 * w1 == doctest::Approx(l0 * l0 + du * du).epsilon(1e-12));
}

TEST_CASE("C^k norms") {
  const NormContext ctx = cone_context(800);
  const double beta = -0.5;
  const auto flat = sample(ctx, [&](double r) { return std::pow(r, beta); });
  auto c0 = weighted_ck_norm(ModeFunction::single(0.0, flat), ctx, 0, beta);
  CHECK(c0.value == doctest::Approx(1.0 / std::sqrt(4 * M_PI)));
  CHECK(!c0.divergent);
  // r^beta: |u| + |r u'| = (1 + |beta|) r^0
  auto c1 = weighted_ck_norm(ModeFunction::single(0.0, flat), ctx, 1, beta);
  CHECK(c1.value == doctest::Approx(1.5 / std::sqrt(4 * M_PI)).epsilon(1e-4));
  const auto grow = sample(ctx, [&](double r) { return std::pow(r, beta + 0.5); });
  CHECK(weighted_ck_norm(ModeFunction::single(0.0, grow), ctx, 0, beta).divergent);
  CHECK(code_of([&] { weighted_ck_norm(ModeFunction::single(2.0, flat), ctx, 1, beta); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("rescaling identities hold to rounding") {
  const RadialModel model = to_radial(capped_hyperboloid_model());
  GridSpec gs;
  gs.nodes_per_region = 400;
  const RadialGrid grid = RadialGrid::build(model, gs);
  std::vector<double> prof;
  for (std::size_t i = 0; i < grid.size(); ++i)
    prof.push_back(std::exp(-std::pow((double(i) - 0.5 * grid.size()) / (0.2 * grid.size()), 2)));
  for (double t : {0.5, 1e-2, 1e-4})
    for (int k : {0, 1, 2}) {
      CHECK(rescaling_invariance_check(ModeFunction::single(0.0, prof), model, grid,
                                       {2.0, k, -0.5, {}}, t) < 1e-10);
      CHECK(rescaling_invariance_check(ModeFunction::single(0.0, prof), model, grid,
                                       {2.0, k, {}, -0.5}, t) < 1e-10);
    }
  CHECK(rescaling_invariance_check(ModeFunction::single(2.0, prof), model, grid, {2.0, 2, 0.7, {}},
                                   1e-3) < 1e-10);
  CHECK(code_of([&] {
          rescaling_invariance_check(ModeFunction::single(0.0, prof), model, grid, {2.0, 0, {}, {}}, 0.5);
        }) == ErrorCode::invalid_argument);
}

TEST_CASE("weighted Hölder on seeded random pairs") {
  const NormContext ctx(to_radial(capped_hyperboloid_model()), GridSpec{400});
  const std::size_t n = ctx.grid().size();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1, 1);
  int violations = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> a(n), b(n);
    const double ca = (U(rng) + 1) * 0.5 * n, cb = (U(rng) + 1) * 0.5 * n;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = U(rng) * 0.1 + std::exp(-std::pow((i - ca) / (0.1 * n), 2));
      b[i] = std::sin(0.01 * i * (trial + 1)) + std::exp(-std::pow((i - cb) / (0.05 * n), 2));
    }
    const double p = 1.1 + 3.0 * (U(rng) + 1) * 0.5;
    auto h = holder_check(ModeFunction::single(0, a), ModeFunction::single(0, b), ctx, p, U(rng), U(rng));
    CHECK(h.lhs > 0);
    violations += h.violated;
  }
  CHECK(violations == 0);
  // equality for |u|^p proportional to |v|^q
  std::vector<double> u(n), v(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = std::exp(-std::pow((i - 0.5 * n) / (0.1 * n), 2));
    v[i] = u[i];
  }
  auto eq = holder_check(ModeFunction::single(0, u), ModeFunction::single(0, v), ctx, 2.0, 0.0, 0.0);
  CHECK(eq.lhs == doctest::Approx(eq.rhs).epsilon(1e-12));
  CHECK(code_of([&] {
          holder_check(ModeFunction::single(2, u), ModeFunction::single(0, v), ctx, 2.0, 0.0, 0.0);
        }) == ErrorCode::invalid_argument);
}

TEST_CASE("Banach algebra ratio is finite above the borderline") {
  const NormContext ctx(to_radial(capped_hyperboloid_model()), GridSpec{400});
  const std::size_t n = ctx.grid().size();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = std::exp(-std::pow((i - 0.5 * n) / (0.1 * n), 2));
  auto r = banach_algebra_check(ModeFunction::single(0, u), ModeFunction::single(0, u), ctx, 2.0, -0.5, -0.5);
  CHECK(r.lhs > 0);
  CHECK(std::isfinite(r.rhs_ratio));
  CHECK(code_of([&] {
          banach_algebra_check(ModeFunction::single(0, u), ModeFunction::single(0, u), ctx, 1.2, 0, 0);
        }) == ErrorCode::invalid_argument);
}

TEST_CASE("mode rules") {
  const NormContext ctx = cone_context(200);
  const std::vector<double> u(ctx.grid().size(), 1.0);
  ModeFunction two = ModeFunction::single(0.0, u);
  two.modes.push_back({2.0, u});
  CHECK_NOTHROW(weighted_sobolev_norm(two, ctx, {2.0, 2, -0.5, {}}));
  CHECK(code_of([&] { weighted_sobolev_norm(two, ctx, {3.0, 0, -0.5, {}}); }) == ErrorCode::invalid_argument);
  CHECK(code_of([&] { weighted_sobolev_norm(ModeFunction::single(2.0, u), ctx, {3.0, 1, -0.5, {}}); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([&] { weighted_sobolev_norm(ModeFunction::single(0.0, {1.0}), ctx, {2.0, 0, -0.5, {}}); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("bump families on the dumbbell") {
  for (double t : {1e-1, 1e-3}) {
    const GluedModel g = dumbbell(t);
    const NormContext ctx(g.model, GridSpec{800});
    BumpOptions bo;
    bo.anchor_x = 2.0;
    bo.eigenvalues = {0.0, 2.0};
    const auto fam = bump_family(ctx, bo);
    CHECK(fam.size() >= 30);
    bool seen[5] = {};
    for (const auto& b : fam) {
      seen[int(b.region)] = true;
      CHECK(b.centre_x > ctx.grid().x.front());
      CHECK(b.centre_x < ctx.grid().x.back());
    }
    CHECK(seen[int(Region::end)]);
    CHECK(seen[int(Region::neck)]);
    CHECK(seen[int(Region::hat_end)]);
    const auto emb = embedding_constant_estimate(ctx, 2.0, -0.5, fam);
    const auto gns = gns_constant_estimate(ctx, 2.0, -0.5, fam);
    // ||du|| <= ||u||_{W_1}, so the gradient ratio dominates member by member
    for (std::size_t i = 0; i < fam.size(); ++i) CHECK(gns.ratios[i] >= emb.ratios[i]);
  }
}
