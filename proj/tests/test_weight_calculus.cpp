#include <doctest.h>

#include <cmath>

#include "conifold/error.hpp"
#include "conifold/weight_calculus.hpp"

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

// Brute-force oracle: r^gamma is harmonic in mode e iff gamma^2 + (m-2) gamma = e.
// Scan gamma on a fine lattice, bracket sign changes, bisect.
std::vector<std::pair<double, long>> brute_weights(const Link& link, int m, double lo, double hi) {
  std::vector<std::pair<double, long>> out;
  for (const auto& [e, mult] : link.eigenvalues_below(200.0)) {
    auto g = [&](double x) { return x * x + (m - 2) * x - e; };
    const int steps = 70000;
    for (int i = 0; i < steps; ++i) {
      double a = lo + (hi - lo) * i / steps, b = lo + (hi - lo) * (i + 1) / steps;
      if (g(a) == 0.0 && a > lo) out.push_back({a, mult});
      if (g(a) * g(b) < 0) {
        for (int it = 0; it < 200; ++it) {
          const double c = 0.5 * (a + b);
          (g(a) * g(c) <= 0 ? b : a) = c;
        }
        out.push_back({0.5 * (a + b), mult});
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("root pairs satisfy the sum and product identities") {
  for (int m : {3, 4, 5, 7})
    for (double e : {0.0, 1e-9, 2.0, 3.0, 12.0, 1e6}) {
      const RootPair r = mode_roots(e, m);
      CHECK(r.plus + r.minus == doctest::Approx(2.0 - m).epsilon(1e-12));
      CHECK(r.plus * r.minus == doctest::Approx(-e).epsilon(1e-12));
      CHECK(r.plus >= r.minus);
    }
  // tiny e: the small root is -e/(m-2) to first order, not lost to cancellation
  CHECK(mode_roots(1e-12, 3).plus == doctest::Approx(1e-12).epsilon(1e-6));
}

TEST_CASE("exceptional weights of S^2 and S^3 over [-6, 5] agree with a brute-force scan") {
  for (int m : {3, 4}) {
    const Link link = Link::sphere(m - 1);
    const auto w = exceptional_weights(link, m, -6.0, 5.0);
    const auto oracle = brute_weights(link, m, -6.0, 5.0);
    REQUIRE(w.size() == oracle.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(w[i].gamma == doctest::Approx(oracle[i].first).epsilon(1e-12));
      CHECK(w[i].mult == oracle[i].second);
    }
  }
  // S^2, m = 3: gamma = n and -n-1 with multiplicity 2n+1
  const auto w = exceptional_weights(Link::sphere(2), 3, -4.0, 3.0);
  std::vector<std::pair<double, long>> expect{{-3, 5}, {-2, 3}, {-1, 1}, {0, 1}, {1, 3}, {2, 5}};
  REQUIRE(w.size() == expect.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(w[i].gamma == doctest::Approx(expect[i].first));
    CHECK(w[i].mult == expect[i].second);
  }
}

TEST_CASE("the range is an open interval") {
  const auto w = exceptional_weights(Link::sphere(2), 3, -1.0, 1.0);
  REQUIRE(w.size() == 1);
  CHECK(w[0].gamma == doctest::Approx(0.0));
  CHECK(exceptional_weights(Link::sphere(2), 3, 0.5, 0.5).empty());
  CHECK(code_of([] { exceptional_weights(Link::sphere(2), 4, -1, 1); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([] { exceptional_weights(Link::sphere(2), 3, 2, 1); }) ==
        ErrorCode::invalid_argument);
}

TEST_CASE("Fredholm test and distance to the exceptional set") {
  const Link s2 = Link::sphere(2);
  const auto set = exceptional_set(s2, 3, -6, 5);
  CHECK(is_fredholm({-0.5}, {set}));
  CHECK(!is_fredholm({1.0}, {set}));
  CHECK(code_of([&] { is_fredholm({7.0}, {set}); }) == ErrorCode::range_too_small);
  CHECK(distance_to_exceptional(s2, 3, -0.5) == doctest::Approx(0.5));
  CHECK(distance_to_exceptional(s2, 3, 2.3) == doctest::Approx(0.3));
  CHECK(distance_to_exceptional(s2, 3, 40.2) == doctest::Approx(0.2));
}

TEST_CASE("index arithmetic on one AC end over S^2") {
  const std::vector<EndType> ac{{EndKind::AC, Link::sphere(2)}};
  // crossing 0, 1, 2 adds 1, 3, 5
  CHECK(index_change({-0.5}, {0.5}, ac, 3) == 1);
  CHECK(index_change({-0.5}, {2.5}, ac, 3) == 9);
  CHECK(index_from_region_a({-0.5}, ac, 3) == 0);
  CHECK(index_from_region_a({1.5}, ac, 3) == 4);
  CHECK(index_from_region_a({-1.5}, ac, 3) == -1);
  CHECK(code_of([&] { index_change({0.5}, {-0.5}, ac, 3); }) == ErrorCode::ordering_violated);
  CHECK(code_of([&] { index_from_region_a({1.0}, ac, 3); }) == ErrorCode::exceptional_weight);

  // CS ends grow the space when the weight decreases
  const std::vector<EndType> cs{{EndKind::CS, Link::sphere(2)}};
  CHECK(index_change({-0.5}, {-1.5}, cs, 3) == 1);
  CHECK(index_from_region_a({-1.5}, cs, 3) == 1);
}

TEST_CASE("region classification") {
  const Link s2 = Link::sphere(2);
  const std::vector<EndType> ac2{{EndKind::AC, s2}, {EndKind::AC, s2}};
  auto a = classify_weight_region(ManifoldKind::AC, {-0.5, -0.5}, ac2, 3);
  CHECK(a.injective == true);
  CHECK(a.surjective == true);
  CHECK(a.index == 0);
  CHECK(a.kernel_dim == 0);

  // above 0 on both ends: surjective, kernel equals the index (constants and more)
  auto up = classify_weight_region(ManifoldKind::AC, {0.5, 1.5}, ac2, 3);
  CHECK(up.surjective == true);
  CHECK(up.index == 1 + 4);
  CHECK(up.kernel_dim == 5);

  // below 2-m: injective with cokernel
  auto down = classify_weight_region(ManifoldKind::AC, {-1.5, -0.5}, ac2, 3);
  CHECK(down.injective == true);
  CHECK(down.index == -1);

  // CS manifold in region A carries the constants
  const std::vector<EndType> cs2{{EndKind::CS, s2}, {EndKind::CS, s2}};
  auto c = classify_weight_region(ManifoldKind::CS, {-0.5, -0.5}, cs2, 3);
  CHECK(c.kernel_dim == 1);
  CHECK(c.injective == false);

  auto comp = classify_weight_region(ManifoldKind::compact, {}, {}, 3);
  CHECK(comp.kernel_dim == 1);
  CHECK(comp.index == 0);

  CHECK(code_of([&] { classify_weight_region(ManifoldKind::CS, {-0.5, -0.5}, ac2, 3); }) ==
        ErrorCode::invalid_argument);
  CHECK(code_of([&] { classify_weight_region(ManifoldKind::AC, {0.0, -0.5}, ac2, 3); }) ==
        ErrorCode::exceptional_weight);
}

TEST_CASE("conjugate exponents") {
  auto c = conjugate_exponents(2.0, 3, 1);
  CHECK(*c.p_prime == doctest::Approx(2.0));
  CHECK(*c.p_star == doctest::Approx(6.0));
  CHECK(!c.borderline);
  auto b = conjugate_exponents(2.0, 3, 2);
  CHECK(b.borderline);
  CHECK(!b.p_star_l);
  CHECK(!conjugate_exponents(1.0, 3, 1).p_prime);
  CHECK(code_of([] { conjugate_exponents(0.5, 3, 1); }) == ErrorCode::invalid_argument);
}
