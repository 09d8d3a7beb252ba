#include "conifold/weight_calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "conifold/error.hpp"

namespace conifold {

const char* to_string(EndKind k) { return k == EndKind::CS ? "CS" : "AC"; }

const char* to_string(ManifoldKind k) {
  switch (k) {
    case ManifoldKind::compact: return "compact";
    case ManifoldKind::AC: return "AC";
    case ManifoldKind::CS: return "CS";
    case ManifoldKind::CSAC: return "CSAC";
  }
  return "?";
}

RootPair mode_roots(double e, int m) {
  if (m < 3) throw Error(ErrorCode::invalid_argument, "dimension m must be >= 3");
  const double b = 2.0 - m;
  const double s = std::sqrt(b * b + 4.0 * e);
  // the product of roots is -e; recover the small root from it to avoid cancellation
  const double big = b >= 0 ? 0.5 * (b + s) : 0.5 * (b - s);
  const double small = e == 0.0 ? 0.0 : -e / big;
  return b >= 0 ? RootPair{big, small} : RootPair{small, big};
}

std::vector<ExceptionalWeight> exceptional_weights(const Link& link, int m, double lo, double hi,
                                                   int end_index) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
    throw Error(ErrorCode::invalid_argument, "gamma range must be a bounded interval");
  if (link.dim() != m - 1)
    throw Error(ErrorCode::invalid_argument, "link dimension must equal m-1");
  // gamma^2 + (m-2) gamma is convex in gamma, so its max on [lo,hi] is at an endpoint
  auto e_of = [m](double g) { return g * g + (m - 2.0) * g; };
  const double lambda = std::max(e_of(lo), e_of(hi));
  std::vector<ExceptionalWeight> out;
  for (const auto& [e, mult] : link.eigenvalues_below(lambda * (1 + 1e-12) + 1e-12)) {
    auto r = mode_roots(e, m);
    if (r.minus > lo && r.minus < hi) out.push_back({r.minus, mult, e, end_index});
    if (r.plus > lo && r.plus < hi) out.push_back({r.plus, mult, e, end_index});
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.gamma < b.gamma; });
  return out;
}

ExceptionalSet exceptional_set(const Link& link, int m, double lo, double hi, int end_index) {
  return {lo, hi, exceptional_weights(link, m, lo, hi, end_index)};
}

bool is_fredholm(const std::vector<double>& beta, const std::vector<ExceptionalSet>& exc,
                 double tol) {
  if (beta.size() != exc.size())
    throw Error(ErrorCode::invalid_argument, "one exceptional set per end is required");
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const auto& set = exc[j];
    if (!(beta[j] - tol > set.lo && beta[j] + tol < set.hi))
      throw Error(ErrorCode::range_too_small,
                  "exceptional set of end " + std::to_string(j) +
                      " does not cover beta; recompute over a wider range");
    for (const auto& w : set.weights)
      if (std::abs(w.gamma - beta[j]) <= tol) return false;
  }
  return true;
}

double distance_to_exceptional(const Link& link, int m, double beta) {
  double best = std::numeric_limits<double>::infinity();
  double width = 1.0;
  // widen until the window certainly contains the nearest exceptional weight
  for (int it = 0; it < 60 && !std::isfinite(best); ++it, width *= 2)
    for (const auto& w : exceptional_weights(link, m, beta - width, beta + width))
      best = std::min(best, std::abs(w.gamma - beta));
  return best;
}

namespace {

long mult_between(const Link& link, int m, double a, double b) {
  if (a > b) std::swap(a, b);
  long total = 0;
  for (const auto& w : exceptional_weights(link, m, a, b)) total += w.mult;
  return total;
}

void require_regular(const std::vector<double>& beta, const std::vector<EndType>& ends, int m,
                     double tol) {
  if (beta.size() != ends.size())
    throw Error(ErrorCode::invalid_argument, "weight vector needs one entry per end");
  for (std::size_t j = 0; j < beta.size(); ++j)
    if (distance_to_exceptional(ends[j].link, m, beta[j]) <= tol)
      throw Error(ErrorCode::exceptional_weight,
                  "weight " + std::to_string(beta[j]) + " on end " + std::to_string(j) +
                      " is exceptional");
}

}  // namespace

long index_change(const std::vector<double>& w1, const std::vector<double>& w2,
                  const std::vector<EndType>& ends, int m, double tol) {
  require_regular(w1, ends, m, tol);
  require_regular(w2, ends, m, tol);
  long total = 0;
  for (std::size_t j = 0; j < ends.size(); ++j) {
    const bool grows = ends[j].kind == EndKind::AC ? w1[j] <= w2[j] : w1[j] >= w2[j];
    if (!grows)
      throw Error(ErrorCode::ordering_violated,
                  "end " + std::to_string(j) + " (" + to_string(ends[j].kind) +
                      "): second weight does not give the larger space");
    total += mult_between(ends[j].link, m, w1[j], w2[j]);
  }
  return total;
}

long index_from_region_a(const std::vector<double>& beta, const std::vector<EndType>& ends, int m,
                         double tol) {
  require_regular(beta, ends, m, tol);
  const double centre = 0.5 * (2.0 - m);
  long total = 0;
  for (std::size_t j = 0; j < ends.size(); ++j) {
    long n = mult_between(ends[j].link, m, centre, beta[j]);
    const bool grows = ends[j].kind == EndKind::AC ? beta[j] >= centre : beta[j] <= centre;
    total += grows ? n : -n;
  }
  return total;
}

RegionFacts classify_weight_region(ManifoldKind kind, const std::vector<double>& beta,
                                   const std::vector<EndType>& ends, int m, double tol) {
  RegionFacts f;
  if (kind == ManifoldKind::compact) {
    if (!ends.empty()) throw Error(ErrorCode::invalid_argument, "compact manifolds have no ends");
    f.kernel_dim = 1;
    f.index = 0;
    f.injective = false;
    f.surjective = false;
    return f;
  }
  if (ends.empty()) throw Error(ErrorCode::invalid_argument, "non-compact kinds need ends");
  bool has_cs = false, has_ac = false;
  for (const auto& e : ends) (e.kind == EndKind::CS ? has_cs : has_ac) = true;
  const ManifoldKind actual = has_cs && has_ac ? ManifoldKind::CSAC
                              : has_cs         ? ManifoldKind::CS
                                               : ManifoldKind::AC;
  if (actual != kind)
    throw Error(ErrorCode::invalid_argument, std::string("end kinds describe a ") +
                                                 to_string(actual) + " manifold, not " +
                                                 to_string(kind));
  require_regular(beta, ends, m, tol);
  const double lower = 2.0 - m, mid = 0.5 * (2.0 - m);
  f.index = index_from_region_a(beta, ends, m, tol);

  auto all = [&](auto pred) {
    for (std::size_t j = 0; j < ends.size(); ++j)
      if (!pred(ends[j].kind, beta[j])) return false;
    return true;
  };
  auto any = [&](auto pred) {
    for (std::size_t j = 0; j < ends.size(); ++j)
      if (pred(ends[j].kind, beta[j])) return true;
    return false;
  };
  const bool region_a = all([&](EndKind, double b) { return b > lower && b < 0.0; });

  switch (kind) {
    case ManifoldKind::AC:
      if (all([](EndKind, double b) { return b < 0.0; })) f.injective = true;
      if (all([&](EndKind, double b) { return b > lower; })) f.surjective = true;
      break;
    case ManifoldKind::CS:
      if (region_a) {
        f.kernel_dim = 1;
        f.injective = false;
        f.surjective = false;
      }
      if (all([&](EndKind, double b) { return b > mid; }) &&
          any([](EndKind, double b) { return b > 0.0; }))
        f.injective = true;
      if (all([&](EndKind, double b) { return b < mid; }) &&
          any([&](EndKind, double b) { return b < lower; }))
        f.surjective = true;
      break;
    case ManifoldKind::CSAC:
      if (all([&](EndKind k, double b) { return k == EndKind::AC ? b < 0.0 : b > lower; }))
        f.injective = true;
      if (all([&](EndKind k, double b) { return k == EndKind::AC ? b > lower : b < 0.0; }))
        f.surjective = true;
      break;
    case ManifoldKind::compact:
      break;
  }

  // kernel - cokernel = index ties the remaining facts together
  if (f.injective == true) f.kernel_dim = 0;
  if (f.surjective == true) f.kernel_dim = *f.index;
  if (f.kernel_dim) {
    f.injective = *f.kernel_dim == 0;
    const long coker = *f.kernel_dim - *f.index;
    if (!f.surjective) f.surjective = coker == 0;
  }
  return f;
}

ConjugateExponents conjugate_exponents(double p, int m, int l) {
  if (!(p >= 1.0)) throw Error(ErrorCode::invalid_argument, "p must be >= 1");
  if (m < 1 || l < 0) throw Error(ErrorCode::invalid_argument, "need m >= 1 and l >= 0");
  ConjugateExponents c;
  if (p > 1.0) c.p_prime = p / (p - 1.0);
  if (p < m) c.p_star = m * p / (m - p);
  if (l * p < m)
    c.p_star_l = m * p / (m - l * p);
  else
    c.borderline = true;
  return c;
}

}  // namespace conifold
