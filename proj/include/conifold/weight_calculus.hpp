#pragma once

#include <optional>
#include <vector>

#include "conifold/link_spectra.hpp"

namespace conifold {

enum class EndKind { CS, AC };
enum class ManifoldKind { compact, AC, CS, CSAC };

const char* to_string(EndKind k);
const char* to_string(ManifoldKind k);

struct ExceptionalWeight {
  double gamma;
  long mult;
  double source_eigenvalue;
  int end_index;
};

struct RootPair {
  double plus;
  double minus;
};

// Growth rates of the homogeneous harmonics r^gamma sigma for link eigenvalue e.
RootPair mode_roots(double e, int m);

// Exceptional weights with gamma in the open interval (lo, hi), sorted by gamma.
std::vector<ExceptionalWeight> exceptional_weights(const Link& link, int m, double lo, double hi,
                                                   int end_index = 0);

struct ExceptionalSet {
  double lo;
  double hi;
  std::vector<ExceptionalWeight> weights;
};

ExceptionalSet exceptional_set(const Link& link, int m, double lo, double hi, int end_index = 0);

constexpr double kExceptionalTol = 1e-9;

// Throws range_too_small if some beta lies outside its set's computed range.
bool is_fredholm(const std::vector<double>& beta, const std::vector<ExceptionalSet>& exc,
                 double tol = kExceptionalTol);

// Distance from beta to the nearest exceptional weight of link at dimension m.
double distance_to_exceptional(const Link& link, int m, double beta);

struct EndType {
  EndKind kind;
  Link link;
};

// i(w2) - i(w1); w2 must give the larger space on every end.
long index_change(const std::vector<double>& w1, const std::vector<double>& w2,
                  const std::vector<EndType>& ends, int m, double tol = kExceptionalTol);

// Index at beta measured from the chamber around (2-m)/2 where it vanishes.
// Ends may move in either direction; each end contributes its signed count.
long index_from_region_a(const std::vector<double>& beta, const std::vector<EndType>& ends, int m,
                         double tol = kExceptionalTol);

struct RegionFacts {
  std::optional<bool> injective;
  std::optional<bool> surjective;
  std::optional<long> index;
  std::optional<long> kernel_dim;
};

RegionFacts classify_weight_region(ManifoldKind kind, const std::vector<double>& beta,
                                   const std::vector<EndType>& ends, int m,
                                   double tol = kExceptionalTol);

struct ConjugateExponents {
  std::optional<double> p_prime;
  std::optional<double> p_star;    // l = 1
  std::optional<double> p_star_l;  // requested l
  bool borderline = false;         // l p >= m, the exceptional embedding case
};

ConjugateExponents conjugate_exponents(double p, int m, int l);

}  // namespace conifold
