#include "conifold/link_spectra.hpp"

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/gegenbauer.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "conifold/error.hpp"

namespace conifold {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

void require_dim(int dim) {
  if (dim < 2)
    throw Error(ErrorCode::invalid_argument,
                "link dimension must be >= 2 (cone dimension m >= 3), got " +
                    std::to_string(dim));
}

double unit_sphere_area(int d) {  // area of the unit S^d
  return 2.0 * std::pow(kPi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

void validate_spectrum(const std::vector<SpectralPair>& sp, const std::string& where) {
  if (sp.empty()) throw Error(ErrorCode::malformed_input, where + ": empty spectrum");
  if (sp.front().eigenvalue != 0.0)
    throw Error(ErrorCode::malformed_input, where + ": spectrum must start at eigenvalue 0");
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (!(sp[i].eigenvalue >= 0.0) || !std::isfinite(sp[i].eigenvalue))
      throw Error(ErrorCode::malformed_input, where + ": negative or non-finite eigenvalue");
    if (sp[i].multiplicity < 1)
      throw Error(ErrorCode::malformed_input, where + ": multiplicity must be >= 1");
    if (i > 0 && !(sp[i].eigenvalue > sp[i - 1].eigenvalue))
      throw Error(ErrorCode::malformed_input, where + ": eigenvalues must be strictly increasing");
  }
}

}  // namespace

long sphere_multiplicity(int n, int d) {
  if (n < 0) throw Error(ErrorCode::invalid_argument, "degree must be >= 0");
  require_dim(d);
  // harmonic polynomials of degree n in d+1 variables: P_n minus |x|^2 P_{n-2}
  auto choose = [](int a, int b) -> long {
    if (b < 0 || a < b) return 0;
    return std::lround(boost::math::binomial_coefficient<double>(a, b));
  };
  return choose(n + d, d) - choose(n + d - 2, d);
}

Link Link::sphere(int dim, double radius) {
  require_dim(dim);
  if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "sphere radius must be > 0");
  Link l;
  l.kind_ = LinkKind::sphere;
  l.dim_ = dim;
  l.radius_ = radius;
  l.einstein_ = (dim - 1) / (radius * radius);
  l.volume_ = unit_sphere_area(dim) * std::pow(radius, dim);
  return l;
}

Link Link::flat_torus(std::vector<double> lengths) {
  require_dim(static_cast<int>(lengths.size()));
  for (double len : lengths)
    if (!(len > 0.0)) throw Error(ErrorCode::invalid_argument, "torus lengths must be > 0");
  Link l;
  l.kind_ = LinkKind::flat_torus;
  l.dim_ = static_cast<int>(lengths.size());
  l.volume_ = 1.0;
  for (double len : lengths) l.volume_ *= len;
  l.lengths_ = std::move(lengths);
  l.einstein_ = 0.0;
  return l;
}

Link Link::custom(std::vector<SpectralPair> spectrum, int dim, double einstein, double volume) {
  require_dim(dim);
  validate_spectrum(spectrum, "custom spectrum");
  if (!(volume > 0.0)) throw Error(ErrorCode::invalid_argument, "link volume must be > 0");
  Link l;
  l.kind_ = LinkKind::custom;
  l.dim_ = dim;
  l.custom_ = std::move(spectrum);
  l.einstein_ = einstein;
  l.volume_ = volume;
  return l;
}

Link Link::from_csv(const std::filesystem::path& file, int dim) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::malformed_input, "cannot open spectrum file " + file.string());
  std::vector<SpectralPair> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv(line);
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    auto comma = sv.find(',');
    if (comma == std::string_view::npos)
      throw Error(ErrorCode::malformed_input,
                  file.string() + ":" + std::to_string(lineno) + ": expected `e,mult`");
    SpectralPair p{};
    bool ok = parse_number(sv.substr(0, comma), p.eigenvalue) &&
              parse_number(sv.substr(comma + 1), p.multiplicity);
    if (!ok) {
      if (rows.empty() && lineno == 1) continue;  // header line
      throw Error(ErrorCode::malformed_input,
                  file.string() + ":" + std::to_string(lineno) + ": unparsable row");
    }
    rows.push_back(p);
  }
  validate_spectrum(rows, file.string());
  Link l = custom(std::move(rows), dim);
  l.source_ = file.string();
  return l;
}

std::vector<SpectralPair> Link::eigenvalues_below(double lambda) const {
  std::vector<SpectralPair> out;
  if (!std::isfinite(lambda)) throw Error(ErrorCode::invalid_argument, "Lambda must be finite");
  if (lambda < 0.0) return out;
  switch (kind_) {
    case LinkKind::sphere: {
      const double a2 = radius_ * radius_;
      for (int n = 0;; ++n) {
        double e = n * (n + dim_ - 1.0) / a2;
        if (e > lambda) break;
        out.push_back({e, sphere_multiplicity(n, dim_)});
      }
      break;
    }
    case LinkKind::flat_torus: {
      const int d = dim_;
      std::vector<double> step(d);
      std::vector<long> bound(d);
      for (int i = 0; i < d; ++i) {
        step[i] = 2.0 * kPi / lengths_[i];
        bound[i] = static_cast<long>(std::floor(std::sqrt(lambda) / step[i])) + 1;
      }
      const bool equal = std::all_of(lengths_.begin(), lengths_.end(),
                                     [&](double x) { return x == lengths_.front(); });
      std::vector<std::pair<double, long>> raw;  // (eigenvalue, integer key if equal)
      std::vector<long> k(d);
      std::function<void(int, long, double)> rec = [&](int i, long n2, double e) {
        if (e > lambda * (1.0 + 1e-14) + 1e-14) return;
        if (i == d) {
          raw.emplace_back(e, n2);
          return;
        }
        for (long ki = -bound[i]; ki <= bound[i]; ++ki) {
          double term = step[i] * ki;
          rec(i + 1, n2 + ki * ki, e + term * term);
        }
      };
      rec(0, 0, 0.0);
      std::sort(raw.begin(), raw.end());
      for (auto& [e, n2] : raw) {
        double val = equal ? step[0] * step[0] * static_cast<double>(n2) : e;
        if (val > lambda) continue;
        bool merge = !out.empty() &&
                     (equal ? out.back().eigenvalue == val
                            : std::abs(out.back().eigenvalue - val) <= 1e-12);
        if (merge)
          ++out.back().multiplicity;
        else
          out.push_back({val, 1});
      }
      break;
    }
    case LinkKind::custom:
      for (const auto& p : custom_)
        if (p.eigenvalue <= lambda) out.push_back(p);
      break;
  }
  return out;
}

std::optional<long> Link::multiplicity_of(double e, double tol) const {
  for (const auto& p : eigenvalues_below(e + tol + 1e-9 * std::abs(e)))
    if (std::abs(p.eigenvalue - e) <= tol * std::max(1.0, std::abs(e))) return p.multiplicity;
  return std::nullopt;
}

double Link::einstein_constant() const { return einstein_; }
double Link::volume() const { return volume_; }

int Link::sphere_degree(double e) const {
  // n(n+d-1) = e a^2
  double c = e * radius_ * radius_;
  double n = 0.5 * (-(dim_ - 1.0) + std::sqrt((dim_ - 1.0) * (dim_ - 1.0) + 4.0 * c));
  long rn = std::lround(n);
  if (std::abs(n - rn) > 1e-6)
    throw Error(ErrorCode::invalid_argument, "eigenvalue " + std::to_string(e) + " not in sphere spectrum");
  return static_cast<int>(rn);
}

double Link::eigenfunction_moment(double e, double p) const {
  if (!(p > 0.0)) throw Error(ErrorCode::invalid_argument, "moment exponent must be > 0");
  if (std::abs(e) < 1e-14) return std::pow(volume_, 1.0 - 0.5 * p);
  switch (kind_) {
    case LinkKind::sphere: {
      // zonal harmonic of degree n, a Gegenbauer polynomial in cos(theta)
      const int n = sphere_degree(e);
      const double lam = 0.5 * (dim_ - 1);
      using boost::math::quadrature::gauss_kronrod;
      auto integral = [&](double q) {
        auto g = [&](double th) {
          return std::pow(std::abs(boost::math::gegenbauer(n, lam, std::cos(th))), q) *
                 std::pow(std::sin(th), dim_ - 1);
        };
        return gauss_kronrod<double, 61>::integrate(g, 0.0, kPi, 12, 1e-13);
      };
      const double shell = unit_sphere_area(dim_ - 1) * std::pow(radius_, dim_);
      const double i2 = integral(2.0);
      return shell * integral(p) / std::pow(shell * i2, 0.5 * p);
    }
    case LinkKind::flat_torus: {
      // sqrt(2/V) cos(k.x); mean of |cos|^p is Gamma((p+1)/2)/(sqrt(pi) Gamma(p/2+1))
      if (!multiplicity_of(e)) throw Error(ErrorCode::invalid_argument, "eigenvalue not in torus spectrum");
      double mean = std::tgamma(0.5 * (p + 1)) / (std::sqrt(kPi) * std::tgamma(0.5 * p + 1));
      return std::pow(2.0 / volume_, 0.5 * p) * volume_ * mean;
    }
    case LinkKind::custom:
      break;
  }
  throw Error(ErrorCode::invalid_argument,
              "L^p moments of non-constant eigenfunctions are unknown for custom links");
}

double Link::eigenfunction_sup(double e) const {
  if (std::abs(e) < 1e-14) return 1.0 / std::sqrt(volume_);
  switch (kind_) {
    case LinkKind::sphere: {
      // the zonal harmonic maximises sup|sigma| among unit-norm eigenfunctions
      return std::sqrt(static_cast<double>(sphere_multiplicity(sphere_degree(e), dim_)) / volume_);
    }
    case LinkKind::flat_torus:
      return std::sqrt(2.0 / volume_);
    case LinkKind::custom:
      break;
  }
  throw Error(ErrorCode::invalid_argument, "sup of non-constant eigenfunctions unknown for custom links");
}

std::string Link::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case LinkKind::sphere:
      os << "sphere:" << dim_;
      if (radius_ != 1.0) os << ":" << radius_;
      break;
    case LinkKind::flat_torus:
      os << "torus:";
      for (std::size_t i = 0; i < lengths_.size(); ++i) os << (i ? "," : "") << lengths_[i];
      break;
    case LinkKind::custom:
      os << "custom:" << (source_.empty() ? "inline" : source_) << ":" << dim_;
      break;
  }
  return os.str();
}

bool Link::same_cone(const Link& o) const {
  if (kind_ != o.kind_ || dim_ != o.dim_) return false;
  switch (kind_) {
    case LinkKind::sphere: return radius_ == o.radius_;
    case LinkKind::flat_torus: return lengths_ == o.lengths_;
    case LinkKind::custom: return custom_ == o.custom_ && einstein_ == o.einstein_;
  }
  return false;
}

Link parse_link(std::string_view spec) {
  auto colon = spec.find(':');
  std::string_view head = spec.substr(0, colon);
  std::string_view rest = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  auto bad = [&] { return Error(ErrorCode::invalid_argument, "bad link spec '" + std::string(spec) + "'"); };
  if (head == "sphere") {
    auto c2 = rest.find(':');
    int d = 0;
    double a = 1.0;
    if (!parse_number(rest.substr(0, c2), d)) throw bad();
    if (c2 != std::string_view::npos && !parse_number(rest.substr(c2 + 1), a)) throw bad();
    return Link::sphere(d, a);
  }
  if (head == "torus") {
    std::vector<double> lengths;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      double v = 0;
      if (!parse_number(rest.substr(0, comma), v)) throw bad();
      lengths.push_back(v);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    return Link::flat_torus(std::move(lengths));
  }
  if (head == "custom") {
    auto c2 = rest.rfind(':');
    int d = 0;
    if (c2 == std::string_view::npos || !parse_number(rest.substr(c2 + 1), d)) throw bad();
    return Link::from_csv(std::string(rest.substr(0, c2)), d);
  }
  throw bad();
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::malformed_input: return "malformed_input";
    case ErrorCode::range_too_small: return "range_too_small";
    case ErrorCode::exceptional_weight: return "exceptional_weight";
    case ErrorCode::ordering_violated: return "ordering_violated";
    case ErrorCode::link_mismatch: return "link_mismatch";
    case ErrorCode::boundary_order: return "boundary_order";
    case ErrorCode::weight_mismatch: return "weight_mismatch";
    case ErrorCode::asymptotics: return "asymptotics";
    case ErrorCode::t_too_large: return "t_too_large";
    case ErrorCode::weight_condition: return "weight_condition";
    case ErrorCode::precondition_unknown: return "precondition_unknown";
    case ErrorCode::not_compact: return "not_compact";
    case ErrorCode::io_failure: return "io_failure";
    case ErrorCode::config: return "config";
  }
  return "unknown";
}

}  // namespace conifold
