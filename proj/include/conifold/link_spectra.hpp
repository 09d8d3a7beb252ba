#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace conifold {

struct SpectralPair {
  double eigenvalue;
  long multiplicity;
  bool operator==(const SpectralPair&) const = default;
};

enum class LinkKind { sphere, flat_torus, custom };

// A compact link known only through its Laplace spectrum. Immutable once built.
class Link {
 public:
  static Link sphere(int dim, double radius = 1.0);
  static Link flat_torus(std::vector<double> lengths);
  // `dim` is the link dimension. Custom links have no known curvature, so the
  // Einstein constant defaults to 0 and the volume to 1.
  static Link custom(std::vector<SpectralPair> spectrum, int dim,
                     double einstein = 0.0, double volume = 1.0);
  static Link from_csv(const std::filesystem::path& file, int dim);

  LinkKind kind() const { return kind_; }
  int dim() const { return dim_; }
  double radius() const { return radius_; }
  const std::vector<double>& lengths() const { return lengths_; }

  std::vector<SpectralPair> eigenvalues_below(double lambda) const;
  std::optional<long> multiplicity_of(double e, double tol = 1e-9) const;

  // Ric = einstein * g on the link. Spheres are Einstein, tori are flat.
  double einstein_constant() const;
  double volume() const;

  // Angular data for a representative L^2-normalised eigenfunction with
  // eigenvalue e: the integral of |sigma|^p over the link, and sup |sigma|.
  double eigenfunction_moment(double e, double p) const;
  double eigenfunction_sup(double e) const;

  std::string describe() const;
  bool same_cone(const Link& other) const;

 private:
  Link() = default;
  int sphere_degree(double e) const;

  LinkKind kind_ = LinkKind::sphere;
  int dim_ = 2;
  double radius_ = 1.0;
  std::vector<double> lengths_;
  std::vector<SpectralPair> custom_;
  double einstein_ = 0.0;
  double volume_ = 1.0;
  std::string source_;
};

long sphere_multiplicity(int n, int d);

// "sphere:2", "sphere:2:1.5", "torus:1,1", "custom:<path>:<dim>".
Link parse_link(std::string_view spec);

}  // namespace conifold
