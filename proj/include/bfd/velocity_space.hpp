#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bfd/vec3.hpp"

namespace bfd {

struct SphereNode {
  Vec3 sigma;
  double w = 0.0;
};

/// Reconstruction of f at off-lattice post-collision points.
enum class Interpolation {
  /// Trilinear, eight nodes.
  Linear,
  /// Tensor 4-point Lagrange, 64 nodes; values clamped to [0, 1/eps] by the operator.
  Cubic,
};

const char* to_string(Interpolation i);
/// Throws Error(Domain) for names other than "linear" and "cubic".
Interpolation interpolation_from_string(const std::string& name);

/// Cell-centred lattice on [-l, l]^3 plus a Gauss-Legendre x uniform-azimuth sphere rule.
/// Node (i, j, k) sits at (-l + (i + 1/2) dv, ...) and has flat index (i*n + j)*n + k.
class VelocityGrid {
 public:
  VelocityGrid(int n, double l, int n_theta, int n_phi, Interpolation interp = Interpolation::Cubic);

  int n() const { return n_; }
  double l() const { return l_; }
  double dv() const { return dv_; }
  double cell_volume() const { return dv_ * dv_ * dv_; }
  int n_theta() const { return n_theta_; }
  int n_phi() const { return n_phi_; }
  Interpolation interpolation() const { return interp_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_ * n_; }

  double coord(int i) const { return axis_[static_cast<std::size_t>(i)]; }
  Vec3 node(std::size_t idx) const;
  Vec3 node(int i, int j, int k) const { return {coord(i), coord(j), coord(k)}; }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j)) * n_ + static_cast<std::size_t>(k);
  }

  const std::vector<SphereNode>& sphere() const { return sphere_; }

  bool same_as(const VelocityGrid& o) const {
    return n_ == o.n_ && l_ == o.l_ && n_theta_ == o.n_theta_ && n_phi_ == o.n_phi_ && interp_ == o.interp_;
  }

 private:
  int n_;
  double l_;
  double dv_;
  int n_theta_;
  int n_phi_;
  Interpolation interp_;
  std::vector<double> axis_;
  std::vector<SphereNode> sphere_;
};

using GridPtr = std::shared_ptr<const VelocityGrid>;

/// Throws Error(Size) for odd n, n < 8, l <= 0 or a sphere rule coarser than 4 x 4.
GridPtr build_grid(int n, double l, int n_theta = 8, int n_phi = 8, Interpolation interp = Interpolation::Cubic);

/// Raw nodal array on a grid, signed and unconstrained.
using Field = std::vector<double>;

/// Nonnegative density with the Pauli bound 0 <= f <= 1/eps.
class DistributionField {
 public:
  /// Throws Error(PauliViolation) for values outside [0, (1 + 1e-12)/eps] and
  /// Error(Domain) for non-finite values, eps < 0 or a size mismatch.
  DistributionField(GridPtr grid, Field values, double eps);

  const VelocityGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const Field& values() const { return values_; }
  double eps() const { return eps_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  /// min over nodes of 1 - eps f (1 when eps = 0).
  double kappa_min() const;
  double sup() const;

 private:
  GridPtr grid_;
  Field values_;
  double eps_;
};

struct Moments {
  double rho = 0.0;
  Vec3 u;
  double e = 0.0;
};

/// (v', v'*) = ((v + v*)/2 + |v - v*|/2 sigma, (v + v*)/2 - |v - v*|/2 sigma).
std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& v_star, const Vec3& sigma);

/// Midpoint-rule moments; throws Error(ZeroField) when the mass vanishes.
Moments moments(const DistributionField& f);
Moments moments(const VelocityGrid& grid, const Field& values);

/// dv^3 sum of values * (1, v_x, v_y, v_z, |v|^2).
std::array<double, 5> invariant_integrals(const VelocityGrid& grid, const Field& values);

/// (dv^3 sum |f|^p <v>^{kp})^{1/p}; p = inf gives max |f| <v>^k.
double lebesgue_norm(const DistributionField& f, double p, double k);
double lebesgue_norm(const VelocityGrid& grid, const Field& values, double p, double k);

/// dv^3 sum <v>^k |f| |log |f||.
double l1k_log_norm(const DistributionField& f, double k);

/// dv^3 sum of a nodal array, pairwise-summed.
double integrate(const VelocityGrid& grid, const Field& values);

/// CSV snapshot: "# {json header}" line, "i,j,k,f" header, then one row per node.
void write_snapshot(const std::string& path, const DistributionField& f);
/// Sphere size and interpolation come from the header when present.
DistributionField read_snapshot(const std::string& path, int n_theta = 8, int n_phi = 8,
                                Interpolation interp = Interpolation::Cubic);

}  // namespace bfd
