#pragma once

#include "bfd/vec3.hpp"
#include "bfd/velocity_space.hpp"

namespace bfd {

/// I_s(tau) = int_0^inf r^s / (1 + tau e^{r^2}) dr for s in {2, 4}; tau > 0.
double fermi_integral(int s, double tau);

/// Same integral parameterized by x = log tau, usable far beyond double range of tau.
double fermi_integral_log(int s, double log_tau);

/// P(tau) = I_4(tau) I_2(tau)^{-5/3}.
double pressure_ratio(double tau);
double pressure_ratio_log(double log_tau);

/// M(v) = e^{a + b|v-u|^2} / (1 + eps e^{a + b|v-u|^2}).
struct FermiDiracParams {
  double a_eps = 0.0;
  double b_eps = -0.5;
  double eps = 0.0;
  double rho = 1.0;
  Vec3 u;
  double e = 1.0;

  /// log tau with tau = 1 / (eps e^a).
  double log_tau() const;
};

struct SaturationInfo {
  double eps_sat = 0.0;
  double eps_sat_dagger = 0.0;
  double fermi_temperature = 0.0;
  double r_e = 0.0;
};

struct NormBounds {
  double c_inf = 0.0;
  double c_1k = 0.0;
};

/// Fits M_eps to (rho, u, 3 rho E). Throws Error(Saturation) for eps >= eps_sat and
/// Error(Domain) for eps <= 0 or non-positive rho, e.
FermiDiracParams fit_fermi_dirac(double rho, const Vec3& u, double e, double eps);

double eval_fermi_dirac(const FermiDiracParams& p, const Vec3& v);

SaturationInfo saturation_info(double rho, double e, double eps);

/// 1/eps on the ball |v - u| <= (3 rho eps / 4 pi)^{1/3}, zero elsewhere.
/// Throws Error(Geometry) when the ball leaves the cube.
DistributionField saturated_state(double rho, const Vec3& u, double eps, const GridPtr& grid);

/// Explicit eps-uniform bounds on ||M||_inf and ||M||_{L^1_k}; requires eps <= eps_sat_dagger.
NormBounds fd_norm_bounds(const FermiDiracParams& p, double k);

/// Samples M on the grid nodes.
DistributionField sample_fermi_dirac(const FermiDiracParams& p, const GridPtr& grid);

/// Equilibrium whose nodal samples reproduce the discrete invariants of a field exactly.
struct GridEquilibrium {
  double a = 0.0;
  double b = -0.5;
  Vec3 u;
  double eps = 0.0;
  Field values;
};

/// Solves for (a, b, u) so that dv^3 sum M (1, v, |v|^2) equals that of `f` to rounding,
/// with eps taken from f (eps = 0 gives the classical Maxwellian). Throws Error(Saturation)
/// if f's moments admit no Fermi-Dirac equilibrium and Error(NonConvergence) if Newton stalls.
GridEquilibrium discrete_equilibrium(const DistributionField& f);
GridEquilibrium discrete_equilibrium(const VelocityGrid& grid, const Field& values, double eps);

}  // namespace bfd
