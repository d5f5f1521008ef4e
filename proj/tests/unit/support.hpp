#pragma once

#include <cstdint>

#include "bfd/collision.hpp"
#include "bfd/kernels.hpp"
#include "bfd/velocity_space.hpp"

namespace bfd::test {

/// Seeded field with values in [0, fill / eps] (or [0, fill] at eps = 0) under a Gaussian envelope.
DistributionField random_field(const GridPtr& grid, double eps, std::uint64_t seed, double fill = 0.9);

/// Classical Maxwellian rho (2 pi T)^{-3/2} e^{-|v-u|^2/2T} on the nodes.
Field maxwellian_values(const VelocityGrid& grid, double rho, const Vec3& u, double t);

/// Point value of the grid interpolant, zero outside the lattice; cubic values clamped at 0.
double interpolate(const VelocityGrid& grid, const Field& values, const Vec3& x);

/// Direct triple sums over (v, v*, sigma) evaluating every kernel value with eval_kernel.
struct BruteOperator {
  Field gain;
  Field loss;
};
BruteOperator brute_q_eps(const DistributionField& f, const KernelSpec& k);
BruteOperator brute_bilinear(const DistributionField& f, const DistributionField& g, const KernelSpec& k);
Field brute_gamma(const DistributionField& g, const DistributionField& h, const KernelSpec& k);
double brute_production(const DistributionField& f, const KernelSpec& k, ProductionKind kind);

double max_abs(const Field& x);
double max_abs_diff(const Field& a, const Field& b);

}  // namespace bfd::test
