#pragma once

#include "bfd/kernels.hpp"
#include "bfd/velocity_space.hpp"

namespace bfd {

struct CollisionOutput {
  Field gain;
  Field loss;
  /// gain - loss after the conservative projection.
  Field net;
};

/// Quantum operator Q^eps(f, f) in strong form: primed values by the grid's
/// interpolation clamped to [0, 1/eps], sphere sums with the grid's rule. `net` is projected with the
/// weight f(1 - eps f), so it vanishes wherever f = 0 would make it negative and
/// wherever f = 1/eps would make it positive. When `production` is non-null the
/// entropy production D_eps(f) is accumulated in the same sweep.
CollisionOutput q_eps(const DistributionField& f, const KernelSpec& k, double* production = nullptr);

/// Classical bilinear Q(f, g) = Q+(f, g) - Q-(f, g); net projected with weight f.
/// q_classical(f, f) runs the eps = 0 path of q_eps, so both agree bit for bit.
CollisionOutput q_classical(const DistributionField& f, const DistributionField& g, const KernelSpec& k);

/// Q+(f, g) + Q+(g, f).
Field symmetric_gain(const DistributionField& f, const DistributionField& g, const KernelSpec& k);

/// Gamma(g, h)(v) = int g* (h' + h'*) B.
Field gamma_op(const DistributionField& g, const DistributionField& h, const KernelSpec& k);

/// Q+(f, f) + (f / ||f||_inf) Gamma(f, f) - Q-(f, f), unprojected.
Field q_tilde(const DistributionField& f, const KernelSpec& k);

/// raw minus its discrete-L2 projection onto span{1, v, |v|^2}.
Field conservative_projection(const Field& raw, const VelocityGrid& grid);

/// raw - W (c0 + c.v + c4|v|^2) with W = f(1 - eps f) and c chosen so the five
/// discrete invariants of the result vanish. Falls back to W = 1 when the
/// weighted Gram matrix is singular.
Field weighted_projection(const Field& raw, const DistributionField& f);

struct KappaReport {
  bool precondition_met = false;
  double kappa_min = 1.0;
  /// min over nodes of Q^{eps,+} - kappa0^2 Q+(f, f), scaled by max Q+.
  double gain_margin = 0.0;
  /// min over nodes of Q-(f, f) - Q^{eps,-}, scaled by max Q-.
  double loss_margin = 0.0;
  bool pass = false;
};

/// Checks Q^{eps,+} >= kappa0^2 Q+ and Q^{eps,-} <= Q- nodewise (1e-10 slack).
KappaReport kappa_comparison_check(const DistributionField& f, const KernelSpec& k, double kappa0);

enum class ProductionKind {
  /// D_eps(f), Pauli-weighted.
  FermiDirac,
  /// D_0(phi_eps(f)) with phi applied to interpolated primed values.
  ClassicalPhi,
};

/// (1/4) int (G - L) log(G / L) over (v, v*, sigma) on the grid quadrature.
double production_integral(const DistributionField& f, const KernelSpec& k, ProductionKind kind);

/// Nodewise D-integrand after the v* and sigma sums; nonnegative for every node.
Field production_density(const DistributionField& f, const KernelSpec& k, ProductionKind kind);

}  // namespace bfd
