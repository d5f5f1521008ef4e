#pragma once

#include "bfd/equilibrium.hpp"
#include "bfd/kernels.hpp"
#include "bfd/velocity_space.hpp"

namespace bfd {

/// H_eps(f) = int f log f + eps^{-1} (1 - eps f) log(1 - eps f); plain int f log f at eps = 0.
double fd_entropy(const DistributionField& f);

/// x -> x / (1 - eps x) nodewise; the result carries eps = 0.
/// Throws Error(Saturation) if min(1 - eps f) < 1e-10.
DistributionField phi_transform(const DistributionField& f);

/// D_eps(f) on the grid quadrature; D_0 when eps = 0.
double entropy_production(const DistributionField& f, const KernelSpec& k);

/// H_eps(f) - H_eps(M) for M the grid equilibrium with f's discrete invariants,
/// summed as the termwise-nonnegative Bregman divergence of the entropy density.
double relative_entropy(const DistributionField& f);
double relative_entropy(const DistributionField& f, const Field& equilibrium);

struct EntropyReport {
  double h_eps = 0.0;
  double h_eps_rel = 0.0;
  double d_eps = 0.0;
  double h0_phi_rel = 0.0;
  double d0_phi = 0.0;
  double kappa_min = 1.0;
};

EntropyReport entropy_report(const DistributionField& f, const KernelSpec& k);

struct SandwichReport {
  EntropyReport values;
  double kappa0 = 0.0;
  /// H0(phi f | M0) - H_eps(f | M_eps).
  double entropy_margin = 0.0;
  /// D_eps(f) - kappa0^4 D0(phi f).
  double lower_margin = 0.0;
  /// D0(phi f) - D_eps(f).
  double upper_margin = 0.0;
  /// Magnitude the margins are compared against.
  double scale = 0.0;
  bool precondition_met = false;
  bool pass = false;
};

/// Checks H_eps(f|M_eps) <= H0(phi f|M0) and kappa0^4 D0(phi f) <= D_eps(f) <= D0(phi f).
SandwichReport comparison_sandwich(const DistributionField& f, const KernelSpec& k, double kappa0);

/// Evaluates the sandwich from already computed quantities.
SandwichReport sandwich_from(const EntropyReport& r, double kappa0);

struct CkpResult {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = ||<v>^k (f - M)||_p^2, rhs = 2 max(||<v>^{2k} M||_q, ||<v>^{2k} f||_q) H_eps(f|M),
/// q = p / (2 - p) (infinite at p = 2), M the grid equilibrium of f.
CkpResult ckp_bound(const DistributionField& f, double p, double k);
CkpResult ckp_bound(const DistributionField& f, const Field& equilibrium, double h_rel, double p, double k);

}  // namespace bfd
