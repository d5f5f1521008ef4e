#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "bfd/collision.hpp"
#include "bfd/kernels.hpp"
#include "bfd/velocity_space.hpp"

namespace bfd {

struct MaxwellianSpec {
  double rho = 0.5;
  Vec3 u;
  double t = 1.0;
  friend bool operator==(const MaxwellianSpec&, const MaxwellianSpec&) = default;
};

/// Sum of two classical Maxwellians rho (2 pi T)^{-3/2} e^{-|v-u|^2 / 2T}.
struct TwoMaxwellians {
  MaxwellianSpec first;
  MaxwellianSpec second;
  friend bool operator==(const TwoMaxwellians&, const TwoMaxwellians&) = default;
};

/// M_eps(rho, u, e) times 1 + A h, h = 2 w_x w_y / (1 + w_x^2 + w_y^2), w = (v - u)/sqrt(e).
/// h is odd in w_x and w_y, so the perturbation leaves every collision invariant unchanged.
struct ScaledEquilibrium {
  double rho = 1.0;
  Vec3 u;
  double e = 1.0;
  double amplitude = 0.0;
  friend bool operator==(const ScaledEquilibrium&, const ScaledEquilibrium&) = default;
};

/// fill/eps on the ball |v - u| <= radius, vacuum outside. Needs eps > 0.
struct NearSaturated {
  double fill = 0.9;
  double radius = 1.0;
  Vec3 u;
  friend bool operator==(const NearSaturated&, const NearSaturated&) = default;
};

struct FileDatum {
  std::string path;
  friend bool operator==(const FileDatum&, const FileDatum&) = default;
};

using InitialDatum = std::variant<TwoMaxwellians, ScaledEquilibrium, NearSaturated, FileDatum>;

struct GridSpec {
  int n = 16;
  /// Half-width; 0 selects 6 sqrt(E_init).
  double l = 0.0;
  int n_theta = 8;
  int n_phi = 8;
  Interpolation interpolation = Interpolation::Cubic;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct DiagnosticToggles {
  bool production = true;
  bool sandwich = true;
  bool ckp = true;
  friend bool operator==(const DiagnosticToggles&, const DiagnosticToggles&) = default;
};

struct SimConfig {
  GridSpec grid;
  KernelSpec kernel;
  double eps = 0.0;
  InitialDatum initial = TwoMaxwellians{};
  double t_end = 1.0;
  double theta = 0.5;
  int diag_stride = 10;
  /// Times the integrator lands on exactly and hands to the snapshot sink.
  std::vector<double> snapshot_times;
  DiagnosticToggles diagnostics;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Mass, momentum and energy implied by the initial datum before sampling.
Moments datum_moments(const InitialDatum& d, double eps);

/// Grid from cfg.grid with l = 6 sqrt(E_init) when l is unset.
GridPtr config_grid(const SimConfig& cfg);

/// Samples the initial datum; throws Error(PauliViolation) if it exceeds 1/eps.
DistributionField initial_field(const SimConfig& cfg, const GridPtr& grid);

struct SolverState {
  double t = 0.0;
  DistributionField f;
  std::int64_t step_count = 0;
  double dt_last = 0.0;
  /// Cumulative dv^3 sum of |clamped change|.
  double clamp_total = 0.0;
};

/// theta / max node rate, the rate being the largest of loss/f, eps gain/(1 - eps f),
/// -net/f and eps net/(1 - eps f) where the denominators are positive.
/// Returns +inf when every rate vanishes. Throws Error(Stagnation) if dt < 1e-12.
double adaptive_dt(const SolverState& s, const KernelSpec& k, double theta);
double adaptive_dt(const DistributionField& f, const CollisionOutput& q, double theta);

/// f <- clamp(f + dt net, 0, 1/eps). Throws Error(BoundViolation) if the clamped
/// mass exceeds 1e-12 of the total.
SolverState step(const SolverState& s, const KernelSpec& k, double dt);
SolverState step(const SolverState& s, const CollisionOutput& q, double dt);

struct DiagnosticsRecord {
  std::int64_t step = 0;
  double t = 0.0;
  double dt = 0.0;
  Moments m;
  double sup_f = 0.0;
  double kappa_min = 1.0;
  double l1s2 = 0.0;
  double l1s3 = 0.0;
  double h_eps = 0.0;
  double h_rel = 0.0;
  double d_eps = 0.0;
  double h0_phi_rel = 0.0;
  double d0_phi = 0.0;
  /// ||f - M||_{L^p_k} against the equilibrium of the initial datum.
  double dist_l1k0 = 0.0;
  double dist_l1k2 = 0.0;
  double dist_l2k0 = 0.0;
  /// min(D_eps - kappa^4 D0(phi f)), kappa = kappa_min.
  double sand_lo = 0.0;
  /// min(D0(phi f) - D_eps, H0(phi f | M0) - H_eps(f | M_eps)).
  double sand_hi = 0.0;
  /// rhs - lhs of the CKP bound with p = 1, k = 2.
  double ckp_margin = 0.0;
  double ckp_rhs = 0.0;
  /// |H(t) - H(0) + int_0^t D| by the trapezoid rule over records.
  double identity_residual = 0.0;
  double clamp_total = 0.0;
};

struct TimeSeries {
  std::vector<DiagnosticsRecord> records;
  double mass0 = 0.0;
  /// Largest relative drift of mass, momentum (scaled by rho sqrt(E)) and energy.
  double max_drift = 0.0;
  /// max ||f||_inf and min(1 - eps f) over every accepted step.
  double sup_max = 0.0;
  double kappa_floor = 1.0;
  double t_end = 0.0;
};

struct RunHooks {
  /// Called after every record is appended.
  std::function<void(const DiagnosticsRecord&)> on_record;
  /// Called with the state at t = 0, every snapshot time and t_end.
  std::function<void(const SolverState&)> on_snapshot;
};

/// Integrates to cfg.t_end, recording diagnostics every diag_stride steps and at t_end.
/// On failure the records so far have already been passed to the hooks.
TimeSeries run(const SimConfig& cfg, const RunHooks& hooks = {});
TimeSeries run(const SimConfig& cfg, SolverState& state, const RunHooks& hooks = {});

/// Time-series CSV layout.
extern const char* const kSeriesHeader;
std::string series_row(const DiagnosticsRecord& r);
extern const char* const kExtraHeader;
std::string extra_row(const DiagnosticsRecord& r);

}  // namespace bfd
