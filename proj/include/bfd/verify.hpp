#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bfd/solver.hpp"

namespace bfd {

/// One named PASS/FAIL verdict with its numbers, in insertion order.
struct Verdict {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> metrics;
  std::string note;
};

/// Power-law envelope fit of a positive channel y(t) against 1 + t.
struct EnvelopeFit {
  double c_fit = 0.0;
  double alpha_fit = 0.0;
  /// max over samples of y(t) (1 + t)^{-floor}.
  double c_envelope = 0.0;
  double t_envelope = 0.0;
  double exponent_floor = 0.0;
  int samples = 0;
  /// The channel reached zero; the fit covers the positive prefix.
  bool equilibrium_reached = false;
  bool pass = false;
};

/// Least squares of log y against log(1 + t) over t >= t0. PASS iff alpha_fit <= floor + 0.1,
/// c_envelope is finite and it is attained before the final quarter of the time span.
/// Throws Error(InsufficientData) with fewer than 20 positive samples after t0, unless the
/// channel reached zero, which passes with the envelope of the positive prefix.
EnvelopeFit fit_envelope(std::span<const double> t, std::span<const double> y, double exponent_floor, double t0 = 1.0);

/// H_eps(f | M) envelope with floor -1/gamma.
EnvelopeFit fit_decay_rate(const TimeSeries& series, double gamma, double t0 = 1.0);

/// ||f - M||_{L^p_k} envelope with floor -1/(2 p gamma); channels (1, 0), (1, 2), (2, 0).
/// Throws Error(Domain) for other (p, k).
EnvelopeFit check_lpk_decay(const TimeSeries& series, double gamma, double p, double k, double t0 = 1.0);

struct SweepResult {
  std::vector<double> eps_values;
  std::vector<double> sup_linf;
  std::vector<double> kappa_floor;
  /// (c_fit, alpha_fit) per eps; NaN when the run was too short to fit.
  std::vector<std::pair<double, double>> decay_fit;
  /// max / min of sup_linf.
  double spread = 1.0;
  bool pass = false;
};

/// Runs cfg_base at every eps (strictly increasing). PASS iff spread <= 1.25.
SweepResult check_linfty_uniform(const SimConfig& cfg_base, std::span<const double> eps_list);

/// PASS iff kappa_floor >= kappa0 - 1e-6 for every eps <= (1 - kappa0) / max sup_linf.
Verdict check_nonsaturation(const SweepResult& result, double kappa0);

struct GaussianFloor {
  double k0_fit = 0.0;
  double a0_fit = 0.0;
  Vec3 v_peak;
  /// Interior nodes with f <= 0.
  std::vector<std::size_t> zero_nodes;
  /// Radius about v_peak of the largest ball free of zero nodes (infinite when there are none).
  double positive_radius = 0.0;
  double t_label = 0.0;
  bool pass = false;
};

/// f >= k0 e^{-a0 |v|^2} on the interior nodes: a0 = max (log f(v_peak) - log f(v)) / (|v|^2 - |v_peak|^2)
/// over nodes with |v| > |v_peak|, k0 = min f(v) e^{a0 |v|^2}. PASS iff k0 > 0 and no zero nodes.
GaussianFloor fit_gaussian_floor(const DistributionField& f, double t_label);

/// PASS iff the least-squares slope of the L^1_s channel over the final half is at most
/// 1e-6 times its largest value per unit time. s in {2, 3}.
Verdict check_moment_bound(const TimeSeries& series, double s);

struct RatioSeries {
  std::vector<double> t;
  std::vector<double> ratio;
  /// Smallest ratio; NaN when every sample was skipped.
  double minimum = 0.0;
};

/// D0(phi f) / H0(phi f | M0)^{1 + gamma} per record; 0/0 samples (H0 <= 1e-14 rho) are skipped.
RatioSeries entropy_inequality_ratio(const TimeSeries& series, double gamma);
RatioSeries entropy_inequality_ratio(std::span<const double> t, std::span<const double> d0, std::span<const double> h0,
                                     double gamma, double h_floor);

/// min over nodes of (f * |.|^gamma)(v) / <v>^gamma by a direct double sum.
double convolution_floor(const DistributionField& f, double gamma);

/// Runs cfg and evaluates every trajectory check; t_end, 1 and 2 are added as snapshot times
/// for the Gaussian floor.
std::vector<Verdict> verify_run(const SimConfig& cfg, TimeSeries* series_out = nullptr);

}  // namespace bfd
