#include "bfd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "bfd/entropy.hpp"
#include "bfd/error.hpp"
#include "bfd/parallel.hpp"

namespace bfd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
};

Line least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Line l;
  l.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  l.intercept = my - l.slope * mx;
  return l;
}

std::vector<double> channel(const TimeSeries& s, double DiagnosticsRecord::*field) {
  std::vector<double> out;
  out.reserve(s.records.size());
  for (const auto& r : s.records) out.push_back(r.*field);
  return out;
}

Verdict make(std::string name, bool pass, std::vector<std::pair<std::string, double>> metrics, std::string note = {}) {
  return Verdict{std::move(name), pass, std::move(metrics), std::move(note)};
}

}  // namespace

EnvelopeFit fit_envelope(std::span<const double> t, std::span<const double> y, double exponent_floor, double t0) {
  if (t.size() != y.size()) throw Error(ErrorKind::Domain, "time and channel lengths differ");
  EnvelopeFit out;
  out.exponent_floor = exponent_floor;
  // Positive prefix of the channel.
  std::size_t end = 0;
  while (end < y.size() && std::isfinite(y[end]) && y[end] > 0.0) ++end;
  out.equilibrium_reached = end < y.size();
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < end; ++i)
    if (t[i] >= t0) {
      lx.push_back(std::log1p(t[i]));
      ly.push_back(std::log(y[i]));
    }
  out.samples = static_cast<int>(lx.size());
  double best = -1.0;
  for (std::size_t i = 0; i < end; ++i) best = std::max(best, y[i] * std::pow(1.0 + t[i], -exponent_floor));
  out.c_envelope = end > 0 ? best : kNaN;
  for (std::size_t i = 0; i < end; ++i)
    if (y[i] * std::pow(1.0 + t[i], -exponent_floor) >= best * (1.0 - 1e-12)) {
      out.t_envelope = t[i];
      break;
    }
  if (out.samples < 20) {
    if (!out.equilibrium_reached)
      throw Error(ErrorKind::InsufficientData, "need at least 20 positive samples after t0, got " + std::to_string(out.samples));
    out.c_fit = out.alpha_fit = kNaN;
    out.pass = end == 0 || std::isfinite(out.c_envelope);
    return out;
  }
  const Line fit = least_squares(lx, ly);
  out.alpha_fit = fit.slope;
  out.c_fit = std::exp(fit.intercept);
  const double t_first = t.front();
  const double t_last = t[end - 1];
  const bool early = out.t_envelope < t_first + 0.75 * (t_last - t_first);
  out.pass = out.alpha_fit <= exponent_floor + 0.1 && std::isfinite(out.c_envelope) && early;
  return out;
}

EnvelopeFit fit_decay_rate(const TimeSeries& series, double gamma, double t0) {
  if (!(gamma > 0.0)) throw Error(ErrorKind::Domain, "gamma must be positive");
  const auto t = channel(series, &DiagnosticsRecord::t);
  const auto h = channel(series, &DiagnosticsRecord::h_rel);
  return fit_envelope(t, h, -1.0 / gamma, t0);
}

EnvelopeFit check_lpk_decay(const TimeSeries& series, double gamma, double p, double k, double t0) {
  if (!(gamma > 0.0)) throw Error(ErrorKind::Domain, "gamma must be positive");
  double DiagnosticsRecord::*field = nullptr;
  if (p == 1.0 && k == 0.0) field = &DiagnosticsRecord::dist_l1k0;
  if (p == 1.0 && k == 2.0) field = &DiagnosticsRecord::dist_l1k2;
  if (p == 2.0 && k == 0.0) field = &DiagnosticsRecord::dist_l2k0;
  if (!field) throw Error(ErrorKind::Domain, "series carries L^p_k distances for (1,0), (1,2) and (2,0) only");
  const auto t = channel(series, &DiagnosticsRecord::t);
  const auto d = channel(series, field);
  return fit_envelope(t, d, -1.0 / (2.0 * p * gamma), t0);
}

SweepResult check_linfty_uniform(const SimConfig& cfg_base, std::span<const double> eps_list) {
  if (eps_list.empty()) throw Error(ErrorKind::Domain, "empty eps list");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] > eps_list[i - 1])) throw Error(ErrorKind::Domain, "eps values must be strictly increasing");
  SweepResult out;
  for (double eps : eps_list) {
    SimConfig cfg = cfg_base;
    cfg.eps = eps;
    const TimeSeries s = run(cfg);
    out.eps_values.push_back(eps);
    out.sup_linf.push_back(s.sup_max);
    out.kappa_floor.push_back(s.kappa_floor);
    try {
      const EnvelopeFit fit = fit_decay_rate(s, cfg.kernel.gamma);
      out.decay_fit.emplace_back(fit.c_fit, fit.alpha_fit);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientData) throw;
      out.decay_fit.emplace_back(kNaN, kNaN);
    }
  }
  const auto [lo, hi] = std::minmax_element(out.sup_linf.begin(), out.sup_linf.end());
  out.spread = *hi / *lo;
  out.pass = std::isfinite(out.spread) && out.spread <= 1.25;
  return out;
}

Verdict check_nonsaturation(const SweepResult& result, double kappa0) {
  const double sup = *std::max_element(result.sup_linf.begin(), result.sup_linf.end());
  bool pass = true;
  int checked = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < result.eps_values.size(); ++i) {
    if (result.eps_values[i] > (1.0 - kappa0) / sup) continue;
    ++checked;
    worst = std::min(worst, result.kappa_floor[i]);
    pass = pass && result.kappa_floor[i] >= kappa0 - 1e-6;
  }
  return make("nonsaturation", pass,
              {{"kappa0", kappa0}, {"eps_checked", checked}, {"kappa_floor_min", checked ? worst : kNaN}});
}

GaussianFloor fit_gaussian_floor(const DistributionField& f, double t_label) {
  const auto& g = f.grid();
  const int n = g.n();
  GaussianFloor out;
  out.t_label = t_label;
  std::vector<std::size_t> interior;
  for (int i = 1; i < n - 1; ++i)
    for (int j = 1; j < n - 1; ++j)
      for (int k = 1; k < n - 1; ++k) interior.push_back(g.index(i, j, k));
  std::size_t peak = interior.front();
  for (std::size_t idx : interior)
    if (f[idx] > f[peak]) peak = idx;
  out.v_peak = g.node(peak);
  for (std::size_t idx : interior)
    if (!(f[idx] > 0.0)) out.zero_nodes.push_back(idx);
  out.positive_radius = std::numeric_limits<double>::infinity();
  for (std::size_t idx : out.zero_nodes) out.positive_radius = std::min(out.positive_radius, norm(g.node(idx) - out.v_peak));
  if (!(f[peak] > 0.0)) {
    out.positive_radius = 0.0;
    return out;
  }
  auto usable = [&](std::size_t idx) { return f[idx] > 0.0 && norm(g.node(idx) - out.v_peak) < out.positive_radius; };
  const double r2_peak = norm2(out.v_peak);
  const double log_peak = std::log(f[peak]);
  double a0 = 0.0;
  for (std::size_t idx : interior) {
    if (!usable(idx)) continue;
    const double r2 = norm2(g.node(idx));
    if (r2 > r2_peak * (1.0 + 1e-12)) a0 = std::max(a0, (log_peak - std::log(f[idx])) / (r2 - r2_peak));
  }
  double k0 = std::numeric_limits<double>::infinity();
  for (std::size_t idx : interior)
    if (usable(idx)) k0 = std::min(k0, f[idx] * std::exp(a0 * norm2(g.node(idx))));
  out.a0_fit = a0;
  out.k0_fit = k0;
  out.pass = k0 > 0.0 && std::isfinite(k0) && out.zero_nodes.empty();
  return out;
}

Verdict check_moment_bound(const TimeSeries& series, double s) {
  double DiagnosticsRecord::*field = nullptr;
  if (s == 2.0) field = &DiagnosticsRecord::l1s2;
  if (s == 3.0) field = &DiagnosticsRecord::l1s3;
  if (!field) throw Error(ErrorKind::Domain, "series carries L^1_s for s = 2 and s = 3 only");
  const std::string name = s == 2.0 ? "moment_bound_s2" : "moment_bound_s3";
  if (series.records.empty()) return make(name, true, {}, "empty series");
  const double t_half = 0.5 * series.records.back().t;
  std::vector<double> t, y;
  double scale = 0.0;
  for (const auto& r : series.records) {
    scale = std::max(scale, std::abs(r.*field));
    if (r.t >= t_half) {
      t.push_back(r.t);
      y.push_back(r.*field);
    }
  }
  if (t.size() < 2) return make(name, true, {{"max", scale}}, "fewer than two samples in the final half");
  const Line fit = least_squares(t, y);
  return make(name, fit.slope <= 1e-6 * scale, {{"max", scale}, {"final_half_slope", fit.slope}});
}

RatioSeries entropy_inequality_ratio(std::span<const double> t, std::span<const double> d0, std::span<const double> h0,
                                     double gamma, double h_floor) {
  RatioSeries out;
  out.minimum = kNaN;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(d0[i]) || !std::isfinite(h0[i]) || h0[i] <= h_floor) continue;
    const double r = d0[i] / std::pow(h0[i], 1.0 + gamma);
    out.t.push_back(t[i]);
    out.ratio.push_back(r);
    out.minimum = std::isnan(out.minimum) ? r : std::min(out.minimum, r);
  }
  return out;
}

RatioSeries entropy_inequality_ratio(const TimeSeries& series, double gamma) {
  return entropy_inequality_ratio(channel(series, &DiagnosticsRecord::t), channel(series, &DiagnosticsRecord::d0_phi),
                                  channel(series, &DiagnosticsRecord::h0_phi_rel), gamma, 1e-14 * series.mass0);
}

double convolution_floor(const DistributionField& f, double gamma) {
  const auto& g = f.grid();
  const int n = g.n();
  const int w = 2 * n - 1;
  std::vector<double> kernel(static_cast<std::size_t>(w) * w * w);
  for (int a = 0; a < w; ++a)
    for (int b = 0; b < w; ++b)
      for (int c = 0; c < w; ++c) {
        const double d2 = static_cast<double>((a - n + 1) * (a - n + 1) + (b - n + 1) * (b - n + 1) + (c - n + 1) * (c - n + 1));
        kernel[(static_cast<std::size_t>(a) * w + b) * w + c] = std::pow(d2 * g.dv() * g.dv(), 0.5 * gamma);
      }
  const std::size_t size = g.size();
  Field conv(size, 0.0);
  const int workers = thread_count();
  run_workers(workers, [&](int worker) {
    std::vector<double> terms(size);
    for (std::size_t v = static_cast<std::size_t>(worker); v < size; v += static_cast<std::size_t>(workers)) {
      const int vi = static_cast<int>(v / (static_cast<std::size_t>(n) * n));
      const int vj = static_cast<int>(v / n % n);
      const int vk = static_cast<int>(v % n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            const std::size_t kidx = (static_cast<std::size_t>(vi - i + n - 1) * w + (vj - j + n - 1)) * w + (vk - k + n - 1);
            terms[g.index(i, j, k)] = f[g.index(i, j, k)] * kernel[kidx];
          }
      conv[v] = g.cell_volume() * pairwise_sum(terms);
    }
  });
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < size; ++v) out = std::min(out, conv[v] / std::pow(bracket(g.node(v)), gamma));
  return out;
}

std::vector<Verdict> verify_run(const SimConfig& cfg_in, TimeSeries* series_out) {
  SimConfig cfg = cfg_in;
  for (double ts : {1.0, 2.0})
    if (ts < cfg.t_end) cfg.snapshot_times.push_back(ts);
  std::vector<std::pair<double, DistributionField>> snaps;
  RunHooks hooks;
  hooks.on_snapshot = [&](const SolverState& s) {
    if (s.t > 0.0) snaps.emplace_back(s.t, s.f);
  };
  TimeSeries series = run(cfg, hooks);
  const auto& recs = series.records;
  const double gamma = cfg.kernel.gamma;
  std::vector<Verdict> out;

  out.push_back(make("conservation", series.max_drift < 1e-8, {{"max_relative_drift", series.max_drift}}));
  out.push_back(make("pauli_bound", series.kappa_floor >= 0.0 && recs.back().clamp_total <= 1e-12 * series.mass0,
                     {{"sup_max", series.sup_max}, {"kappa_floor", series.kappa_floor}, {"clamp_total", recs.back().clamp_total}}));

  double h_scale = 0.0;
  for (const auto& r : recs) h_scale = std::max(h_scale, std::abs(r.h_eps));
  double worst_rise = 0.0;
  for (std::size_t i = 1; i < recs.size(); ++i) worst_rise = std::max(worst_rise, recs[i].h_eps - recs[i - 1].h_eps);
  out.push_back(make("h_theorem", worst_rise <= 1e-10 * h_scale, {{"max_increase", worst_rise}, {"scale", h_scale}}));

  const double dh = std::abs(recs.front().h_eps - recs.back().h_eps);
  if (cfg.diagnostics.production) {
    const double res = recs.back().identity_residual;
    out.push_back(make("entropy_identity", res <= 5e-2 * dh + 1e-10 * h_scale,
                       {{"residual", res}, {"entropy_drop", dh}, {"relative", dh > 0.0 ? res / dh : kNaN}}));
  }

  if (cfg.diagnostics.production && cfg.diagnostics.sandwich) {
    double worst = std::numeric_limits<double>::infinity();
    int evaluated = 0;
    for (const auto& r : recs) {
      if (std::isnan(r.sand_lo)) continue;
      ++evaluated;
      const double scale = std::max({std::abs(r.d0_phi), std::abs(r.d_eps), std::abs(r.h0_phi_rel), std::abs(r.h_rel), 1e-300});
      worst = std::min(worst, std::min(r.sand_lo, r.sand_hi) / scale);
    }
    out.push_back(make("comparison_sandwich", evaluated == 0 || worst >= -1e-8,
                       {{"records", evaluated}, {"worst_scaled_margin", evaluated ? worst : kNaN}}));
  }
  if (cfg.diagnostics.ckp) {
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& r : recs) worst = std::min(worst, r.ckp_margin / std::max(std::abs(r.ckp_rhs), 1e-300));
    out.push_back(make("ckp_bound", worst >= -1e-8, {{"worst_scaled_margin", worst}}));
  }

  // A start within 1e-6 rho of equilibrium has nothing to decay; envelope checks pass vacuously.
  const bool at_equilibrium = recs.front().h_rel <= 1e-6 * series.mass0;
  auto envelope_verdict = [&](const std::string& name, auto&& fit_fn) {
    if (at_equilibrium) return make(name, true, {{"h_rel_initial", recs.front().h_rel}}, "equilibrium start");
    try {
      const EnvelopeFit f = fit_fn();
      return make(name, f.pass,
                  {{"c_fit", f.c_fit}, {"alpha_fit", f.alpha_fit}, {"exponent_floor", f.exponent_floor},
                   {"c_envelope", f.c_envelope}, {"t_envelope", f.t_envelope}, {"samples", f.samples}},
                  f.equilibrium_reached ? "channel reached zero" : "");
    } catch (const Error& e) {
      return make(name, false, {}, e.what());
    }
  };
  out.push_back(envelope_verdict("decay_rate", [&] { return fit_decay_rate(series, gamma); }));
  for (auto [p, k] : {std::pair{1.0, 0.0}, std::pair{1.0, 2.0}, std::pair{2.0, 0.0}}) {
    const std::string name = "lpk_decay_p" + std::to_string(static_cast<int>(p)) + "_k" + std::to_string(static_cast<int>(k));
    out.push_back(envelope_verdict(name, [&] { return check_lpk_decay(series, gamma, p, k); }));
  }

  out.push_back(check_moment_bound(series, 2.0));
  out.push_back(check_moment_bound(series, 3.0));

  {
    std::vector<std::pair<std::string, double>> metrics;
    bool pass = true;
    double a_lo = std::numeric_limits<double>::infinity(), a_hi = 0.0;
    for (const auto& [t, f] : snaps) {
      const GaussianFloor gf = fit_gaussian_floor(f, t);
      pass = pass && gf.pass;
      a_lo = std::min(a_lo, gf.a0_fit);
      a_hi = std::max(a_hi, gf.a0_fit);
      char label[32];
      std::snprintf(label, sizeof label, "t=%g", t);
      metrics.emplace_back(std::string("k0_fit ") + label, gf.k0_fit);
      metrics.emplace_back(std::string("a0_fit ") + label, gf.a0_fit);
      metrics.emplace_back(std::string("zero_nodes ") + label, static_cast<double>(gf.zero_nodes.size()));
    }
    const double ratio = a_lo > 0.0 ? a_hi / a_lo : kNaN;
    metrics.emplace_back("a0_ratio", ratio);
    out.push_back(make("gaussian_floor", pass && (snaps.size() < 2 || ratio <= 2.0), std::move(metrics)));
  }

  const double conv = convolution_floor(snaps.back().second, gamma);
  out.push_back(make("convolution_floor", conv > 0.0, {{"c_fit", conv}}));

  if (cfg.diagnostics.production && cfg.diagnostics.sandwich) {
    const RatioSeries rs = entropy_inequality_ratio(series, gamma);
    out.push_back(make("entropy_inequality_ratio", std::isnan(rs.minimum) || rs.minimum > 0.0,
                       {{"min_ratio", rs.minimum}, {"samples", static_cast<double>(rs.ratio.size())}}, "diagnostic"));
  }
  if (series_out) *series_out = std::move(series);
  return out;
}

}  // namespace bfd
