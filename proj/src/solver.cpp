#include "bfd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "bfd/entropy.hpp"
#include "bfd/equilibrium.hpp"
#include "bfd/error.hpp"

namespace bfd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_maxwellian(const MaxwellianSpec& m) {
  if (!(m.rho > 0.0) || !(m.t > 0.0)) throw Error(ErrorKind::Domain, "Maxwellian needs rho > 0 and T > 0");
}

double maxwellian(const MaxwellianSpec& m, const Vec3& v) {
  const double r2 = norm2(v - m.u);
  return m.rho * std::pow(2.0 * std::numbers::pi * m.t, -1.5) * std::exp(-0.5 * r2 / m.t);
}

// Logistic form of e^{a + b r^2} / (1 + eps e^{a + b r^2}).
double fd_value(double a, double b, double eps, double r2) {
  const double x = a + b * r2;
  if (eps == 0.0) return std::exp(x);
  const double y = x + std::log(eps);
  return y > 0.0 ? 1.0 / (eps * (1.0 + std::exp(-y))) : std::exp(x) / (1.0 + std::exp(y));
}

}  // namespace

Moments datum_moments(const InitialDatum& d, double eps) {
  return std::visit(
      Overloaded{
          [](const TwoMaxwellians& tm) {
            check_maxwellian(tm.first);
            check_maxwellian(tm.second);
            Moments m;
            m.rho = tm.first.rho + tm.second.rho;
            m.u = (tm.first.rho * tm.first.u + tm.second.rho * tm.second.u) * (1.0 / m.rho);
            double energy = 0.0;
            for (const auto* c : {&tm.first, &tm.second}) energy += c->rho * (3.0 * c->t + norm2(c->u - m.u));
            m.e = energy / (3.0 * m.rho);
            return m;
          },
          [](const ScaledEquilibrium& se) {
            if (!(se.rho > 0.0) || !(se.e > 0.0)) throw Error(ErrorKind::Domain, "equilibrium needs rho > 0 and e > 0");
            return Moments{se.rho, se.u, se.e};
          },
          [eps](const NearSaturated& ns) {
            if (!(eps > 0.0)) throw Error(ErrorKind::Domain, "near-saturated datum needs eps > 0");
            if (!(ns.fill > 0.0 && ns.fill < 1.0)) throw Error(ErrorKind::Domain, "fill fraction must lie in (0, 1)");
            if (!(ns.radius > 0.0)) throw Error(ErrorKind::Domain, "radius must be positive");
            const double vol = 4.0 / 3.0 * std::numbers::pi * ns.radius * ns.radius * ns.radius;
            return Moments{ns.fill / eps * vol, ns.u, ns.radius * ns.radius / 5.0};
          },
          [](const FileDatum& fd) { return moments(read_snapshot(fd.path)); },
      },
      d);
}

GridPtr config_grid(const SimConfig& cfg) {
  if (const auto* fd = std::get_if<FileDatum>(&cfg.initial)) {
    const DistributionField f = read_snapshot(fd->path, cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.interpolation);
    const auto& g = f.grid();
    if (g.n() != cfg.grid.n || (cfg.grid.l > 0.0 && g.l() != cfg.grid.l))
      throw Error(ErrorKind::GridMismatch, "snapshot grid differs from the configured grid");
    return build_grid(g.n(), g.l(), cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.interpolation);
  }
  double l = cfg.grid.l;
  if (!(l > 0.0)) l = 6.0 * std::sqrt(datum_moments(cfg.initial, cfg.eps).e);
  return build_grid(cfg.grid.n, l, cfg.grid.n_theta, cfg.grid.n_phi, cfg.grid.interpolation);
}

DistributionField initial_field(const SimConfig& cfg, const GridPtr& grid) {
  const double eps = cfg.eps;
  if (!(eps >= 0.0)) throw Error(ErrorKind::Domain, "eps must be nonnegative");
  const std::size_t size = grid->size();
  Field values(size);
  std::visit(
      Overloaded{
          [&](const TwoMaxwellians& tm) {
            check_maxwellian(tm.first);
            check_maxwellian(tm.second);
            for (std::size_t i = 0; i < size; ++i) {
              const Vec3 v = grid->node(i);
              values[i] = maxwellian(tm.first, v) + maxwellian(tm.second, v);
            }
          },
          [&](const ScaledEquilibrium& se) {
            if (!(std::abs(se.amplitude) < 1.0)) throw Error(ErrorKind::Domain, "perturbation amplitude must lie in (-1, 1)");
            double a = std::log(se.rho * std::pow(2.0 * std::numbers::pi * se.e, -1.5));
            double b = -0.5 / se.e;
            if (eps > 0.0) {
              const FermiDiracParams p = fit_fermi_dirac(se.rho, se.u, se.e, eps);
              a = p.a_eps;
              b = p.b_eps;
            }
            const double scale = 1.0 / std::sqrt(se.e);
            for (std::size_t i = 0; i < size; ++i) {
              const Vec3 w = (grid->node(i) - se.u) * scale;
              const double h = 2.0 * w.x * w.y / (1.0 + w.x * w.x + w.y * w.y);
              values[i] = fd_value(a, b, eps, se.e * norm2(w)) * (1.0 + se.amplitude * h);
            }
          },
          [&](const NearSaturated& ns) {
            datum_moments(ns, eps);
            for (std::size_t i = 0; i < size; ++i)
              values[i] = norm2(grid->node(i) - ns.u) <= ns.radius * ns.radius ? ns.fill / eps : 0.0;
          },
          [&](const FileDatum& fd) {
            const DistributionField f = read_snapshot(fd.path, grid->n_theta(), grid->n_phi(), grid->interpolation());
            if (f.grid().n() != grid->n() || f.grid().l() != grid->l())
              throw Error(ErrorKind::GridMismatch, "snapshot grid differs from the run grid");
            values = f.values();
          },
      },
      cfg.initial);
  if (eps > 0.0) {
    const double sup = *std::max_element(values.begin(), values.end());
    if (eps * sup > 1.0 + 1e-12)
      throw Error(ErrorKind::PauliViolation, "initial datum exceeds 1/eps (eps sup f = " + std::to_string(eps * sup) + ")");
  }
  return DistributionField(grid, std::move(values), eps);
}

double adaptive_dt(const DistributionField& f, const CollisionOutput& q, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw Error(ErrorKind::Domain, "theta must lie in (0, 1)");
  const double eps = f.eps();
  double rate = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = f[i];
    if (x > 1e-300) rate = std::max({rate, q.loss[i] / x, -q.net[i] / x});
    const double room = 1.0 - eps * x;
    if (eps > 0.0 && room > 1e-300) rate = std::max({rate, eps * q.gain[i] / room, eps * q.net[i] / room});
  }
  if (rate == 0.0) return std::numeric_limits<double>::infinity();
  const double dt = theta / rate;
  if (dt < 1e-12) throw Error(ErrorKind::Stagnation, "adaptive step below 1e-12");
  return dt;
}

double adaptive_dt(const SolverState& s, const KernelSpec& k, double theta) {
  return adaptive_dt(s.f, q_eps(s.f, k), theta);
}

SolverState step(const SolverState& s, const CollisionOutput& q, double dt) {
  if (!(dt >= 0.0)) throw Error(ErrorKind::Domain, "dt must be nonnegative");
  const double eps = s.f.eps();
  const double cap = eps > 0.0 ? 1.0 / eps : std::numeric_limits<double>::infinity();
  Field next(s.f.size());
  Field clamped(s.f.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double raw = s.f[i] + dt * q.net[i];
    const double c = std::clamp(raw, 0.0, cap);
    clamped[i] = std::abs(raw - c);
    next[i] = c;
    total += s.f[i];
  }
  const auto& grid = s.f.grid();
  const double clamp_mass = integrate(grid, clamped);
  if (clamp_mass > 1e-12 * total * grid.cell_volume())
    throw Error(ErrorKind::BoundViolation, "clamping of " + std::to_string(clamp_mass) + " exceeds tolerance; dt breaches the bound");
  SolverState out{s.t + dt, DistributionField(s.f.grid_ptr(), std::move(next), eps), s.step_count + 1, dt,
                  s.clamp_total + clamp_mass};
  return out;
}

SolverState step(const SolverState& s, const KernelSpec& k, double dt) {
  if (dt == 0.0) return s;
  return step(s, q_eps(s.f, k), dt);
}

namespace {

struct Recorder {
  const SimConfig& cfg;
  GridEquilibrium reference;
  std::array<double, 5> inv0{};
  double rho0 = 0.0;
  double e0 = 0.0;
  double h0 = 0.0;
  double integral = 0.0;
  double t_prev = 0.0;
  double d_prev = 0.0;
  bool first = true;

  Recorder(const SimConfig& c, const DistributionField& f0) : cfg(c), reference(discrete_equilibrium(f0)) {
    inv0 = invariant_integrals(f0.grid(), f0.values());
    const Moments m = moments(f0);
    rho0 = m.rho;
    e0 = m.e;
  }

  double drift(const DistributionField& f) const {
    const auto inv = invariant_integrals(f.grid(), f.values());
    double worst = std::abs(inv[0] - inv0[0]) / inv0[0];
    for (int c = 1; c < 4; ++c) worst = std::max(worst, std::abs(inv[c] - inv0[c]) / (inv0[0] * std::sqrt(e0)));
    return std::max(worst, std::abs(inv[4] - inv0[4]) / inv0[4]);
  }

  DiagnosticsRecord record(const SolverState& s, double production) {
    const DistributionField& f = s.f;
    const auto& grid = f.grid();
    DiagnosticsRecord r;
    r.step = s.step_count;
    r.t = s.t;
    r.dt = s.dt_last;
    r.m = moments(f);
    r.sup_f = f.sup();
    r.kappa_min = f.kappa_min();
    r.l1s2 = lebesgue_norm(f, 1.0, 2.0);
    r.l1s3 = lebesgue_norm(f, 1.0, 3.0);
    r.h_eps = fd_entropy(f);
    const GridEquilibrium current = discrete_equilibrium(f);
    r.h_rel = relative_entropy(f, current.values);
    r.d_eps = cfg.diagnostics.production ? production : kNaN;
    Field diff(f.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = f[i] - reference.values[i];
    r.dist_l1k0 = lebesgue_norm(grid, diff, 1.0, 0.0);
    r.dist_l1k2 = lebesgue_norm(grid, diff, 1.0, 2.0);
    r.dist_l2k0 = lebesgue_norm(grid, diff, 2.0, 0.0);
    r.h0_phi_rel = r.d0_phi = r.sand_lo = r.sand_hi = kNaN;
    if (cfg.diagnostics.sandwich && cfg.diagnostics.production && r.kappa_min >= 1e-10) {
      const DistributionField g = phi_transform(f);
      r.h0_phi_rel = relative_entropy(g, discrete_equilibrium(g).values);
      r.d0_phi = production_integral(f, cfg.kernel, ProductionKind::ClassicalPhi);
      const double k2 = r.kappa_min * r.kappa_min;
      r.sand_lo = r.d_eps - k2 * k2 * r.d0_phi;
      r.sand_hi = std::min(r.d0_phi - r.d_eps, r.h0_phi_rel - r.h_rel);
    }
    r.ckp_margin = r.ckp_rhs = kNaN;
    if (cfg.diagnostics.ckp) {
      const CkpResult c = ckp_bound(f, current.values, r.h_rel, 1.0, 2.0);
      r.ckp_margin = c.rhs - c.lhs;
      r.ckp_rhs = c.rhs;
    }
    if (first) {
      h0 = r.h_eps;
      first = false;
    } else {
      integral += 0.5 * (d_prev + r.d_eps) * (r.t - t_prev);
    }
    t_prev = r.t;
    d_prev = r.d_eps;
    r.identity_residual = cfg.diagnostics.production ? std::abs(r.h_eps - h0 + integral) : kNaN;
    r.clamp_total = s.clamp_total;
    return r;
  }
};

}  // namespace

TimeSeries run(const SimConfig& cfg, SolverState& state, const RunHooks& hooks) {
  cfg.kernel.validate();
  if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) throw Error(ErrorKind::Domain, "theta must lie in (0, 1)");
  if (cfg.diag_stride < 1) throw Error(ErrorKind::Domain, "diag_stride must be at least 1");
  if (!(cfg.t_end >= state.t)) throw Error(ErrorKind::Domain, "t_end precedes the initial time");

  std::vector<double> stops;
  for (double ts : cfg.snapshot_times)
    if (ts > state.t && ts < cfg.t_end) stops.push_back(ts);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  stops.push_back(cfg.t_end);
  std::size_t next_stop = 0;

  Recorder rec(cfg, state.f);
  TimeSeries series;
  series.mass0 = rec.rho0;
  auto emit = [&](double production) {
    DiagnosticsRecord r = rec.record(state, production);
    series.records.push_back(r);
    series.max_drift = std::max(series.max_drift, rec.drift(state.f));
    if (hooks.on_record) hooks.on_record(r);
  };
  if (hooks.on_snapshot) hooks.on_snapshot(state);
  series.sup_max = state.f.sup();
  series.kappa_floor = state.f.kappa_min();

  const bool want_d = cfg.diagnostics.production;
  std::int64_t local = 0;
  while (state.t < cfg.t_end) {
    const bool diag = local % cfg.diag_stride == 0;
    double production = 0.0;
    const CollisionOutput q = q_eps(state.f, cfg.kernel, diag && want_d ? &production : nullptr);
    if (diag) emit(production);
    const double target = stops[next_stop];
    double dt = adaptive_dt(state.f, q, cfg.theta);
    const bool lands = dt >= target - state.t;
    if (lands) dt = target - state.t;
    state = step(state, q, dt);
    series.sup_max = std::max(series.sup_max, state.f.sup());
    series.kappa_floor = std::min(series.kappa_floor, state.f.kappa_min());
    ++local;
    if (lands) {
      state.t = target;
      ++next_stop;
      if (hooks.on_snapshot && state.t < cfg.t_end) hooks.on_snapshot(state);
    }
  }
  const double production = want_d ? production_integral(state.f, cfg.kernel, ProductionKind::FermiDirac) : 0.0;
  emit(production);
  if (hooks.on_snapshot) hooks.on_snapshot(state);
  series.t_end = state.t;
  return series;
}

TimeSeries run(const SimConfig& cfg, const RunHooks& hooks) {
  const GridPtr grid = config_grid(cfg);
  SolverState state{0.0, initial_field(cfg, grid), 0, 0.0, 0.0};
  return run(cfg, state, hooks);
}

const char* const kSeriesHeader =
    "t,rho,ux,uy,uz,E,sup_f,kappa_min,l1s2,l1s3,H_eps,H_rel,D_eps,l1k2_dist,sand_lo,sand_hi,ckp_margin";
const char* const kExtraHeader = "step,t,dt,H0_phi_rel,D0_phi,l1k0_dist,l2k0_dist,identity_residual,clamp_total";

namespace {

std::string join(std::initializer_list<double> xs) {
  std::string out;
  char buf[40];
  bool first = true;
  for (double x : xs) {
    if (!first) out += ',';
    first = false;
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
  }
  return out;
}

}  // namespace

std::string series_row(const DiagnosticsRecord& r) {
  return join({r.t, r.m.rho, r.m.u.x, r.m.u.y, r.m.u.z, r.m.e, r.sup_f, r.kappa_min, r.l1s2, r.l1s3, r.h_eps, r.h_rel,
               r.d_eps, r.dist_l1k2, r.sand_lo, r.sand_hi, r.ckp_margin});
}

std::string extra_row(const DiagnosticsRecord& r) {
  return std::to_string(r.step) + ',' +
         join({r.t, r.dt, r.h0_phi_rel, r.d0_phi, r.dist_l1k0, r.dist_l2k0, r.identity_residual, r.clamp_total});
}

}  // namespace bfd
