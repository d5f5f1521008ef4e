#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "bfd/equilibrium.hpp"
#include "bfd/error.hpp"
#include "bfd/verify.hpp"
#include "support.hpp"

using namespace bfd;

namespace {

TimeSeries synthetic(std::size_t count, double t_end, double DiagnosticsRecord::*field, double (*y)(double)) {
  TimeSeries s;
  s.mass0 = 1.0;
  for (std::size_t i = 0; i < count; ++i) {
    DiagnosticsRecord r;
    r.t = t_end * static_cast<double>(i) / static_cast<double>(count - 1);
    r.*field = y(r.t);
    s.records.push_back(r);
  }
  return s;
}

Field gaussian(const VelocityGrid& g, double k, double a, const Vec3& c = {}) {
  Field v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = k * std::exp(-a * norm2(g.node(i) - c));
  return v;
}

SimConfig tiny_run(double eps) {
  SimConfig cfg;
  cfg.grid = GridSpec{8, 4.0, 4, 4, Interpolation::Cubic};
  cfg.kernel = make_kernel(1.0, AngularKernel::constant(0.05));
  cfg.eps = eps;
  cfg.initial = TwoMaxwellians{{0.5, {1.0, 0, 0}, 0.8}, {0.5, {-1.0, 0, 0}, 0.8}};
  cfg.t_end = 0.3;
  cfg.diag_stride = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("verify") {
  TEST_CASE("envelope fit recovers exact power laws") {
    for (double gamma : {0.5, 1.0}) {
      static double g_exp;
      g_exp = -1.0 / gamma;
      const TimeSeries s = synthetic(60, 20.0, &DiagnosticsRecord::h_rel, [](double t) { return std::pow(1.0 + t, g_exp); });
      const EnvelopeFit f = fit_decay_rate(s, gamma);
      CHECK(std::abs(f.alpha_fit + 1.0 / gamma) <= 1e-10);
      CHECK(std::abs(f.c_fit - 1.0) <= 1e-10);
      CHECK(f.c_envelope == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(f.pass);
    }
    const TimeSeries l1 = synthetic(40, 10.0, &DiagnosticsRecord::dist_l1k0, [](double t) { return 2.0 * std::pow(1.0 + t, -0.5); });
    const EnvelopeFit f = check_lpk_decay(l1, 1.0, 1.0, 0.0);
    CHECK(std::abs(f.alpha_fit + 0.5) <= 1e-10);
    CHECK(std::abs(f.c_fit - 2.0) <= 1e-10);
    CHECK(f.exponent_floor == -0.5);
    CHECK(f.pass);
    CHECK(check_lpk_decay(l1, 1.0, 2.0, 0.0).exponent_floor == -0.25);
    CHECK_THROWS_AS(check_lpk_decay(l1, 1.0, 2.0, 2.0), Error);
  }

  TEST_CASE("exponential decay passes, slow decay and late envelopes fail") {
    const TimeSeries e = synthetic(50, 10.0, &DiagnosticsRecord::h_rel, [](double t) { return std::exp(-t); });
    const EnvelopeFit fe = fit_decay_rate(e, 1.0);
    CHECK(fe.alpha_fit < -2.0);
    CHECK(fe.pass);
    CHECK(fe.t_envelope < 2.0);
    const TimeSeries slow = synthetic(50, 10.0, &DiagnosticsRecord::h_rel, [](double t) { return std::pow(1.0 + t, -0.5); });
    CHECK_FALSE(fit_decay_rate(slow, 1.0).pass);
    CHECK(fit_decay_rate(slow, 1.0).t_envelope == 10.0);
  }

  TEST_CASE("envelope fit data requirements") {
    const TimeSeries few = synthetic(10, 10.0, &DiagnosticsRecord::h_rel, [](double t) { return std::exp(-t); });
    try {
      fit_decay_rate(few, 1.0);
      FAIL("expected insufficient data");
    } catch (const Error& err) {
      CHECK(err.kind() == ErrorKind::InsufficientData);
    }
    const TimeSeries zero = synthetic(30, 10.0, &DiagnosticsRecord::h_rel, [](double t) { return t < 3.0 ? std::exp(-t) : 0.0; });
    const EnvelopeFit fz = fit_decay_rate(zero, 1.0);
    CHECK(fz.equilibrium_reached);
    CHECK(fz.pass);
    CHECK(std::isfinite(fz.c_envelope));
  }

  TEST_CASE("Gaussian floor") {
    const auto g = build_grid(16, 4.0);
    const GaussianFloor exact = fit_gaussian_floor(DistributionField(g, gaussian(*g, 0.7, 0.45), 0.0), 1.0);
    CHECK(std::abs(exact.k0_fit - 0.7) <= 1e-10 * 0.7);
    CHECK(std::abs(exact.a0_fit - 0.45) <= 1e-10 * 0.45);
    CHECK(exact.pass);
    CHECK(exact.zero_nodes.empty());
    CHECK(exact.t_label == 1.0);
    // Linear in the field, invariant exponent.
    const Field base = gaussian(*g, 1.0, 0.3, {0.5, 0, 0});
    const GaussianFloor a = fit_gaussian_floor(DistributionField(g, base, 0.0), 0.0);
    Field scaled = base;
    for (double& x : scaled) x *= 3.5;
    const GaussianFloor b = fit_gaussian_floor(DistributionField(g, scaled, 0.0), 0.0);
    CHECK(b.k0_fit == doctest::Approx(3.5 * a.k0_fit).epsilon(1e-12));
    CHECK(b.a0_fit == doctest::Approx(a.a0_fit).epsilon(1e-12));
    // Fermi-Dirac tails are Gaussian with rate |b_eps|, flatter near the peak.
    const FermiDiracParams p = fit_fermi_dirac(1.0, {}, 1.0, 2.0);
    const GaussianFloor fd = fit_gaussian_floor(sample_fermi_dirac(p, build_grid(16, 6.0)), 0.0);
    CHECK(fd.pass);
    CHECK(fd.a0_fit <= -p.b_eps * (1.0 + 1e-12));
    CHECK(fd.a0_fit == doctest::Approx(-p.b_eps).epsilon(0.05));
    // A vacuum node inside the interior is reported.
    Field holed = base;
    holed[g->index(3, 3, 3)] = 0.0;
    const GaussianFloor h = fit_gaussian_floor(DistributionField(g, holed, 0.0), 0.0);
    CHECK_FALSE(h.pass);
    CHECK(h.zero_nodes.size() == 1);
    CHECK(h.positive_radius == doctest::Approx(norm(g->node(3, 3, 3) - h.v_peak)));
  }

  TEST_CASE("moment bound") {
    const TimeSeries flat = synthetic(30, 5.0, &DiagnosticsRecord::l1s3, [](double) { return 4.2; });
    CHECK(check_moment_bound(flat, 3.0).pass);
    const TimeSeries falling = synthetic(30, 5.0, &DiagnosticsRecord::l1s3, [](double t) { return 4.0 + std::exp(-t); });
    CHECK(check_moment_bound(falling, 3.0).pass);
    const TimeSeries rising = synthetic(30, 5.0, &DiagnosticsRecord::l1s3, [](double t) { return 4.0 + 1e-3 * t; });
    CHECK_FALSE(check_moment_bound(rising, 3.0).pass);
    CHECK(check_moment_bound(rising, 3.0).name == "moment_bound_s3");
    CHECK_THROWS_AS(check_moment_bound(flat, 4.0), Error);
  }

  TEST_CASE("entropy inequality ratio") {
    const std::vector<double> t{0, 1, 2, 3}, h{0.5, 0.2, 0.1, 1e-20};
    std::vector<double> d;
    for (double x : h) d.push_back(std::pow(x, 2.0));
    const RatioSeries r = entropy_inequality_ratio(t, d, h, 1.0, 1e-14);
    CHECK(r.ratio.size() == 3);
    for (double x : r.ratio) CHECK(x == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.minimum == doctest::Approx(1.0).epsilon(1e-14));
    const std::vector<double> zeros(4, 0.0);
    CHECK(std::isnan(entropy_inequality_ratio(t, zeros, zeros, 1.0, 1e-14).minimum));
  }

  TEST_CASE("convolution floor against a direct double sum") {
    const auto g = build_grid(8, 3.0);
    const DistributionField f = test::random_field(g, 0.0, 900);
    for (double gamma : {0.5, 1.0}) {
      double oracle = INFINITY;
      for (std::size_t v = 0; v < f.size(); ++v) {
        double s = 0.0;
        for (std::size_t w = 0; w < f.size(); ++w) s += f[w] * std::pow(norm(g->node(v) - g->node(w)), gamma);
        oracle = std::min(oracle, s * g->cell_volume() / std::pow(bracket(g->node(v)), gamma));
      }
      CHECK(convolution_floor(f, gamma) == doctest::Approx(oracle).epsilon(1e-12));
    }
    Field scaled = f.values();
    for (double& x : scaled) x *= 4.0;
    CHECK(convolution_floor(DistributionField(g, scaled, 0.0), 1.0) == doctest::Approx(4.0 * convolution_floor(f, 1.0)).epsilon(1e-13));
    Field single(g->size(), 0.0);
    single[g->index(4, 4, 4)] = 2.0;
    // The only mass sits on a node, whose own convolution value is zero.
    CHECK(convolution_floor(DistributionField(g, single, 0.0), 1.0) == 0.0);
    CHECK(convolution_floor(DistributionField(g, test::maxwellian_values(*g, 1.0, {}, 1.0), 0.0), 1.0) > 0.0);
  }

  TEST_CASE("non-saturation verdicts on sweep data") {
    SweepResult r;
    r.eps_values = {0.0, 0.1, 0.25};
    r.sup_linf = {2.0, 1.9, 1.8};
    r.kappa_floor = {1.0, 1.0 - 0.1 * 1.9, 1.0 - 0.25 * 1.8};
    CHECK(r.kappa_floor[0] == 1.0);
    CHECK(check_nonsaturation(r, 0.5).pass);
    const Verdict strict = check_nonsaturation(r, 0.99);
    CHECK(strict.name == "nonsaturation");
    CHECK(strict.pass);  // only eps = 0 lies below (1 - 0.99) / 2
    // eps = 0.25 lies below (1 - 0.5) / 1.9, so its floor must reach 0.5.
    r.kappa_floor[2] = 0.3;
    CHECK_FALSE(check_nonsaturation(r, 0.5).pass);
    CHECK(check_nonsaturation(r, 0.6).pass);
  }

  TEST_CASE("eps sweep over short runs") {
    const SimConfig cfg = tiny_run(0.0);
    const std::vector<double> one{0.1};
    const SweepResult single = check_linfty_uniform(cfg, one);
    CHECK(single.spread == 1.0);
    CHECK(single.pass);
    const std::vector<double> list{0.0, 0.05, 0.1};
    const SweepResult r = check_linfty_uniform(cfg, list);
    CHECK(r.eps_values == list);
    CHECK(r.kappa_floor[0] == 1.0);
    for (double s : r.sup_linf) CHECK(std::isfinite(s));
    CHECK(r.pass);
    CHECK(check_nonsaturation(r, 0.5).pass);
    const std::vector<double> bad{0.1, 0.05};
    CHECK_THROWS_AS(check_linfty_uniform(cfg, bad), Error);
  }

  TEST_CASE("verify_run from an equilibrium start") {
    SimConfig cfg = tiny_run(0.3);
    cfg.grid = GridSpec{8, 5.0, 4, 4, Interpolation::Cubic};
    cfg.initial = ScaledEquilibrium{1.0, {}, 1.0, 0.0};
    cfg.t_end = 2.5;
    cfg.diag_stride = 1;
    TimeSeries series;
    const std::vector<Verdict> v = verify_run(cfg, &series);
    CHECK(series.records.front().h_rel <= 1e-12);
    std::set<std::string> names;
    for (const auto& x : v) {
      CAPTURE(x.name);
      names.insert(x.name);
      if (x.name.starts_with("decay_rate") || x.name.starts_with("lpk_decay")) {
        CHECK(x.pass);
        CHECK(x.note == "equilibrium start");
      }
      if (x.name == "conservation" || x.name == "pauli_bound" || x.name == "ckp_bound" || x.name.starts_with("moment_bound") ||
          x.name == "gaussian_floor" || x.name == "comparison_sandwich")
        CHECK(x.pass);
    }
    for (const char* n : {"conservation", "pauli_bound", "h_theorem", "entropy_identity", "comparison_sandwich", "ckp_bound",
                          "decay_rate", "moment_bound_s2", "moment_bound_s3", "gaussian_floor", "convolution_floor",
                          "entropy_inequality_ratio"})
      CHECK(names.count(n) == 1);
    // The scheme's fixed point is not the discrete entropy minimizer, so the trajectory leaves it and H
    // rises by the consistency error, about 1e-4 of the entropy scale on this 8^3 grid.
    double rise = 0.0;
    for (std::size_t i = 1; i < series.records.size(); ++i)
      rise = std::max(rise, series.records[i].h_eps - series.records.front().h_eps);
    CHECK(rise <= 1e-3 * std::abs(series.records.front().h_eps));
  }
}
