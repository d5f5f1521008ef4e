#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bfd/collision.hpp"
#include "bfd/entropy.hpp"
#include "bfd/equilibrium.hpp"
#include "bfd/error.hpp"
#include "support.hpp"

using namespace bfd;

namespace {

const KernelSpec kConstant = make_kernel(1.0, AngularKernel::constant(1.0 / (4.0 * std::numbers::pi)));

DistributionField bimodal(const GridPtr& g, double eps) {
  Field v = test::maxwellian_values(*g, 0.5, {1.0, 0, 0}, 0.8);
  const Field w = test::maxwellian_values(*g, 0.5, {-1.0, 0, 0}, 0.8);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i];
  return DistributionField(g, v, eps);
}

// Direct evaluation of the entropy density sum with the x log x = 0 convention.
double entropy_oracle(const DistributionField& f) {
  const double eps = f.eps();
  double s = 0.0;
  for (double x : f.values()) {
    if (x > 0.0) s += x * std::log(x);
    if (eps > 0.0 && 1.0 - eps * x > 0.0) s += (1.0 - eps * x) * std::log(1.0 - eps * x) / eps;
  }
  return s * f.grid().cell_volume();
}

}  // namespace

TEST_SUITE("entropy") {
  TEST_CASE("fd_entropy reference values") {
    const auto g = build_grid(16, 3.0);
    CHECK(fd_entropy(DistributionField(g, Field(g->size(), 0.0), 0.5)) == 0.0);
    const DistributionField sat = saturated_state(1.0, {}, 0.5, g);
    const double mass = moments(sat).rho;
    CHECK(fd_entropy(sat) == doctest::Approx(mass * std::log(1.0 / 0.5)).epsilon(1e-13));
    CHECK(mass == doctest::Approx(1.0).epsilon(0.2));
    for (double eps : {0.0, 0.2}) {
      const DistributionField f = test::random_field(g, eps, 3);
      CHECK(fd_entropy(f) == doctest::Approx(entropy_oracle(f)).epsilon(1e-12));
    }
  }

  TEST_CASE("the equilibrium minimizes entropy among same-moment fields") {
    const auto g = build_grid(16, 5.0);
    for (double eps : {0.0, 0.3}) {
      const DistributionField f = bimodal(g, eps);
      const DistributionField m(g, discrete_equilibrium(f).values, eps);
      const double hm = fd_entropy(m);
      CHECK(hm < fd_entropy(f));
      // Moment-preserving perturbations of M stay admissible and raise H.
      for (int seed = 0; seed < 5; ++seed) {
        // raw = W r projects to W (r - c.basis), so a step of 0.2 / max|r - c.basis| keeps 0 < v < 1/eps.
        const Field r = test::random_field(g, 0.0, 100 + static_cast<std::uint64_t>(seed), 1.0).values();
        Field raw(r.size()), weight(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
          weight[i] = m[i] * (1.0 - eps * m[i]);
          raw[i] = weight[i] * (r[i] - 0.5);
        }
        const Field d = weighted_projection(raw, m);
        double amp = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i)
          if (weight[i] > 0.0) amp = std::max(amp, std::abs(d[i]) / weight[i]);
        Field v = m.values();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.2 / amp * d[i];
        CHECK(fd_entropy(DistributionField(g, v, eps)) > hm);
      }
    }
  }

  TEST_CASE("phi_transform") {
    const auto g = build_grid(8, 3.0);
    const DistributionField f0 = test::random_field(g, 0.0, 4);
    CHECK(phi_transform(f0).values() == f0.values());
    const DistributionField f = test::random_field(g, 0.5, 5);
    const DistributionField p = phi_transform(f);
    CHECK(p.eps() == 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(p[i] == doctest::Approx(f[i] / (1.0 - 0.5 * f[i])).epsilon(1e-15));
    Field bigger = f.values();
    for (double& x : bigger) x = std::min(x * 1.1, 1.9);
    const DistributionField q = phi_transform(DistributionField(g, bigger, 0.5));
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(q[i] >= p[i]);
    CHECK_THROWS_AS(phi_transform(saturated_state(4.0, {}, 0.5, g)), Error);
    // Finite without overflow down to kappa = 1e-6.
    Field tight(g->size(), 0.0);
    tight[0] = (1.0 - 1e-6) / 0.5;
    CHECK(std::isfinite(fd_entropy(phi_transform(DistributionField(g, tight, 0.5)))));
  }

  TEST_CASE("entropy production is nonnegative and vanishes at equilibrium") {
    const auto g = build_grid(8, 4.0, 4, 4);
    for (int seed = 0; seed < 5; ++seed) CHECK(entropy_production(test::random_field(g, 0.4, 200 + static_cast<std::uint64_t>(seed)), kConstant) >= 0.0);
    // The discrete equilibrium is a zero of D only up to the interpolation error, which shrinks with dv.
    double prev = INFINITY;
    for (int n : {12, 16}) {
      const auto gn = build_grid(n, 5.0);
      const DistributionField f = bimodal(gn, 0.2);
      const DistributionField m(gn, discrete_equilibrium(f).values, 0.2);
      const double dm = entropy_production(m, kConstant);
      const double ratio = dm / entropy_production(f, kConstant);
      CAPTURE(n);
      CAPTURE(ratio);
      CHECK(dm >= 0.0);
      CHECK(ratio < 1e-2);
      CHECK(ratio < 0.5 * prev);
      prev = ratio;
    }
  }

  TEST_CASE("relative entropy") {
    const auto g = build_grid(16, 5.0);
    for (double eps : {0.0, 0.2}) {
      const DistributionField f = bimodal(g, eps);
      const GridEquilibrium m = discrete_equilibrium(f);
      const double h = relative_entropy(f);
      CHECK(h > 0.0);
      // With matched invariants the Bregman sum is the entropy difference.
      CHECK(h == doctest::Approx(fd_entropy(f) - fd_entropy(DistributionField(g, m.values, eps))).epsilon(1e-9));
      CHECK(relative_entropy(DistributionField(g, m.values, eps)) <= 1e-14);
    }
  }

  TEST_CASE("comparison sandwich") {
    const auto g = build_grid(8, 4.0, 4, 4);
    const SandwichReport r0 = comparison_sandwich(test::random_field(g, 0.0, 300), kConstant, 1.0);
    CHECK(r0.pass);
    CHECK(std::abs(r0.entropy_margin) <= 1e-12 * r0.scale);
    CHECK(std::abs(r0.lower_margin) <= 1e-12 * r0.scale);
    CHECK(std::abs(r0.upper_margin) <= 1e-12 * r0.scale);
    for (int seed = 0; seed < 10; ++seed) {
      const DistributionField f = test::random_field(g, 0.5, 310 + static_cast<std::uint64_t>(seed), 1.0);
      if (f.kappa_min() < 0.5) continue;
      const SandwichReport r = comparison_sandwich(f, kConstant, 0.5);
      CHECK(r.precondition_met);
      CHECK(r.pass);
    }
    const DistributionField f = test::random_field(g, 0.5, 330, 0.2);
    double prev = -INFINITY;
    for (double k0 : {0.25, 0.5, 0.75}) {
      const SandwichReport r = comparison_sandwich(f, kConstant, k0);
      CHECK(r.pass);
      CHECK(r.values.d_eps - r.lower_margin > prev);
      prev = r.values.d_eps - r.lower_margin;
    }
    const auto g16 = build_grid(16, 5.0);
    const DistributionField m(g16, discrete_equilibrium(bimodal(g16, 0.2)).values, 0.2);
    const SandwichReport rm = comparison_sandwich(m, kConstant, m.kappa_min());
    CHECK(rm.values.h_eps_rel <= 1e-14);
    CHECK(rm.values.d_eps <= 1e-3);
  }

  TEST_CASE("CKP bound") {
    const auto g = build_grid(16, 5.0);
    const DistributionField f = bimodal(g, 0.0);
    const GridEquilibrium m = discrete_equilibrium(f);
    const CkpResult c = ckp_bound(f, 1.0, 0.0);
    double l1 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) l1 += std::abs(f[i] - m.values[i]);
    l1 *= g->cell_volume();
    CHECK(c.lhs == doctest::Approx(l1 * l1).epsilon(1e-12));
    CHECK(c.rhs == doctest::Approx(2.0 * moments(f).rho * relative_entropy(f)).epsilon(1e-12));
    CHECK(c.lhs <= c.rhs);
    for (double eps : {0.0, 0.3})
      for (double p : {1.0, 1.5, 2.0})
        for (double k : {0.0, 2.0}) {
          const CkpResult r = ckp_bound(bimodal(g, eps), p, k);
          CAPTURE(p);
          CAPTURE(k);
          CHECK(r.lhs <= r.rhs);
        }
    const DistributionField meq(g, m.values, 0.0);
    const CkpResult z = ckp_bound(meq, 1.0, 2.0);
    CHECK(z.lhs <= 1e-24);
    CHECK(z.rhs <= 1e-12);
    CHECK_THROWS_AS(ckp_bound(f, 3.0, 0.0), Error);
  }

  TEST_CASE("entropy report agrees with the individual functionals") {
    const auto g = build_grid(8, 4.0, 4, 4);
    const DistributionField f = test::random_field(g, 0.3, 400);
    const EntropyReport r = entropy_report(f, kConstant);
    CHECK(r.h_eps == doctest::Approx(fd_entropy(f)).epsilon(1e-14));
    CHECK(r.h_eps_rel == doctest::Approx(relative_entropy(f)).epsilon(1e-12));
    CHECK(r.d_eps == doctest::Approx(entropy_production(f, kConstant)).epsilon(1e-12));
    CHECK(r.d0_phi == doctest::Approx(production_integral(f, kConstant, ProductionKind::ClassicalPhi)).epsilon(1e-12));
    CHECK(r.h0_phi_rel == doctest::Approx(relative_entropy(phi_transform(f))).epsilon(1e-12));
    CHECK(r.kappa_min == f.kappa_min());
  }
}
