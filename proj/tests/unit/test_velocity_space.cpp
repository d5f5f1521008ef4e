#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "bfd/equilibrium.hpp"
#include "bfd/error.hpp"
#include "bfd/velocity_space.hpp"
#include "support.hpp"

using namespace bfd;
using std::numbers::pi;

TEST_SUITE("velocity_space") {
  TEST_CASE("build_grid construction") {
    const auto g = build_grid(8, 4.0, 4, 4);
    CHECK(g->dv() == 1.0);
    CHECK(g->size() == 512);
    CHECK(g->sphere().size() == 16);
    double w = 0.0;
    Vec3 first{};
    for (const auto& s : g->sphere()) {
      w += s.w;
      first += s.w * s.sigma;
      CHECK(norm(s.sigma) == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(w == doctest::Approx(4.0 * pi).epsilon(1e-14));
    CHECK(norm(first) < 1e-13);
    CHECK(g->coord(0) == -3.5);
    CHECK(g->node(g->index(7, 0, 3)) == Vec3{3.5, -3.5, -0.5});
    CHECK_THROWS_AS(build_grid(7, 4.0), Error);
    CHECK_THROWS_AS(build_grid(6, 4.0), Error);
    CHECK_THROWS_AS(build_grid(8, 0.0), Error);
    CHECK_THROWS_AS(build_grid(8, 4.0, 3, 8), Error);
    CHECK(std::string(to_string(Interpolation::Linear)) == "linear");
    CHECK(interpolation_from_string("cubic") == Interpolation::Cubic);
    CHECK_THROWS_AS(interpolation_from_string("spline"), Error);
  }

  TEST_CASE("sphere rule integrates low-degree polynomials") {
    const auto g = build_grid(8, 4.0, 8, 8);
    double xx = 0.0, x4 = 0.0, xyz2 = 0.0;
    for (const auto& s : g->sphere()) {
      xx += s.w * s.sigma.x * s.sigma.x;
      x4 += s.w * std::pow(s.sigma.z, 4);
      xyz2 += s.w * s.sigma.x * s.sigma.x * s.sigma.y * s.sigma.y;
    }
    CHECK(xx == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-13));
    CHECK(x4 == doctest::Approx(4.0 * pi / 5.0).epsilon(1e-13));
    CHECK(xyz2 == doctest::Approx(4.0 * pi / 15.0).epsilon(1e-13));
  }

  TEST_CASE("post_collision reference values and conservation") {
    auto [p, ps] = post_collision({1, 0, 0}, {-1, 0, 0}, {0, 1, 0});
    CHECK(norm(p - Vec3{0, 1, 0}) < 1e-15);
    CHECK(norm(ps - Vec3{0, -1, 0}) < 1e-15);
    const Vec3 v{0.3, -1.2, 2.0}, w{-0.7, 0.4, 0.1};
    const Vec3 d = v - w;
    std::tie(p, ps) = post_collision(v, w, d * (1.0 / norm(d)));
    CHECK(norm(p - v) < 1e-14);
    CHECK(norm(ps - w) < 1e-14);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int t = 0; t < 1000; ++t) {
      const Vec3 a{g(rng), g(rng), g(rng)}, b{g(rng), g(rng), g(rng)};
      Vec3 s{g(rng), g(rng), g(rng)};
      s = s * (1.0 / norm(s));
      std::tie(p, ps) = post_collision(a, b, s);
      const double e = norm2(a) + norm2(b);
      CHECK(norm((p + ps) - (a + b)) <= 1e-14 * std::sqrt(e));
      CHECK(std::abs(norm2(p) + norm2(ps) - e) <= 1e-14 * e);
    }
  }

  TEST_CASE("DistributionField enforces the Pauli bound") {
    const auto g = build_grid(8, 4.0);
    CHECK_NOTHROW(DistributionField(g, Field(g->size(), 10.0 * (1.0 + 1e-13)), 0.1));
    CHECK_THROWS_AS(DistributionField(g, Field(g->size(), 10.0 * (1.0 + 1e-11)), 0.1), Error);
    Field neg(g->size(), 1.0);
    neg[17] = -1e-300;
    CHECK_THROWS_AS(DistributionField(g, neg, 0.0), Error);
    Field nan(g->size(), 1.0);
    nan[3] = NAN;
    CHECK_THROWS_AS(DistributionField(g, nan, 0.0), Error);
    CHECK_THROWS_AS(DistributionField(g, Field(10, 0.0), 0.0), Error);
    try {
      DistributionField(g, Field(g->size(), 11.0), 0.1);
      FAIL("expected a Pauli violation");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::PauliViolation);
    }
    const DistributionField f(g, Field(g->size(), 4.0), 0.2);
    CHECK(f.kappa_min() == doctest::Approx(0.2));
    CHECK(f.sup() == 4.0);
  }

  TEST_CASE("moments of a sampled Maxwellian") {
    const auto g = build_grid(32, 8.0);
    const DistributionField f(g, test::maxwellian_values(*g, 1.0, {}, 1.0), 0.0);
    const Moments m = moments(f);
    CHECK(std::abs(m.rho - 1.0) < 1e-8);
    CHECK(norm(m.u) < 1e-8);
    CHECK(std::abs(m.e - 1.0) < 1e-8);
    const DistributionField shifted(g, test::maxwellian_values(*g, 0.7, {0.5, -0.25, 1.0}, 0.6), 0.0);
    const Moments ms = moments(shifted);
    CHECK(ms.rho == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(norm(ms.u - Vec3{0.5, -0.25, 1.0}) < 1e-8);
    CHECK(ms.e == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(lebesgue_norm(shifted, 1.0, 0.0) == doctest::Approx(ms.rho).epsilon(1e-14));
    CHECK_THROWS_AS(moments(DistributionField(g, Field(g->size(), 0.0), 0.0)), Error);
  }

  TEST_CASE("constant field moments and norms") {
    const auto g = build_grid(8, 2.0);
    const double c = 0.37;
    const DistributionField f(g, Field(g->size(), c), 0.0);
    const Moments m = moments(f);
    CHECK(m.rho == doctest::Approx(c * 64.0).epsilon(1e-14));
    CHECK(norm(m.u) < 1e-14);
    CHECK(lebesgue_norm(f, 1.0, 0.0) == doctest::Approx(c * 64.0).epsilon(1e-14));
    CHECK(lebesgue_norm(f, INFINITY, 0.0) == c);
    CHECK(l1k_log_norm(DistributionField(g, Field(g->size(), 1.0), 0.0), 0.0) == 0.0);
    CHECK(l1k_log_norm(DistributionField(g, Field(g->size(), std::exp(1.0)), 0.0), 0.0) ==
          doctest::Approx(std::exp(1.0) * 64.0).epsilon(1e-14));
  }

  TEST_CASE("midpoint rule is second order on a non-decaying integrand") {
    // Gaussians converge spectrally under the midpoint rule; e^{a.v} on the cube exposes the dv^2 term.
    const Vec3 a{0.3, 0.2, -0.1};
    const double l = 2.0;
    auto exact_axis = [&](double c) { return 2.0 * std::sinh(c * l) / c; };
    const double exact = exact_axis(a.x) * exact_axis(a.y) * exact_axis(a.z);
    double err[2];
    int idx = 0;
    for (int n : {8, 16}) {
      const auto g = build_grid(n, l);
      Field v(g->size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(dot(a, g->node(i)));
      err[idx++] = std::abs(moments(*g, v).rho - exact);
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.02));
  }

  TEST_CASE("weighted L2 norm of a Gaussian against radial quadrature") {
    // The weight is analytic only in a strip of width 1, so the midpoint error is about e^{-2 pi / dv}.
    const auto g = build_grid(64, 6.0);
    Field v(g->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-norm2(g->node(i)));
    const DistributionField f(g, v, 0.0);
    boost::math::quadrature::exp_sinh<double> es;
    for (double gamma : {0.5, 1.0}) {
      const double oracle = std::sqrt(4.0 * pi * es.integrate([&](double r) {
        const double w = std::exp(-2.0 * r * r);
        return w == 0.0 ? 0.0 : r * r * w * std::pow(1.0 + r * r, gamma);
      }, 0.0, INFINITY));
      CHECK(lebesgue_norm(f, 2.0, gamma) == doctest::Approx(oracle).epsilon(1e-9));
    }
  }

  TEST_CASE("l1k_log_norm of a saturated state") {
    const auto g = build_grid(16, 3.0);
    const double eps = 0.5, rho = 1.0;
    const DistributionField f = saturated_state(rho, {}, eps, g);
    std::size_t filled = 0;
    for (double x : f.values()) filled += x > 0.0;
    const double grid_mass = static_cast<double>(filled) * g->cell_volume() / eps;
    CHECK(l1k_log_norm(f, 0.0) == doctest::Approx(grid_mass * std::abs(std::log(1.0 / eps))).epsilon(1e-13));
    CHECK(grid_mass == doctest::Approx(rho).epsilon(0.2));
  }

  TEST_CASE("snapshot round trip") {
    const auto g = build_grid(8, 3.0, 6, 4, Interpolation::Linear);
    const DistributionField f = test::random_field(g, 0.25, 11);
    const auto path = std::filesystem::temp_directory_path() / "bfd_snapshot_roundtrip.csv";
    write_snapshot(path.string(), f);
    const DistributionField back = read_snapshot(path.string());
    CHECK(back.grid().same_as(*g));
    CHECK(back.eps() == 0.25);
    CHECK(back.values() == f.values());
    {
      std::ofstream out(path);
      out << "# {\"n\": 8, \"l\": 3.0}\ni,j,k,f\n0,0,0,1\n";
    }
    CHECK_THROWS_AS(read_snapshot(path.string()), Error);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_snapshot("/nonexistent/bfd.csv"), Error);
  }
}
