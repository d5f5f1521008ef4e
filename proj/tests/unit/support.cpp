#include "support.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace bfd::test {

DistributionField random_field(const GridPtr& grid, double eps, std::uint64_t seed, double fill) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cap = eps > 0.0 ? fill / eps : fill;
  const double width = 0.35 * grid->l();
  Field values(grid->size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double envelope = std::exp(-norm2(grid->node(i)) / (2.0 * width * width));
    values[i] = cap * envelope * unit(rng);
  }
  return DistributionField(grid, std::move(values), eps);
}

Field maxwellian_values(const VelocityGrid& grid, double rho, const Vec3& u, double t) {
  Field values(grid.size());
  const double c = rho * std::pow(2.0 * std::numbers::pi * t, -1.5);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = c * std::exp(-norm2(grid.node(i) - u) / (2.0 * t));
  return values;
}

namespace {

double node_value(const VelocityGrid& g, const Field& v, int i, int j, int k) {
  const int n = g.n();
  if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return 0.0;
  return v[g.index(i, j, k)];
}

std::array<double, 4> lagrange(double t) {
  // Nodes -1, 0, 1, 2 written as products over the other three.
  std::array<double, 4> w{};
  const double xs[4] = {-1.0, 0.0, 1.0, 2.0};
  for (int a = 0; a < 4; ++a) {
    double p = 1.0;
    for (int b = 0; b < 4; ++b)
      if (b != a) p *= (t - xs[b]) / (xs[a] - xs[b]);
    w[static_cast<std::size_t>(a)] = p;
  }
  return w;
}

}  // namespace

double interpolate(const VelocityGrid& g, const Field& values, const Vec3& x) {
  const double s[3] = {(x.x + g.l()) / g.dv() - 0.5, (x.y + g.l()) / g.dv() - 0.5, (x.z + g.l()) / g.dv() - 0.5};
  int base[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    base[a] = static_cast<int>(std::floor(s[a]));
    t[a] = s[a] - base[a];
  }
  double out = 0.0;
  if (g.interpolation() == Interpolation::Linear) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          const double w = (a ? t[0] : 1 - t[0]) * (b ? t[1] : 1 - t[1]) * (c ? t[2] : 1 - t[2]);
          out += w * node_value(g, values, base[0] + a, base[1] + b, base[2] + c);
        }
    return out;
  }
  const auto wi = lagrange(t[0]), wj = lagrange(t[1]), wk = lagrange(t[2]);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        out += wi[static_cast<std::size_t>(a)] * wj[static_cast<std::size_t>(b)] * wk[static_cast<std::size_t>(c)] *
               node_value(g, values, base[0] + a - 1, base[1] + b - 1, base[2] + c - 1);
  return std::max(out, 0.0);
}

namespace {

// Calls body(v, vs, sigma, weight, f', f'*) with weight = dv^3 w_sigma B over every (v, v*, sigma).
template <class Body>
void for_each_collision(const VelocityGrid& g, const KernelSpec& k, const Field& fp, const Field& fs, Body&& body) {
  const double dv3 = g.cell_volume();
  for (std::size_t v = 0; v < g.size(); ++v)
    for (std::size_t vs = 0; vs < g.size(); ++vs) {
      if (v == vs) continue;
      const Vec3 a = g.node(v), b = g.node(vs);
      for (const SphereNode& s : g.sphere()) {
        const auto [p, ps] = post_collision(a, b, s.sigma);
        body(v, vs, dv3 * s.w * eval_kernel(k, a, b, s.sigma), interpolate(g, fp, p), interpolate(g, fs, ps));
      }
    }
}

}  // namespace

BruteOperator brute_q_eps(const DistributionField& f, const KernelSpec& k) {
  const auto& g = f.grid();
  const double eps = f.eps();
  const double cap = eps > 0.0 ? 1.0 / eps : std::numeric_limits<double>::infinity();
  BruteOperator out{Field(g.size(), 0.0), Field(g.size(), 0.0)};
  for_each_collision(g, k, f.values(), f.values(), [&](std::size_t v, std::size_t vs, double w, double a, double b) {
    a = std::min(a, cap);
    b = std::min(b, cap);
    out.gain[v] += w * a * b * (1.0 - eps * f[v]) * (1.0 - eps * f[vs]);
    out.loss[v] += w * f[v] * f[vs] * (1.0 - eps * a) * (1.0 - eps * b);
  });
  return out;
}

BruteOperator brute_bilinear(const DistributionField& f, const DistributionField& g, const KernelSpec& k) {
  const auto& grid = f.grid();
  BruteOperator out{Field(grid.size(), 0.0), Field(grid.size(), 0.0)};
  for_each_collision(grid, k, f.values(), g.values(), [&](std::size_t v, std::size_t vs, double w, double a, double b) {
    out.gain[v] += w * a * b;
    out.loss[v] += w * f[v] * g[vs];
  });
  return out;
}

Field brute_gamma(const DistributionField& g, const DistributionField& h, const KernelSpec& k) {
  const auto& grid = g.grid();
  Field out(grid.size(), 0.0);
  for_each_collision(grid, k, h.values(), h.values(),
                     [&](std::size_t v, std::size_t vs, double w, double a, double b) { out[v] += w * g[vs] * (a + b); });
  return out;
}

double brute_production(const DistributionField& f, const KernelSpec& k, ProductionKind kind) {
  const auto& g = f.grid();
  const double eps = f.eps();
  const double cap = eps > 0.0 ? 1.0 / eps : std::numeric_limits<double>::infinity();
  auto phi = [&](double x) { return eps > 0.0 ? x / (1.0 - eps * x) : x; };
  double total = 0.0;
  for_each_collision(g, k, f.values(), f.values(), [&](std::size_t v, std::size_t vs, double w, double a, double b) {
    a = std::min(a, cap);
    b = std::min(b, cap);
    double gg, ll;
    if (kind == ProductionKind::ClassicalPhi) {
      gg = phi(a) * phi(b);
      ll = phi(f[v]) * phi(f[vs]);
    } else {
      gg = a * b * (1.0 - eps * f[v]) * (1.0 - eps * f[vs]);
      ll = f[v] * f[vs] * (1.0 - eps * a) * (1.0 - eps * b);
    }
    if (gg > 1e-300 && ll > 1e-300) total += w * (gg - ll) * std::log(gg / ll);
  });
  return 0.25 * g.cell_volume() * total;
}

double max_abs(const Field& x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace bfd::test
