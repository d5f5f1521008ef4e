#include "bfd/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bfd/collision.hpp"
#include "bfd/error.hpp"
#include "bfd/parallel.hpp"

namespace bfd {

namespace {

double entropy_density(double x, double eps) {
  double h = x > 0.0 ? x * std::log(x) : 0.0;
  if (eps > 0.0) {
    const double occ = eps * x;
    if (occ < 1.0) h += (1.0 - occ) * std::log1p(-occ) / eps;
  }
  return h;
}

// h(x) - h(y) - h'(y)(x - y) for the entropy density h.
double bregman(double x, double y, double eps) {
  if (y <= 0.0) return 0.0;
  double b = x > 0.0 ? x * std::log(x / y) : 0.0;
  if (eps > 0.0) {
    const double ox = eps * x;
    const double oy = eps * y;
    if (ox < 1.0) b += (1.0 - ox) * (std::log1p(-ox) - std::log1p(-oy)) / eps;
  } else {
    b += y - x;
  }
  return std::max(b, 0.0);
}

}  // namespace

double fd_entropy(const DistributionField& f) {
  if (f.eps() > 0.0 && f.kappa_min() < -1e-12) throw Error(ErrorKind::PauliViolation, "1 - eps f < 0 in entropy");
  Field terms(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) terms[i] = entropy_density(f[i], f.eps());
  return integrate(f.grid(), terms);
}

DistributionField phi_transform(const DistributionField& f) {
  const double eps = f.eps();
  if (eps > 0.0 && f.kappa_min() < 1e-10) throw Error(ErrorKind::Saturation, "phi transform needs min(1 - eps f) >= 1e-10");
  Field out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] / (1.0 - eps * f[i]);
  return DistributionField(f.grid_ptr(), std::move(out), 0.0);
}

double entropy_production(const DistributionField& f, const KernelSpec& k) {
  if (f.eps() > 0.0 && f.kappa_min() < 0.0) throw Error(ErrorKind::Saturation, "entropy production needs 1 - eps f >= 0");
  return production_integral(f, k, ProductionKind::FermiDirac);
}

double relative_entropy(const DistributionField& f, const Field& equilibrium) {
  Field terms(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) terms[i] = bregman(f[i], equilibrium[i], f.eps());
  return integrate(f.grid(), terms);
}

double relative_entropy(const DistributionField& f) { return relative_entropy(f, discrete_equilibrium(f).values); }

EntropyReport entropy_report(const DistributionField& f, const KernelSpec& k) {
  EntropyReport r;
  r.kappa_min = f.kappa_min();
  r.h_eps = fd_entropy(f);
  r.h_eps_rel = relative_entropy(f);
  r.d_eps = entropy_production(f, k);
  const DistributionField g = phi_transform(f);
  r.h0_phi_rel = relative_entropy(g);
  r.d0_phi = production_integral(f, k, ProductionKind::ClassicalPhi);
  return r;
}

SandwichReport sandwich_from(const EntropyReport& r, double kappa0) {
  SandwichReport s;
  s.values = r;
  s.kappa0 = kappa0;
  s.precondition_met = r.kappa_min >= kappa0;
  s.entropy_margin = r.h0_phi_rel - r.h_eps_rel;
  const double k4 = kappa0 * kappa0 * kappa0 * kappa0;
  s.lower_margin = r.d_eps - k4 * r.d0_phi;
  s.upper_margin = r.d0_phi - r.d_eps;
  s.scale = std::max({std::abs(r.h0_phi_rel), std::abs(r.h_eps_rel), std::abs(r.d0_phi), std::abs(r.d_eps), 1e-300});
  const double tol = -1e-8 * s.scale;
  s.pass = s.precondition_met && s.entropy_margin >= tol && s.lower_margin >= tol && s.upper_margin >= tol;
  return s;
}

SandwichReport comparison_sandwich(const DistributionField& f, const KernelSpec& k, double kappa0) {
  return sandwich_from(entropy_report(f, k), kappa0);
}

CkpResult ckp_bound(const DistributionField& f, const Field& equilibrium, double h_rel, double p, double k) {
  if (!(p >= 1.0 && p <= 2.0)) throw Error(ErrorKind::Domain, "CKP exponent must lie in [1, 2]");
  const auto& grid = f.grid();
  Field diff(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) diff[i] = f[i] - equilibrium[i];
  CkpResult out;
  const double dist = lebesgue_norm(grid, diff, p, k);
  out.lhs = dist * dist;
  const double q = p == 2.0 ? std::numeric_limits<double>::infinity() : p / (2.0 - p);
  const double nm = lebesgue_norm(grid, equilibrium, q, 2.0 * k);
  const double nf = lebesgue_norm(grid, f.values(), q, 2.0 * k);
  out.rhs = 2.0 * std::max(nm, nf) * h_rel;
  return out;
}

CkpResult ckp_bound(const DistributionField& f, double p, double k) {
  const GridEquilibrium m = discrete_equilibrium(f);
  return ckp_bound(f, m.values, relative_entropy(f, m.values), p, k);
}

}  // namespace bfd
