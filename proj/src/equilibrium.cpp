#include "bfd/equilibrium.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "bfd/error.hpp"
#include "bfd/parallel.hpp"
#include "bfd/quadrature.hpp"

namespace bfd {

namespace {

constexpr double kPi = std::numbers::pi;

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// M as a function of the exponent z = a + b|v-u|^2.
double fd_value(double z, double eps) { return eps > 0.0 ? logistic(z + std::log(eps)) / eps : std::exp(z); }

// Integral of (r^s / (1 + e^{x + r^2})), split at the Fermi edge r0 = sqrt(-x).
double fermi_integrand_integral(int s, double x, bool derivative) {
  const double r0 = std::sqrt(std::max(0.0, -x));
  const double upper = r0 + 9.0;
  auto f = [&](double r) {
    const double t = x + r * r;
    const double rs = std::pow(r, s);
    if (!derivative) return rs * logistic(-t);
    // d/dx of 1/(1 + e^t) = -sigma(t) sigma(-t).
    return -rs * logistic(t) * logistic(-t);
  };
  double total = 0.0;
  if (r0 > 0.0) {
    const double w = std::min(r0, 6.0 / (r0 + 1.0));
    const auto inner = quad::integrate(f, 0.0, r0 - w, 1e-14, 0.0, 4000);
    const auto edge = quad::integrate(f, r0 - w, r0 + w, 1e-14, 0.0, 4000);
    const auto outer = quad::integrate(f, r0 + w, upper + w, 1e-14, 0.0, 4000);
    total = inner.value + edge.value + outer.value;
  } else {
    total = quad::integrate(f, 0.0, upper, 1e-14, 0.0, 4000).value;
  }
  return total;
}

double target_pressure(double rho, double e, double eps) {
  return 3.0 * rho * e * std::pow(rho, -5.0 / 3.0) * std::pow(4.0 * kPi / eps, 2.0 / 3.0);
}

}  // namespace

double fermi_integral_log(int s, double log_tau) {
  if (s != 2 && s != 4) throw Error(ErrorKind::Domain, "Fermi integral order must be 2 or 4");
  if (!std::isfinite(log_tau)) throw Error(ErrorKind::Domain, "log tau must be finite");
  return fermi_integrand_integral(s, log_tau, false);
}

double fermi_integral(int s, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorKind::Domain, "Fermi integral needs tau > 0");
  return fermi_integral_log(s, std::log(tau));
}

double pressure_ratio_log(double log_tau) {
  return fermi_integral_log(4, log_tau) * std::pow(fermi_integral_log(2, log_tau), -5.0 / 3.0);
}

double pressure_ratio(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorKind::Domain, "pressure ratio needs tau > 0");
  return pressure_ratio_log(std::log(tau));
}

double FermiDiracParams::log_tau() const { return -std::log(eps) - a_eps; }

SaturationInfo saturation_info(double rho, double e, double eps) {
  if (!(rho > 0.0) || !(e > 0.0)) throw Error(ErrorKind::Domain, "saturation info needs rho > 0 and E > 0");
  SaturationInfo s;
  s.eps_sat = 4.0 * kPi * std::pow(5.0 * e, 1.5) / (3.0 * rho);
  s.eps_sat_dagger =
      std::pow(2.0, 2.5) * std::pow(3.0, 1.5) * std::pow(5.0, -2.5) * std::pow(kPi, 1.5) * std::pow(e, 1.5) / rho;
  s.fermi_temperature = 0.5 * std::pow(3.0 * eps * rho / (4.0 * kPi), 2.0 / 3.0);
  s.r_e = s.fermi_temperature > 0.0 ? e / s.fermi_temperature : std::numeric_limits<double>::infinity();
  return s;
}

FermiDiracParams fit_fermi_dirac(double rho, const Vec3& u, double e, double eps) {
  if (!(rho > 0.0) || !(e > 0.0) || !std::isfinite(rho) || !std::isfinite(e))
    throw Error(ErrorKind::Domain, "Fermi-Dirac fit needs rho > 0 and E > 0");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::Domain, "Fermi-Dirac fit needs eps > 0");
  const double eps_sat = saturation_info(rho, e, eps).eps_sat;
  if (eps >= eps_sat) {
    std::ostringstream msg;
    msg << "eps = " << eps << " >= eps_sat = " << eps_sat << " for rho = " << rho << ", E = " << e;
    throw Error(ErrorKind::Saturation, msg.str());
  }
  const double target = target_pressure(rho, e, eps);
  const double log_target = std::log(target);
  auto residual = [&](double x) { return std::log(pressure_ratio_log(x)) - log_target; };

  // Bracket on x = log tau, expanding geometrically from [log 1e-12, log 1e12].
  double lo = std::log(1e-12);
  double hi = std::log(1e12);
  double r_lo = residual(lo);
  double r_hi = residual(hi);
  for (int it = 0; r_lo > 0.0 && it < 60; ++it) {
    lo *= 2.0;
    r_lo = residual(lo);
  }
  for (int it = 0; r_hi < 0.0 && it < 60; ++it) {
    hi *= 2.0;
    r_hi = residual(hi);
  }
  if (r_lo > 0.0 || r_hi < 0.0) throw Error(ErrorKind::NonConvergence, "could not bracket the Fermi-Dirac pressure equation");

  for (int it = 0; it < 200 && hi - lo > 1e-6 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? hi : lo) = mid;
  }
  // Newton polish with d log P / dx = tau (I4'/I4 - 5/3 I2'/I2), derivatives by quadrature.
  double x = 0.5 * (lo + hi);
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const double i2 = fermi_integral_log(2, x);
    const double i4 = fermi_integral_log(4, x);
    const double d2 = fermi_integrand_integral(2, x, true);
    const double d4 = fermi_integrand_integral(4, x, true);
    const double r = std::log(i4) - 5.0 / 3.0 * std::log(i2) - log_target;
    const double dr = d4 / i4 - 5.0 / 3.0 * d2 / i2;
    if (!(dr > 0.0)) break;
    double step = r / dr;
    double next = x - step;
    if (next < lo || next > hi) next = 0.5 * (lo + hi);
    (r > 0.0 ? hi : lo) = x;
    x = next;
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x)) || std::abs(r) < 1e-15) {
      converged = true;
      break;
    }
  }
  if (!converged && std::abs(residual(x)) > 1e-12)
    throw Error(ErrorKind::NonConvergence, "Fermi-Dirac pressure equation did not converge");

  FermiDiracParams p;
  p.eps = eps;
  p.rho = rho;
  p.u = u;
  p.e = e;
  p.a_eps = -std::log(eps) - x;
  p.b_eps = -std::pow(4.0 * kPi / (eps * rho) * fermi_integral_log(2, x), 2.0 / 3.0);
  return p;
}

double eval_fermi_dirac(const FermiDiracParams& p, const Vec3& v) {
  return fd_value(p.a_eps + p.b_eps * norm2(v - p.u), p.eps);
}

DistributionField saturated_state(double rho, const Vec3& u, double eps, const GridPtr& grid) {
  if (!(rho > 0.0) || !(eps > 0.0)) throw Error(ErrorKind::Domain, "saturated state needs rho > 0 and eps > 0");
  const double radius = std::cbrt(3.0 * rho * eps / (4.0 * kPi));
  const double l = grid->l();
  if (std::abs(u.x) + radius >= l || std::abs(u.y) + radius >= l || std::abs(u.z) + radius >= l)
    throw Error(ErrorKind::Geometry, "saturated ball leaves the velocity cube");
  Field values(grid->size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i)
    if (norm(grid->node(i) - u) <= radius) values[i] = 1.0 / eps;
  return DistributionField(grid, std::move(values), eps);
}

NormBounds fd_norm_bounds(const FermiDiracParams& p, double k) {
  const double dagger = saturation_info(p.rho, p.e, p.eps).eps_sat_dagger;
  if (p.eps > dagger * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "eps = " << p.eps << " exceeds eps_sat_dagger = " << dagger;
    throw Error(ErrorKind::Threshold, msg.str());
  }
  if (!(k >= 0.0)) throw Error(ErrorKind::Domain, "weight order must be >= 0");
  NormBounds out;
  out.c_inf = p.rho * std::pow(p.e, -1.5);
  const auto gauss = quad::integrate(
      [&](double x) { return std::exp(-x * x) * x * x * std::pow(1.0 + x * x, 0.5 * k); }, 0.0, 40.0, 1e-13);
  const double c0 = out.c_inf * 4.0 * kPi * gauss.value;
  const double bb = 3.0 / (10.0 * std::pow(kPi, 0.4)) / p.e;
  out.c_1k = c0 / (std::pow(bb, 1.5) * std::pow(std::min(1.0, bb), k));
  // Off-centre equilibria: <v + u> <= sqrt(2) <u> <v>.
  if (norm2(p.u) > 0.0) out.c_1k *= std::pow(2.0, 0.5 * k) * std::pow(bracket(p.u), k);
  return out;
}

DistributionField sample_fermi_dirac(const FermiDiracParams& p, const GridPtr& grid) {
  Field values(grid->size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = eval_fermi_dirac(p, grid->node(i));
  return DistributionField(grid, std::move(values), p.eps);
}

GridEquilibrium discrete_equilibrium(const VelocityGrid& grid, const Field& values, double eps) {
  const Moments m = moments(grid, values);
  const double scale = std::sqrt(m.e);
  const double dv3 = grid.cell_volume();
  const std::size_t count = grid.size();

  // Scaled invariants (1, w, |w|^2) with w = (v - u0) / sqrt(E0).
  std::vector<std::array<double, 5>> basis(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Vec3 w = (grid.node(i) - m.u) * (1.0 / scale);
    basis[i] = {1.0, w.x, w.y, w.z, norm2(w)};
  }
  Eigen::Matrix<double, 5, 1> target = Eigen::Matrix<double, 5, 1>::Zero();
  Eigen::Matrix<double, 5, 1> magnitude = Eigen::Matrix<double, 5, 1>::Zero();
  {
    std::array<Field, 5> t;
    std::array<Field, 5> a;
    for (auto& x : t) x.resize(count);
    for (auto& x : a) x.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      for (int c = 0; c < 5; ++c) {
        t[c][i] = values[i] * basis[i][static_cast<std::size_t>(c)];
        a[c][i] = std::abs(t[c][i]);
      }
    for (int c = 0; c < 5; ++c) {
      target(c) = dv3 * pairwise_sum(t[static_cast<std::size_t>(c)]);
      magnitude(c) = dv3 * pairwise_sum(a[static_cast<std::size_t>(c)]);
    }
  }

  // Initial guess: continuous equilibrium with the same moments.
  Eigen::Matrix<double, 5, 1> alpha = Eigen::Matrix<double, 5, 1>::Zero();
  if (eps > 0.0) {
    const auto p = fit_fermi_dirac(m.rho, m.u, m.e, eps);
    alpha(0) = p.a_eps;
    alpha(4) = p.b_eps * scale * scale;
  } else {
    alpha(0) = std::log(m.rho * std::pow(2.0 * kPi * m.e, -1.5));
    alpha(4) = -0.5;
  }

  // Convex dual: Phi(alpha) = dv^3 sum psi(z) - alpha.target, psi' = M.
  auto exponent = [&](const Eigen::Matrix<double, 5, 1>& al, std::size_t i) {
    const auto& b = basis[i];
    return al(0) + al(1) * b[1] + al(2) * b[2] + al(3) * b[3] + al(4) * b[4];
  };
  const double log_eps = eps > 0.0 ? std::log(eps) : 0.0;
  auto psi = [&](double z) { return eps > 0.0 ? softplus(z + log_eps) / eps : std::exp(z); };
  auto dual = [&](const Eigen::Matrix<double, 5, 1>& al) {
    Field terms(count);
    for (std::size_t i = 0; i < count; ++i) terms[i] = psi(exponent(al, i));
    return dv3 * pairwise_sum(terms) - al.dot(target);
  };

  double phi = dual(alpha);
  bool converged = false;
  for (int it = 0; it < 200; ++it) {
    Eigen::Matrix<double, 5, 1> grad = -target;
    Eigen::Matrix<double, 5, 5> hess = Eigen::Matrix<double, 5, 5>::Zero();
    for (std::size_t i = 0; i < count; ++i) {
      const double mv = fd_value(exponent(alpha, i), eps);
      const double curv = mv * (1.0 - eps * mv) * dv3;
      Eigen::Map<const Eigen::Matrix<double, 5, 1>> b(basis[i].data());
      grad += mv * dv3 * b;
      hess.noalias() += curv * b * b.transpose();
    }
    bool small = true;
    for (int c = 0; c < 5; ++c) small = small && std::abs(grad(c)) <= 1e-14 * std::max(magnitude(c), 1e-300);
    if (small) {
      converged = true;
      break;
    }
    const Eigen::Matrix<double, 5, 1> step = hess.ldlt().solve(grad);
    if (!step.allFinite()) break;
    // Rounding floor: the Newton correction no longer moves alpha.
    bool near = true;
    bool stalled = true;
    for (int c = 0; c < 5; ++c) {
      near = near && std::abs(grad(c)) <= 1e-10 * std::max(magnitude(c), 1e-300);
      stalled = stalled && std::abs(step(c)) <= 1e-13 * (1.0 + std::abs(alpha(c)));
    }
    if (near && stalled) {
      alpha -= step;
      converged = true;
      break;
    }
    const double phi_before = phi;
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Eigen::Matrix<double, 5, 1> trial = alpha - t * step;
      const double phi_trial = dual(trial);
      if (std::isfinite(phi_trial) && phi_trial <= phi + 1e-4 * t * (-grad.dot(step)) + 1e-15 * std::abs(phi)) {
        alpha = trial;
        phi = phi_trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    // No decrease is representable: near-saturated equilibria leave the Hessian too
    // ill-conditioned for the step test, so a gradient at the rounding level is accepted.
    if (near && !(phi < phi_before)) {
      converged = true;
      break;
    }
    if (!accepted) {
      alpha -= step;
      phi = dual(alpha);
    }
  }
  if (!converged) throw Error(ErrorKind::NonConvergence, "discrete equilibrium Newton iteration did not converge");

  GridEquilibrium out;
  out.eps = eps;
  const double b = alpha(4) / (scale * scale);
  if (!(b < 0.0)) throw Error(ErrorKind::NonConvergence, "discrete equilibrium has non-negative quadratic coefficient");
  const Vec3 shift{alpha(1) / scale, alpha(2) / scale, alpha(3) / scale};
  // alpha0 + alpha.w + alpha4|w|^2 = a + b|v - u|^2 with u = u0 - shift/(2b).
  const Vec3 du = shift * (-0.5 / b);
  out.b = b;
  out.u = m.u + du;
  out.a = alpha(0) - b * norm2(du);
  out.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) out.values[i] = fd_value(exponent(alpha, i), eps);
  return out;
}

GridEquilibrium discrete_equilibrium(const DistributionField& f) {
  return discrete_equilibrium(f.grid(), f.values(), f.eps());
}

}  // namespace bfd
