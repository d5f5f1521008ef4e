#include "bfd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "bfd/error.hpp"
#include "bfd/quadrature.hpp"

namespace bfd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double table_value(const TableAngular& t, double c) {
  const auto& nodes = t.nodes;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), c,
                             [](double x, const std::pair<double, double>& node) { return x < node.first; });
  if (it == nodes.begin()) return nodes.front().second;
  if (it == nodes.end()) return nodes.back().second;
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (c - lo.first) / (hi.first - lo.first);
  return (1.0 - w) * lo.second + w * hi.second;
}

double conjugate(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return p / (p - 1.0);
}

double inverse(double p) { return std::isinf(p) ? 0.0 : 1.0 / p; }

}  // namespace

AngularKernel::AngularKernel(Model model) : model_(std::move(model)) {
  std::visit(Overloaded{
                 [](const ConstantAngular& k) {
                   if (!(k.b0 > 0.0) || !std::isfinite(k.b0))
                     throw Error(ErrorKind::Domain, "constant angular kernel needs b0 > 0");
                 },
                 [](const InversePowerAngular& k) {
                   if (!(k.alpha > 2.5 && k.alpha < 3.0))
                     throw Error(ErrorKind::Domain, "inverse-power kernel needs 5/2 < alpha < 3");
                   if (!(k.scale > 0.0) || !std::isfinite(k.scale))
                     throw Error(ErrorKind::Domain, "inverse-power kernel needs scale > 0");
                 },
                 [](const TableAngular& k) {
                   const auto& n = k.nodes;
                   if (n.size() < 2) throw Error(ErrorKind::Domain, "table kernel needs at least two nodes");
                   if (n.front().first != -1.0 || n.back().first != 1.0)
                     throw Error(ErrorKind::Domain, "table kernel nodes must span [-1, 1]");
                   for (std::size_t i = 0; i < n.size(); ++i) {
                     if (!std::isfinite(n[i].second) || n[i].second < 0.0)
                       throw Error(ErrorKind::Domain, "table kernel values must be finite and >= 0");
                     if (i > 0 && !(n[i].first > n[i - 1].first))
                       throw Error(ErrorKind::Domain, "table kernel nodes must be strictly increasing");
                   }
                 },
             },
             model_);
}

bool AngularKernel::is_even() const {
  return std::visit(Overloaded{
                        [](const ConstantAngular&) { return true; },
                        [](const InversePowerAngular&) { return false; },
                        [](const TableAngular& t) {
                          for (const auto& [c, value] : t.nodes) {
                            const double mirrored = table_value(t, -c);
                            if (std::abs(mirrored - value) > 1e-14 * std::max(1.0, std::abs(value))) return false;
                          }
                          return true;
                        },
                    },
                    model_);
}

double AngularKernel::value_at(double c, double one_minus_c, double one_plus_c) const {
  return std::visit(Overloaded{
                        [](const ConstantAngular& k) { return k.b0; },
                        [&](const InversePowerAngular& k) {
                          const double beta = 0.5 * (3.0 - k.alpha);
                          const double d = std::pow(one_minus_c, -beta) - std::pow(one_plus_c, beta);
                          return k.scale * d * d;
                        },
                        [&](const TableAngular& t) { return table_value(t, c); },
                    },
                    model_);
}

AngularKernel AngularKernel::scaled(double lambda) const {
  if (!(lambda > 0.0)) throw Error(ErrorKind::Domain, "kernel scale factor must be positive");
  return std::visit(Overloaded{
                        [&](const ConstantAngular& k) { return AngularKernel(ConstantAngular{k.b0 * lambda}); },
                        [&](const InversePowerAngular& k) {
                          return AngularKernel(InversePowerAngular{k.alpha, k.scale * lambda});
                        },
                        [&](const TableAngular& t) {
                          TableAngular out = t;
                          for (auto& node : out.nodes) node.second *= lambda;
                          return AngularKernel(std::move(out));
                        },
                    },
                    model_);
}

void KernelSpec::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::Domain, "kernel exponent gamma must lie in (0, 1]");
  if (const auto* ip = std::get_if<InversePowerAngular>(&angular.model())) {
    if (std::abs(gamma - (2.0 * ip->alpha - 5.0)) > 1e-12) {
      std::ostringstream msg;
      msg << "inverse-power kernel with alpha = " << ip->alpha << " requires gamma = " << 2.0 * ip->alpha - 5.0;
      throw Error(ErrorKind::Domain, msg.str());
    }
  }
}

KernelSpec make_kernel(double gamma, AngularKernel angular) {
  KernelSpec spec{gamma, std::move(angular)};
  spec.validate();
  return spec;
}

double eval_angular(const AngularKernel& k, double c) {
  if (!(c >= -1.0 && c <= 1.0)) throw Error(ErrorKind::Domain, "cos(theta) outside [-1, 1]");
  if (std::holds_alternative<InversePowerAngular>(k.model()) && (c == 1.0 || c == -1.0))
    throw Error(ErrorKind::Singularity, "inverse-power kernel is singular at cos(theta) = +-1");
  return k.value_at(c, 1.0 - c, 1.0 + c);
}

double angular_mass(const AngularKernel& k) {
  return std::visit(Overloaded{
                        [](const ConstantAngular& c) { return 2.0 * kTwoPi * c.b0; },
                        [](const TableAngular& t) {
                          double s = 0.0;
                          for (std::size_t i = 1; i < t.nodes.size(); ++i) {
                            const auto& a = t.nodes[i - 1];
                            const auto& b = t.nodes[i];
                            s += 0.5 * (b.first - a.first) * (a.second + b.second);
                          }
                          return kTwoPi * s;
                        },
                        [&](const InversePowerAngular&) {
                          const auto res = quad::integrate_dyadic(
                              [&](double s, double om, double op) { return k.value_at(s, om, op); }, 1e-10);
                          if (!res.converged) throw Error(ErrorKind::Divergence, "angular mass quadrature did not converge");
                          return kTwoPi * res.value;
                        },
                    },
                    k.model());
}

double eval_kernel(const KernelSpec& k, const Vec3& v, const Vec3& v_star, const Vec3& sigma) {
  if (std::abs(norm2(sigma) - 1.0) > 2e-12) throw Error(ErrorKind::Domain, "sigma must be a unit vector");
  const Vec3 rel = v - v_star;
  const double speed = norm(rel);
  if (speed == 0.0) return 0.0;
  const double c = std::clamp(dot(sigma, rel) / speed, -1.0, 1.0);
  return eval_angular(k.angular, c) * std::pow(speed, k.gamma);
}

double young_constant(const AngularKernel& k, double p, double q, double r) {
  const bool ordered = p >= 1.0 && q >= 1.0 && p <= r && q <= r;
  if (!ordered || std::abs(inverse(p) + inverse(q) - 1.0 - inverse(r)) > 1e-12)
    throw Error(ErrorKind::HolderExponent, "need 1 <= p, q <= r <= inf with 1/p + 1/q = 1 + 1/r");
  if (p == 1.0 && q == 1.0) return angular_mass(k);

  const double r_conj = conjugate(r);
  const double weight_exp = 1.5 / r_conj;
  // Each factor is int_{S^2} ((1 +- e1.sigma)/2)^(-3/(2r')) b(e1.sigma) dsigma.
  auto factor = [&](int sign) {
    const auto res = quad::integrate_dyadic(
        [&](double s, double om, double op) {
          const double base = 0.5 * (sign > 0 ? op : om);
          const double b = k.value_at(s, om, op);
          if (b == 0.0) return 0.0;
          return std::pow(base, -weight_exp) * b;
        },
        1e-10);
    if (!res.converged || !std::isfinite(res.value))
      throw Error(ErrorKind::Divergence, "Young-constant sphere integral diverges for this kernel and exponent");
    return kTwoPi * res.value;
  };
  double result = 1.0;
  if (p != 1.0) result *= std::pow(factor(+1), r_conj / conjugate(p));
  if (q != 1.0) result *= std::pow(factor(-1), r_conj / conjugate(q));
  return result;
}

}  // namespace bfd
