#pragma once

#include <utility>
#include <variant>
#include <vector>

#include "bfd/vec3.hpp"

namespace bfd {

/// b(cos theta) = b0.
struct ConstantAngular {
  double b0 = 0.0;
  friend bool operator==(const ConstantAngular&, const ConstantAngular&) = default;
};

/// Inverse-power quantum angular kernel
///   b(c) = scale * ((1 - c)^(-beta) - (1 + c)^beta)^2,  beta = (3 - alpha) / 2,
/// induced by the potential |x|^-alpha; the matching gamma is 2*alpha - 5.
struct InversePowerAngular {
  double alpha = 2.75;
  double scale = 1.0;
  friend bool operator==(const InversePowerAngular&, const InversePowerAngular&) = default;
};

/// Piecewise-linear kernel through (cos theta, value) nodes spanning [-1, 1].
struct TableAngular {
  std::vector<std::pair<double, double>> nodes;
  friend bool operator==(const TableAngular&, const TableAngular&) = default;
};

class AngularKernel {
 public:
  using Model = std::variant<ConstantAngular, InversePowerAngular, TableAngular>;

  /// Validates the model invariants; throws Error(Domain) on violation.
  explicit AngularKernel(Model model);

  static AngularKernel constant(double b0) { return AngularKernel(ConstantAngular{b0}); }
  static AngularKernel inverse_power(double alpha, double scale = 1.0) {
    return AngularKernel(InversePowerAngular{alpha, scale});
  }
  static AngularKernel table(std::vector<std::pair<double, double>> nodes) {
    return AngularKernel(TableAngular{std::move(nodes)});
  }

  const Model& model() const { return model_; }
  bool is_constant() const { return std::holds_alternative<ConstantAngular>(model_); }

  /// True when b(c) = b(-c) for every c.
  bool is_even() const;

  /// b(c) from the endpoint distances (1 - c, 1 + c); avoids cancellation near +-1.
  double value_at(double c, double one_minus_c, double one_plus_c) const;

  /// The same kernel multiplied by lambda > 0.
  AngularKernel scaled(double lambda) const;

  friend bool operator==(const AngularKernel&, const AngularKernel&) = default;

 private:
  Model model_;
};

struct KernelSpec {
  double gamma = 1.0;
  AngularKernel angular = AngularKernel::constant(1.0);

  /// Throws Error(Domain) unless 0 < gamma <= 1 and, for the inverse-power
  /// model, gamma == 2*alpha - 5.
  void validate() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

KernelSpec make_kernel(double gamma, AngularKernel angular);

/// b(c) for c in [-1, 1].
double eval_angular(const AngularKernel& k, double c);

/// ||b||_1 = 2*pi * int_{-1}^{1} b(s) ds.
double angular_mass(const AngularKernel& k);

/// B(v, v*, sigma) = b(cos theta) |v - v*|^gamma with cos theta = sigma.(v - v*)/|v - v*|.
double eval_kernel(const KernelSpec& k, const Vec3& v, const Vec3& v_star, const Vec3& sigma);

/// Young constant C_b(p, q) of the gain operator for 1/p + 1/q = 1 + 1/r.
/// Exponents may be +infinity.
double young_constant(const AngularKernel& k, double p, double q, double r);

}  // namespace bfd
