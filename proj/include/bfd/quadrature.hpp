#pragma once

#include <functional>
#include <vector>

namespace bfd::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
Rule gauss_legendre(int n);

/// Same rule affinely mapped to [a, b].
Rule gauss_legendre(int n, double a, double b);

struct Result {
  double value = 0.0;
  double error = 0.0;
  bool converged = false;
};

/// Globally adaptive 7/15-point Gauss-Kronrod integration on [a, b].
/// Stops once the summed error estimate is below max(abs_tol, rel_tol*|I|).
Result integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-12,
                 double abs_tol = 0.0, int max_intervals = 2000);

/// Integral over (-1, 1) for integrands with integrable endpoint singularities.
/// The integrand receives (s, 1 - s, 1 + s) so the endpoint distances are exact.
/// The interval is cut dyadically at +-(1 - 2^-k); the geometric tail of the
/// pieces is extrapolated. converged == false signals a non-integrable endpoint.
Result integrate_dyadic(const std::function<double(double, double, double)>& f, double rel_tol = 1e-10);

}  // namespace bfd::quad
