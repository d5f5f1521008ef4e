#include "bfd/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>

namespace bfd::quad {

Rule gauss_legendre(int n) {
  Rule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node for the weight.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = pk;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

Rule gauss_legendre(int n, double a, double b) {
  Rule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[static_cast<std::size_t>(j)];
    const double fsum = f(c - dx) + f(c + dx);
    kronrod += kWgk[static_cast<std::size_t>(j)] * fsum;
    if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * fsum;
  }
  return {a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace

Result integrate(const std::function<double(double)>& f, double a, double b, double rel_tol, double abs_tol,
                 int max_intervals) {
  if (a == b) return {0.0, 0.0, true};
  std::priority_queue<Panel> heap;
  Panel first = gk15(f, a, b);
  double total = first.value;
  double err = first.error;
  heap.push(first);
  int count = 1;
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && count < max_intervals) {
    const Panel worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) break;
    heap.pop();
    const Panel left = gk15(f, worst.a, mid);
    const Panel right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum to shed the drift of the incremental updates.
  double value = 0.0;
  double error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  const bool ok = error <= std::max(abs_tol, rel_tol * std::abs(value)) * 1.0000001 || error == 0.0;
  return {value, error, ok};
}

Result integrate_dyadic(const std::function<double(double, double, double)>& f, double rel_tol) {
  const double piece_tol = rel_tol * 1e-2;
  Result mid = integrate([&](double s) { return f(s, 1.0 - s, 1.0 + s); }, -0.5, 0.5, piece_tol);
  double total = mid.value;
  double error = mid.error;
  bool ok = mid.converged;

  // side = +1: right endpoint, x = 1 - s. side = -1: left endpoint, x = 1 + s.
  for (int side : {+1, -1}) {
    constexpr int kMaxLevels = 50;
    double prev = 0.0;
    double prev_ratio = -1.0;
    bool side_done = false;
    double last_ratio = 1.0;
    double last_piece = 0.0;
    for (int k = 1; k <= kMaxLevels; ++k) {
      const double hi = std::ldexp(1.0, -k);
      const double lo = std::ldexp(1.0, -k - 1);
      auto g = [&](double x) {
        return side > 0 ? f(1.0 - x, x, 2.0 - x) : f(-1.0 + x, 2.0 - x, x);
      };
      Result piece = integrate(g, lo, hi, piece_tol);
      ok = ok && piece.converged;
      total += piece.value;
      error += piece.error;
      last_piece = std::abs(piece.value);
      if (last_piece == 0.0 && prev == 0.0 && k > 2) {
        side_done = true;
        break;
      }
      if (prev > 0.0) {
        last_ratio = last_piece / prev;
        const double drift = std::abs(last_ratio - prev_ratio);
        const bool stable = prev_ratio >= 0.0 && drift < 1e-2 * std::max(last_ratio, 1e-300);
        if (stable && last_ratio < 1.0 - 1e-3) {
          const double tail = last_piece * last_ratio / (1.0 - last_ratio);
          // The geometric tail is exact up to the drift of the ratio.
          const double tail_error = tail * drift / (1.0 - last_ratio);
          if (tail <= 1e-3 * std::abs(total) && tail_error <= rel_tol * 1e-1 * std::abs(total)) {
            total += tail;
            side_done = true;
            break;
          }
        }
        prev_ratio = last_ratio;
      }
      prev = last_piece;
    }
    if (!side_done) {
      if (last_ratio < 1.0 - 1e-3) {
        const double tail = last_piece * last_ratio / (1.0 - last_ratio);
        total += tail;
        ok = ok && tail <= rel_tol * std::abs(total);
      } else {
        ok = false;
      }
    }
  }
  return {total, error, ok};
}

}  // namespace bfd::quad
