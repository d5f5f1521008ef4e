#include "bfd/collision.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "bfd/error.hpp"
#include "bfd/parallel.hpp"

namespace bfd {

namespace {

// Nodal array embedded in a zero margin wide enough that the stencil of every
// post-collision point c +- g sigma of two grid nodes falls inside it.
class Padded {
 public:
  Padded(const VelocityGrid& grid, const Field& values)
      : n_(grid.n()), margin_(static_cast<int>(std::ceil(0.8660254037844387 * (grid.n() - 1))) + 2),
        np_(n_ + 2 * margin_), interp_(grid.interpolation()) {
    data_.assign(static_cast<std::size_t>(np_) * np_ * np_, 0.0);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k) data_[offset(i + margin_, j + margin_, k + margin_)] = values[grid.index(i, j, k)];
  }

  std::size_t offset(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * np_ + static_cast<std::size_t>(j)) * np_ + static_cast<std::size_t>(k);
  }
  int margin() const { return margin_; }
  int stride() const { return np_; }
  const double* data() const { return data_.data(); }
  Interpolation interpolation() const { return interp_; }

 private:
  int n_;
  int margin_;
  int np_;
  Interpolation interp_;
  std::vector<double> data_;
};

// Output nodes v whose partner v* = v - d is also on the grid.
struct Box {
  std::array<int, 3> lo{};
  std::array<int, 3> len{};
  std::size_t size() const {
    return static_cast<std::size_t>(len[0]) * static_cast<std::size_t>(len[1]) * static_cast<std::size_t>(len[2]);
  }
};

// out[v] = interpolant of the padded field at v + o for v in the box, o given in
// index units. The weights are shared by every v, so each pass is a fixed stencil.
void shifted_linear(const Padded& p, const Box& box, const std::array<double, 3>& o, double* out) {
  std::array<int, 3> base{};
  std::array<double, 3> t{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double fl = std::floor(o[a]);
    base[a] = static_cast<int>(fl);
    t[a] = o[a] - fl;
  }
  const double w000 = (1 - t[0]) * (1 - t[1]) * (1 - t[2]);
  const double w001 = (1 - t[0]) * (1 - t[1]) * t[2];
  const double w010 = (1 - t[0]) * t[1] * (1 - t[2]);
  const double w011 = (1 - t[0]) * t[1] * t[2];
  const double w100 = t[0] * (1 - t[1]) * (1 - t[2]);
  const double w101 = t[0] * (1 - t[1]) * t[2];
  const double w110 = t[0] * t[1] * (1 - t[2]);
  const double w111 = t[0] * t[1] * t[2];
  const std::size_t sy = static_cast<std::size_t>(p.stride());
  const std::size_t sx = sy * sy;
  const int m = p.margin();
  const int nz = box.len[2];
  std::size_t idx = 0;
  for (int i = 0; i < box.len[0]; ++i)
    for (int j = 0; j < box.len[1]; ++j) {
      const double* q = p.data() + p.offset(box.lo[0] + i + m + base[0], box.lo[1] + j + m + base[1], box.lo[2] + m + base[2]);
      const double* __restrict q000 = q;
      const double* __restrict q010 = q + sy;
      const double* __restrict q100 = q + sx;
      const double* __restrict q110 = q + sx + sy;
      double* __restrict dst = out + idx;
      for (int k = 0; k < nz; ++k) {
        dst[k] = w000 * q000[k] + w001 * q000[k + 1] + w010 * q010[k] + w011 * q010[k + 1] + w100 * q100[k] +
                 w101 * q100[k + 1] + w110 * q110[k] + w111 * q110[k + 1];
      }
      idx += static_cast<std::size_t>(nz);
    }
}

// Lagrange weights for nodes -1, 0, 1, 2 at fraction t in [0, 1).
std::array<double, 4> lagrange4(double t) {
  return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
          -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
}

// Separable 4-point interpolation: k, then j, then i. Negative results are clamped to 0.
void shifted_cubic(const Padded& p, const Box& box, const std::array<double, 3>& o, double* out) {
  std::array<int, 3> base{};
  std::array<std::array<double, 4>, 3> w{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double fl = std::floor(o[a]);
    base[a] = static_cast<int>(fl) - 1;
    w[a] = lagrange4(o[a] - fl);
  }
  const int l0 = box.len[0], l1 = box.len[1], l2 = box.len[2];
  const std::size_t row = static_cast<std::size_t>(l2);
  thread_local std::vector<double> pass_k, pass_j;
  pass_k.resize(static_cast<std::size_t>(l0 + 3) * static_cast<std::size_t>(l1 + 3) * row);
  pass_j.resize(static_cast<std::size_t>(l0 + 3) * static_cast<std::size_t>(l1) * row);
  const int m = p.margin();
  const auto [k0, k1, k2, k3] = w[2];
  for (int i = 0; i < l0 + 3; ++i)
    for (int j = 0; j < l1 + 3; ++j) {
      const double* __restrict q = p.data() + p.offset(box.lo[0] + i + m + base[0], box.lo[1] + j + m + base[1], box.lo[2] + m + base[2]);
      double* __restrict d = pass_k.data() + (static_cast<std::size_t>(i) * static_cast<std::size_t>(l1 + 3) + static_cast<std::size_t>(j)) * row;
      for (int k = 0; k < l2; ++k) d[k] = k0 * q[k] + k1 * q[k + 1] + k2 * q[k + 2] + k3 * q[k + 3];
    }
  const auto [j0, j1, j2, j3] = w[1];
  for (int i = 0; i < l0 + 3; ++i)
    for (int j = 0; j < l1; ++j) {
      const double* __restrict q = pass_k.data() + (static_cast<std::size_t>(i) * static_cast<std::size_t>(l1 + 3) + static_cast<std::size_t>(j)) * row;
      double* __restrict d = pass_j.data() + (static_cast<std::size_t>(i) * static_cast<std::size_t>(l1) + static_cast<std::size_t>(j)) * row;
      for (std::size_t k = 0; k < row; ++k) d[k] = j0 * q[k] + j1 * q[k + row] + j2 * q[k + 2 * row] + j3 * q[k + 3 * row];
    }
  const auto [i0, i1, i2, i3] = w[0];
  const std::size_t plane = static_cast<std::size_t>(l1) * row;
  for (int i = 0; i < l0; ++i) {
    const double* __restrict q = pass_j.data() + static_cast<std::size_t>(i) * plane;
    double* __restrict d = out + static_cast<std::size_t>(i) * plane;
    for (std::size_t x = 0; x < plane; ++x) {
      const double v = i0 * q[x] + i1 * q[x + plane] + i2 * q[x + 2 * plane] + i3 * q[x + 3 * plane];
      d[x] = v > 0.0 ? v : 0.0;
    }
  }
}

void shifted(const Padded& p, const Box& box, const std::array<double, 3>& o, double* out) {
  if (p.interpolation() == Interpolation::Cubic)
    shifted_cubic(p, box, o, out);
  else
    shifted_linear(p, box, o, out);
}

// Sphere rule reduced to one representative per antipodal pair when the rule allows it.
struct Sphere {
  std::vector<SphereNode> nodes;
  bool folded = false;
};

Sphere reduce_sphere(const VelocityGrid& grid) {
  const auto& all = grid.sphere();
  std::vector<int> antipode(all.size(), -1);
  for (std::size_t a = 0; a < all.size(); ++a)
    for (std::size_t b = 0; b < all.size(); ++b)
      if (norm2(all[a].sigma + all[b].sigma) < 1e-24 && std::abs(all[a].w - all[b].w) <= 1e-14 * all[a].w) {
        antipode[a] = static_cast<int>(b);
        break;
      }
  Sphere s;
  s.folded = std::all_of(antipode.begin(), antipode.end(), [](int x) { return x >= 0; });
  for (std::size_t a = 0; a < all.size(); ++a)
    if (!s.folded || static_cast<int>(a) < antipode[a]) s.nodes.push_back(all[a]);
  return s;
}

// Returns (b(c), b(-c)).
struct Angular {
  explicit Angular(const AngularKernel& k) : kernel(&k), constant(k.is_constant()) {
    if (constant) b0 = std::get<ConstantAngular>(k.model()).b0;
  }
  std::pair<double, double> both(double c) const {
    if (constant) return {b0, b0};
    constexpr double kTiny = 1e-16;
    const double om = std::max(1.0 - c, kTiny);
    const double op = std::max(1.0 + c, kTiny);
    return {kernel->value_at(c, om, op), kernel->value_at(-c, op, om)};
  }
  const AngularKernel* kernel;
  bool constant;
  double b0 = 0.0;
};

// One lattice separation d (index units) with v - v* = d dv, and the sphere terms
// for it: interpolation offsets of v' and v'* relative to v, angular weights.
struct Separation {
  std::array<int, 3> d{};
  Box box;
  double kinetic = 0.0;  // |v - v*|^gamma
  std::ptrdiff_t flat_shift = 0;
};

struct SigmaTerm {
  std::array<double, 3> plus{};
  std::array<double, 3> minus{};
  double wi = 0.0;  // sphere weight times angular factor for output v
  double wj = 0.0;  // same for output v*
  // Folded rule: sphere weight times b(sigma.dir) and b(-sigma.dir) separately.
  double b_plus = 0.0;
  double b_minus = 0.0;
};

class PairLoop {
 public:
  PairLoop(const VelocityGrid& grid, const KernelSpec& k) : grid_(grid), sphere_(reduce_sphere(grid)), ang_(k.angular), gamma_(k.gamma) {
    const int n = grid.n();
    for (int dx = -(n - 1); dx <= n - 1; ++dx)
      for (int dy = -(n - 1); dy <= n - 1; ++dy)
        for (int dz = -(n - 1); dz <= n - 1; ++dz) {
          const bool positive = dx > 0 || (dx == 0 && (dy > 0 || (dy == 0 && dz > 0)));
          if (!positive) continue;
          Separation s;
          s.d = {dx, dy, dz};
          for (int a = 0; a < 3; ++a) {
            const int da = s.d[static_cast<std::size_t>(a)];
            s.box.lo[static_cast<std::size_t>(a)] = std::max(0, da);
            s.box.len[static_cast<std::size_t>(a)] = n - std::abs(da);
          }
          const double dist = std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz)) * grid.dv();
          s.kinetic = gamma_ == 1.0 ? dist : std::pow(dist, gamma_);
          s.flat_shift = (static_cast<std::ptrdiff_t>(dx) * n + dy) * n + dz;
          seps_.push_back(s);
        }
  }

  bool folded() const { return sphere_.folded; }
  std::size_t count() const { return seps_.size(); }
  const Separation& separation(std::size_t s) const { return seps_[s]; }

  std::vector<SigmaTerm> sigma_terms(const Separation& s) const {
    const Vec3 d{static_cast<double>(s.d[0]), static_cast<double>(s.d[1]), static_cast<double>(s.d[2])};
    const double len = norm(d);
    const Vec3 dir = d * (1.0 / len);
    std::vector<SigmaTerm> out;
    out.reserve(sphere_.nodes.size());
    for (const auto& node : sphere_.nodes) {
      SigmaTerm t;
      // v' - v = (-d + |d| sigma)/2, v'* - v = (-d - |d| sigma)/2 in index units.
      const Vec3 p = 0.5 * (len * node.sigma - d);
      const Vec3 m = 0.5 * (-len * node.sigma - d);
      t.plus = {p.x, p.y, p.z};
      t.minus = {m.x, m.y, m.z};
      const auto [b1, b2] = ang_.both(dot(node.sigma, dir));
      t.b_plus = node.w * b1;
      t.b_minus = node.w * b2;
      if (sphere_.folded) {
        t.wi = node.w * (b1 + b2);
        t.wj = t.wi;
      } else {
        t.wi = node.w * b1;
        t.wj = node.w * b2;
      }
      out.push_back(t);
    }
    return out;
  }

  /// Flat grid index of every output node in the box.
  void box_indices(const Box& box, std::vector<std::size_t>& idx) const {
    idx.resize(box.size());
    std::size_t c = 0;
    for (int i = 0; i < box.len[0]; ++i)
      for (int j = 0; j < box.len[1]; ++j)
        for (int k = 0; k < box.len[2]; ++k) idx[c++] = grid_.index(box.lo[0] + i, box.lo[1] + j, box.lo[2] + k);
  }

 private:
  const VelocityGrid& grid_;
  Sphere sphere_;
  Angular ang_;
  double gamma_;
  std::vector<Separation> seps_;
};

struct SweepResult {
  std::vector<Field> outputs;
  Field scalars;
};

// Calls body(s, buffers) for every separation s; workers take separations
// round-robin and own their buffers, so the reduction order is fixed for a
// given thread count. Per-separation scalars are summed pairwise afterwards.
template <class Body>
SweepResult sweep(const PairLoop& loop, std::size_t n_nodes, int n_outputs, Body&& body) {
  const std::size_t count = loop.count();
  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count));
  std::vector<std::vector<Field>> buffers(static_cast<std::size_t>(workers),
                                          std::vector<Field>(static_cast<std::size_t>(n_outputs), Field(n_nodes, 0.0)));
  SweepResult out;
  out.scalars.assign(count, 0.0);
  run_workers(workers, [&](int w) {
    auto& buf = buffers[static_cast<std::size_t>(w)];
    for (std::size_t s = static_cast<std::size_t>(w); s < count; s += static_cast<std::size_t>(workers))
      out.scalars[s] = body(s, buf);
  });
  out.outputs.assign(static_cast<std::size_t>(n_outputs), Field(n_nodes, 0.0));
  for (int m = 0; m < n_outputs; ++m)
    for (int w = 0; w < workers; ++w) {
      const Field& src = buffers[static_cast<std::size_t>(w)][static_cast<std::size_t>(m)];
      Field& dst = out.outputs[static_cast<std::size_t>(m)];
      for (std::size_t x = 0; x < n_nodes; ++x) dst[x] += src[x];
    }
  return out;
}

void require_same_grid(const DistributionField& a, const DistributionField& b) {
  if (&a.grid() != &b.grid() && !a.grid().same_as(b.grid()))
    throw Error(ErrorKind::GridMismatch, "fields live on different velocity grids");
}

void scale(Field& x, double s) {
  for (double& v : x) v *= s;
}

void check_pauli(const DistributionField& f) {
  if (f.eps() > 0.0 && 1.0 - f.eps() * f.sup() < -1e-10)
    throw Error(ErrorKind::PauliViolation, "1 - eps f < 0 somewhere");
}

// Self-interaction sweep: gain, loss and optionally the production of Q^eps(f, f).
struct SelfResult {
  Field gain;
  Field loss;
  Field density;
  double production = 0.0;
};

SelfResult self_sweep(const DistributionField& f, const KernelSpec& k, bool want_production, ProductionKind kind,
                      bool want_operator) {
  const auto& grid = f.grid();
  const std::size_t n_nodes = grid.size();
  const Padded pad(grid, f.values());
  const PairLoop loop(grid, k);
  const bool folded = loop.folded();
  const double eps = f.eps();
  const double inv_eps = eps > 0.0 ? 1.0 / eps : std::numeric_limits<double>::infinity();
  const bool phi_mode = kind == ProductionKind::ClassicalPhi;
  if (want_production && phi_mode && eps > 0.0 && 1.0 - eps * f.sup() < 1e-10)
    throw Error(ErrorKind::Saturation, "phi transform needs min(1 - eps f) >= 1e-10");
  const Field& fv = f.values();

  auto result = sweep(loop, n_nodes, 3, [&](std::size_t s_idx, std::vector<Field>& buf) {
    const Separation& sep = loop.separation(s_idx);
    const std::size_t m = sep.box.size();
    std::vector<std::size_t> idx;
    loop.box_indices(sep.box, idx);
    // Node values at v and v* = v - d, and their Pauli and phi factors.
    std::vector<double> fi(m), fj(m), pij(m), fij(m), phij(m);
    for (std::size_t x = 0; x < m; ++x) {
      fi[x] = fv[idx[x]];
      fj[x] = fv[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx[x]) - sep.flat_shift)];
      pij[x] = (1.0 - eps * fi[x]) * (1.0 - eps * fj[x]);
      fij[x] = fi[x] * fj[x];
      if (phi_mode) phij[x] = eps > 0.0 ? fi[x] / (1.0 - eps * fi[x]) * fj[x] / (1.0 - eps * fj[x]) : fij[x];
    }
    std::vector<double> a(m), b(m), gi(m, 0.0), gj(folded ? 0 : m, 0.0), li(m, 0.0), lj(folded ? 0 : m, 0.0), dens(m, 0.0);
    double total_d = 0.0;
    for (const SigmaTerm& t : loop.sigma_terms(sep)) {
      shifted(pad, sep.box, t.plus, a.data());
      shifted(pad, sep.box, t.minus, b.data());
      if (eps > 0.0)
        for (std::size_t x = 0; x < m; ++x) {
          a[x] = std::min(a[x], inv_eps);
          b[x] = std::min(b[x], inv_eps);
        }
      if (want_operator) {
        for (std::size_t x = 0; x < m; ++x) {
          const double pg = a[x] * b[x];
          const double pl = (1.0 - eps * a[x]) * (1.0 - eps * b[x]);
          gi[x] += t.wi * pg;
          li[x] += t.wi * pl;
        }
        if (!folded)
          for (std::size_t x = 0; x < m; ++x) {
            gj[x] += t.wj * a[x] * b[x];
            lj[x] += t.wj * (1.0 - eps * a[x]) * (1.0 - eps * b[x]);
          }
      }
      if (want_production) {
        // Ordered pairs (v, v*) and (v*, v) over the full sphere carry weight wi + wj in total.
        const double wsum = folded ? 2.0 * t.wi : t.wi + t.wj;
        for (std::size_t x = 0; x < m; ++x) {
          double gg, ll;
          if (phi_mode) {
            const double pa = eps > 0.0 ? a[x] / (1.0 - eps * a[x]) : a[x];
            const double pb = eps > 0.0 ? b[x] / (1.0 - eps * b[x]) : b[x];
            gg = pa * pb;
            ll = phij[x];
          } else {
            gg = pij[x] * a[x] * b[x];
            ll = fij[x] * (1.0 - eps * a[x]) * (1.0 - eps * b[x]);
          }
          if (gg > 1e-300 && ll > 1e-300) dens[x] += wsum * (gg - ll) * std::log(gg / ll);
        }
      }
    }
    const double kin = sep.kinetic;
    if (want_operator)
      for (std::size_t x = 0; x < m; ++x) {
        const std::size_t vi = idx[x];
        const std::size_t vj = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(vi) - sep.flat_shift);
        const double gw = kin * pij[x];
        const double lw = kin * fij[x];
        buf[0][vi] += gw * gi[x];
        buf[0][vj] += gw * (folded ? gi[x] : gj[x]);
        buf[1][vi] += lw * li[x];
        buf[1][vj] += lw * (folded ? li[x] : lj[x]);
      }
    if (want_production)
      for (std::size_t x = 0; x < m; ++x) {
        const double c = kin * dens[x];
        const std::size_t vi = idx[x];
        const std::size_t vj = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(vi) - sep.flat_shift);
        buf[2][vi] += 0.5 * c;
        buf[2][vj] += 0.5 * c;
        total_d += c;
      }
    return total_d;
  });
  const double dv3 = grid.cell_volume();
  SelfResult out;
  out.gain = std::move(result.outputs[0]);
  out.loss = std::move(result.outputs[1]);
  out.density = std::move(result.outputs[2]);
  scale(out.gain, dv3);
  scale(out.loss, dv3);
  // D = (1/4) dv^6 sum over ordered pairs and the full sphere.
  scale(out.density, 0.25 * dv3);
  out.production = 0.25 * dv3 * dv3 * pairwise_sum(result.scalars);
  return out;
}

// Ordered bilinear gain Q+(f, g) and loss Q-(f, g).
std::pair<Field, Field> bilinear_sweep(const DistributionField& f, const DistributionField& g, const KernelSpec& k) {
  const auto& grid = f.grid();
  const std::size_t n_nodes = grid.size();
  const Padded fp(grid, f.values());
  const Padded gp(grid, g.values());
  const PairLoop loop(grid, k);
  const bool folded = loop.folded();
  const Field& fv = f.values();
  const Field& gv = g.values();

  auto result = sweep(loop, n_nodes, 2, [&](std::size_t s_idx, std::vector<Field>& buf) {
    const Separation& sep = loop.separation(s_idx);
    const std::size_t m = sep.box.size();
    std::vector<std::size_t> idx;
    loop.box_indices(sep.box, idx);
    std::vector<double> fa(m), fb(m), ga(m), gb(m), si(m, 0.0), sj(m, 0.0);
    double mi = 0.0, mj = 0.0;
    for (const SigmaTerm& t : loop.sigma_terms(sep)) {
      shifted(fp, sep.box, t.plus, fa.data());
      shifted(gp, sep.box, t.minus, gb.data());
      if (folded) {
        // sigma and -sigma: the second term swaps the roles of v' and v'*; seen from v*
        // the angular factors trade places.
        shifted(fp, sep.box, t.minus, fb.data());
        shifted(gp, sep.box, t.plus, ga.data());
        for (std::size_t x = 0; x < m; ++x) {
          const double direct = fa[x] * gb[x];
          const double swapped = fb[x] * ga[x];
          si[x] += t.b_plus * direct + t.b_minus * swapped;
          sj[x] += t.b_minus * direct + t.b_plus * swapped;
        }
        mi += t.wi;
      } else {
        for (std::size_t x = 0; x < m; ++x) {
          si[x] += t.wi * fa[x] * gb[x];
          sj[x] += t.wj * fa[x] * gb[x];
        }
        mi += t.wi;
        mj += t.wj;
      }
    }
    if (folded) mj = mi;
    for (std::size_t x = 0; x < m; ++x) {
      const std::size_t vi = idx[x];
      const std::size_t vj = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(vi) - sep.flat_shift);
      buf[0][vi] += sep.kinetic * si[x];
      buf[0][vj] += sep.kinetic * sj[x];
      buf[1][vi] += sep.kinetic * fv[vi] * gv[vj] * mi;
      buf[1][vj] += sep.kinetic * fv[vj] * gv[vi] * mj;
    }
    return 0.0;
  });
  const double dv3 = grid.cell_volume();
  scale(result.outputs[0], dv3);
  scale(result.outputs[1], dv3);
  return {std::move(result.outputs[0]), std::move(result.outputs[1])};
}

Field gamma_sweep(const DistributionField& g, const DistributionField& h, const KernelSpec& k) {
  const auto& grid = g.grid();
  const std::size_t n_nodes = grid.size();
  const Padded hp(grid, h.values());
  const PairLoop loop(grid, k);
  const bool folded = loop.folded();
  const Field& gv = g.values();

  auto result = sweep(loop, n_nodes, 1, [&](std::size_t s_idx, std::vector<Field>& buf) {
    const Separation& sep = loop.separation(s_idx);
    const std::size_t m = sep.box.size();
    std::vector<std::size_t> idx;
    loop.box_indices(sep.box, idx);
    std::vector<double> ha(m), hb(m), si(m, 0.0), sj(folded ? 0 : m, 0.0);
    for (const SigmaTerm& t : loop.sigma_terms(sep)) {
      shifted(hp, sep.box, t.plus, ha.data());
      shifted(hp, sep.box, t.minus, hb.data());
      for (std::size_t x = 0; x < m; ++x) si[x] += t.wi * (ha[x] + hb[x]);
      if (!folded)
        for (std::size_t x = 0; x < m; ++x) sj[x] += t.wj * (ha[x] + hb[x]);
    }
    for (std::size_t x = 0; x < m; ++x) {
      const std::size_t vi = idx[x];
      const std::size_t vj = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(vi) - sep.flat_shift);
      buf[0][vi] += sep.kinetic * gv[vj] * si[x];
      buf[0][vj] += sep.kinetic * gv[vi] * (folded ? si[x] : sj[x]);
    }
    return 0.0;
  });
  scale(result.outputs[0], grid.cell_volume());
  return std::move(result.outputs[0]);
}

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

std::array<double, 5> scaled_basis(const Vec3& v, double l) {
  const Vec3 w = v * (1.0 / l);
  return {1.0, w.x, w.y, w.z, norm2(w)};
}

// raw - weight * (basis . c) with c solving the weighted normal equations; one
// refinement pass brings the invariants of the result to rounding level.
bool project_with_weight(const Field& raw, const VelocityGrid& grid, const Field* weight, Field& out) {
  const std::size_t count = grid.size();
  std::vector<std::array<double, 5>> basis(count);
  for (std::size_t i = 0; i < count; ++i) basis[i] = scaled_basis(grid.node(i), grid.l());
  Mat5 gram = Mat5::Zero();
  for (std::size_t i = 0; i < count; ++i) {
    const double w = weight ? (*weight)[i] : 1.0;
    if (w == 0.0) continue;
    Eigen::Map<const Vec5> b(basis[i].data());
    gram.noalias() += w * b * b.transpose();
  }
  const Eigen::LDLT<Mat5> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-13 * ldlt.vectorD().maxCoeff())) return false;
  out = raw;
  for (int pass = 0; pass < 2; ++pass) {
    std::array<Field, 5> terms;
    for (auto& t : terms) t.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t m = 0; m < 5; ++m) terms[m][i] = out[i] * basis[i][m];
    Vec5 rhs;
    for (int m = 0; m < 5; ++m) rhs(m) = pairwise_sum(terms[static_cast<std::size_t>(m)]);
    const Vec5 c = ldlt.solve(rhs);
    for (std::size_t i = 0; i < count; ++i) {
      const double w = weight ? (*weight)[i] : 1.0;
      if (w == 0.0) continue;
      Eigen::Map<const Vec5> b(basis[i].data());
      out[i] -= w * b.dot(c);
    }
  }
  return true;
}

}  // namespace

Field conservative_projection(const Field& raw, const VelocityGrid& grid) {
  if (raw.size() != grid.size()) throw Error(ErrorKind::GridMismatch, "field size does not match the grid");
  Field out;
  if (!project_with_weight(raw, grid, nullptr, out))
    throw Error(ErrorKind::Domain, "degenerate Gram matrix in conservative projection");
  return out;
}

Field weighted_projection(const Field& raw, const DistributionField& f) {
  if (raw.size() != f.size()) throw Error(ErrorKind::GridMismatch, "field size does not match the grid");
  Field weight(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) weight[i] = std::max(0.0, f[i] * (1.0 - f.eps() * f[i]));
  Field out;
  if (project_with_weight(raw, f.grid(), &weight, out)) return out;
  return conservative_projection(raw, f.grid());
}

CollisionOutput q_eps(const DistributionField& f, const KernelSpec& k, double* production) {
  check_pauli(f);
  SelfResult r = self_sweep(f, k, production != nullptr, ProductionKind::FermiDirac, true);
  if (production) *production = r.production;
  CollisionOutput out;
  Field raw(f.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = r.gain[i] - r.loss[i];
  out.net = weighted_projection(raw, f);
  out.gain = std::move(r.gain);
  out.loss = std::move(r.loss);
  return out;
}

CollisionOutput q_classical(const DistributionField& f, const DistributionField& g, const KernelSpec& k) {
  require_same_grid(f, g);
  const DistributionField fc(f.grid_ptr(), f.values(), 0.0);
  if (f.values() == g.values()) return q_eps(fc, k);
  auto [gain, loss] = bilinear_sweep(f, g, k);
  CollisionOutput out;
  Field raw(f.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = gain[i] - loss[i];
  out.net = weighted_projection(raw, fc);
  out.gain = std::move(gain);
  out.loss = std::move(loss);
  return out;
}

Field symmetric_gain(const DistributionField& f, const DistributionField& g, const KernelSpec& k) {
  require_same_grid(f, g);
  auto fg = bilinear_sweep(f, g, k).first;
  const auto gf = bilinear_sweep(g, f, k).first;
  for (std::size_t i = 0; i < fg.size(); ++i) fg[i] += gf[i];
  return fg;
}

Field gamma_op(const DistributionField& g, const DistributionField& h, const KernelSpec& k) {
  require_same_grid(g, h);
  return gamma_sweep(g, h, k);
}

Field q_tilde(const DistributionField& f, const KernelSpec& k) {
  const double sup = f.sup();
  if (!(sup > 0.0)) throw Error(ErrorKind::ZeroField, "q_tilde needs a nonzero field");
  const DistributionField fc(f.grid_ptr(), f.values(), 0.0);
  const SelfResult classical = self_sweep(fc, k, false, ProductionKind::FermiDirac, true);
  const Field gam = gamma_sweep(fc, fc, k);
  Field out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = classical.gain[i] + (f[i] / sup) * gam[i] - classical.loss[i];
  return out;
}

KappaReport kappa_comparison_check(const DistributionField& f, const KernelSpec& k, double kappa0) {
  KappaReport rep;
  rep.kappa_min = f.kappa_min();
  rep.precondition_met = rep.kappa_min >= kappa0;
  const SelfResult quantum = self_sweep(f, k, false, ProductionKind::FermiDirac, true);
  const DistributionField fc(f.grid_ptr(), f.values(), 0.0);
  const SelfResult classical = self_sweep(fc, k, false, ProductionKind::FermiDirac, true);
  double gmax = 0.0, lmax = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    gmax = std::max(gmax, classical.gain[i]);
    lmax = std::max(lmax, classical.loss[i]);
  }
  rep.gain_margin = std::numeric_limits<double>::infinity();
  rep.loss_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < f.size(); ++i) {
    rep.gain_margin = std::min(rep.gain_margin, (quantum.gain[i] - kappa0 * kappa0 * classical.gain[i]) / std::max(gmax, 1e-300));
    rep.loss_margin = std::min(rep.loss_margin, (classical.loss[i] - quantum.loss[i]) / std::max(lmax, 1e-300));
  }
  rep.pass = rep.precondition_met && rep.gain_margin >= -1e-10 && rep.loss_margin >= -1e-10;
  return rep;
}

double production_integral(const DistributionField& f, const KernelSpec& k, ProductionKind kind) {
  check_pauli(f);
  return self_sweep(f, k, true, kind, false).production;
}

Field production_density(const DistributionField& f, const KernelSpec& k, ProductionKind kind) {
  check_pauli(f);
  return self_sweep(f, k, true, kind, false).density;
}

}  // namespace bfd
