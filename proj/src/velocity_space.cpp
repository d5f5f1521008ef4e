#include "bfd/velocity_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "bfd/error.hpp"
#include "bfd/parallel.hpp"
#include "bfd/quadrature.hpp"

namespace bfd {

const char* to_string(Interpolation i) { return i == Interpolation::Linear ? "linear" : "cubic"; }

Interpolation interpolation_from_string(const std::string& name) {
  if (name == "linear") return Interpolation::Linear;
  if (name == "cubic") return Interpolation::Cubic;
  throw Error(ErrorKind::Domain, "unknown interpolation '" + name + "'");
}

VelocityGrid::VelocityGrid(int n, double l, int n_theta, int n_phi, Interpolation interp)
    : n_(n), l_(l), dv_(2.0 * l / n), n_theta_(n_theta), n_phi_(n_phi), interp_(interp) {
  if (n < 8 || n % 2 != 0) throw Error(ErrorKind::Size, "grid needs an even number of points per axis, at least 8");
  if (!(l > 0.0) || !std::isfinite(l)) throw Error(ErrorKind::Size, "grid half-width must be positive");
  if (n_theta < 4 || n_phi < 4) throw Error(ErrorKind::Size, "sphere rule needs n_theta >= 4 and n_phi >= 4");
  axis_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) axis_[static_cast<std::size_t>(i)] = -l + (i + 0.5) * dv_;

  const quad::Rule gl = quad::gauss_legendre(n_theta);
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  sphere_.reserve(static_cast<std::size_t>(n_theta) * n_phi);
  for (int a = 0; a < n_theta; ++a) {
    const double c = gl.nodes[static_cast<std::size_t>(a)];
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (int b = 0; b < n_phi; ++b) {
      // Half-offset azimuth keeps the rule invariant under sigma -> -sigma for even n_phi.
      const double phi = (b + 0.5) * dphi;
      sphere_.push_back({{s * std::cos(phi), s * std::sin(phi), c}, gl.weights[static_cast<std::size_t>(a)] * dphi});
    }
  }
}

Vec3 VelocityGrid::node(std::size_t idx) const {
  const auto nn = static_cast<std::size_t>(n_);
  const std::size_t k = idx % nn;
  const std::size_t j = (idx / nn) % nn;
  const std::size_t i = idx / (nn * nn);
  return {axis_[i], axis_[j], axis_[k]};
}

GridPtr build_grid(int n, double l, int n_theta, int n_phi, Interpolation interp) {
  return std::make_shared<const VelocityGrid>(n, l, n_theta, n_phi, interp);
}

DistributionField::DistributionField(GridPtr grid, Field values, double eps)
    : grid_(std::move(grid)), values_(std::move(values)), eps_(eps) {
  if (!grid_) throw Error(ErrorKind::Domain, "distribution field needs a grid");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error(ErrorKind::Domain, "eps must be finite and >= 0");
  if (values_.size() != grid_->size()) throw Error(ErrorKind::Domain, "field size does not match the grid");
  const double upper = eps > 0.0 ? (1.0 + 1e-12) / eps : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const double x = values_[i];
    if (!std::isfinite(x)) throw Error(ErrorKind::Domain, "field contains a non-finite value");
    if (x < 0.0 || x > upper) {
      std::ostringstream msg;
      msg << "value " << x << " at node " << i << " outside [0, 1/eps]";
      throw Error(ErrorKind::PauliViolation, msg.str());
    }
  }
}

double DistributionField::kappa_min() const {
  if (eps_ == 0.0) return 1.0;
  return 1.0 - eps_ * sup();
}

double DistributionField::sup() const {
  double m = 0.0;
  for (double x : values_) m = std::max(m, x);
  return m;
}

std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& v_star, const Vec3& sigma) {
  const Vec3 c = 0.5 * (v + v_star);
  const double g = 0.5 * norm(v - v_star);
  return {c + g * sigma, c - g * sigma};
}

double integrate(const VelocityGrid& grid, const Field& values) {
  return grid.cell_volume() * pairwise_sum(values);
}

std::array<double, 5> invariant_integrals(const VelocityGrid& grid, const Field& values) {
  std::array<Field, 5> terms;
  for (auto& t : terms) t.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Vec3 v = grid.node(i);
    const double f = values[i];
    terms[0][i] = f;
    terms[1][i] = f * v.x;
    terms[2][i] = f * v.y;
    terms[3][i] = f * v.z;
    terms[4][i] = f * norm2(v);
  }
  std::array<double, 5> out{};
  for (std::size_t m = 0; m < 5; ++m) out[m] = integrate(grid, terms[m]);
  return out;
}

Moments moments(const VelocityGrid& grid, const Field& values) {
  const auto inv = invariant_integrals(grid, values);
  if (!(inv[0] > 0.0)) throw Error(ErrorKind::ZeroField, "moments of a field with zero mass");
  Moments m;
  m.rho = inv[0];
  m.u = Vec3{inv[1], inv[2], inv[3]} * (1.0 / m.rho);
  Field centred(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) centred[i] = values[i] * norm2(grid.node(i) - m.u);
  m.e = integrate(grid, centred) / (3.0 * m.rho);
  return m;
}

Moments moments(const DistributionField& f) { return moments(f.grid(), f.values()); }

double lebesgue_norm(const VelocityGrid& grid, const Field& values, double p, double k) {
  if (!(p >= 1.0)) throw Error(ErrorKind::Domain, "Lebesgue exponent must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) m = std::max(m, std::abs(values[i]) * std::pow(bracket(grid.node(i)), k));
    return m;
  }
  Field terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    terms[i] = std::pow(std::abs(values[i]), p) * std::pow(bracket(grid.node(i)), k * p);
  return std::pow(integrate(grid, terms), 1.0 / p);
}

double lebesgue_norm(const DistributionField& f, double p, double k) {
  return lebesgue_norm(f.grid(), f.values(), p, k);
}

double l1k_log_norm(const DistributionField& f, double k) {
  const auto& grid = f.grid();
  Field terms(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = std::abs(f[i]);
    terms[i] = x > 0.0 ? std::pow(bracket(grid.node(i)), k) * x * std::abs(std::log(x)) : 0.0;
  }
  return integrate(grid, terms);
}

void write_snapshot(const std::string& path, const DistributionField& f) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  const auto& g = f.grid();
  nlohmann::ordered_json header = {
      {"n", g.n()}, {"l", g.l()}, {"eps", f.eps()}, {"n_theta", g.n_theta()}, {"n_phi", g.n_phi()},
      {"interpolation", to_string(g.interpolation())}};
  std::fprintf(out, "# %s\n", header.dump().c_str());
  std::fprintf(out, "i,j,k,f\n");
  const int n = g.n();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) std::fprintf(out, "%d,%d,%d,%.17g\n", i, j, k, f[g.index(i, j, k)]);
  if (std::fclose(out) != 0) throw Error(ErrorKind::Io, "failed writing " + path);
}

DistributionField read_snapshot(const std::string& path, int n_theta, int n_phi, Interpolation interp) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw Error(ErrorKind::Schema, path + ": missing '# {header}' line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line.substr(2));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, path + ": bad header: " + e.what());
  }
  for (const char* key : {"n", "l", "eps"})
    if (!header.contains(key)) throw Error(ErrorKind::Schema, path + ": header lacks '" + key + "'");
  const int n = header["n"].get<int>();
  const double l = header["l"].get<double>();
  const double eps = header["eps"].get<double>();
  n_theta = header.value("n_theta", n_theta);
  n_phi = header.value("n_phi", n_phi);
  if (header.contains("interpolation")) interp = interpolation_from_string(header["interpolation"].get<std::string>());
  auto grid = build_grid(n, l, n_theta, n_phi, interp);
  if (!std::getline(in, line) || line != "i,j,k,f") throw Error(ErrorKind::Schema, path + ": expected 'i,j,k,f' column header");
  Field values(grid->size(), 0.0);
  std::vector<char> seen(grid->size(), 0);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int i = 0, j = 0, k = 0;
    double x = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &i, &j, &k, &x) != 4 || i < 0 || j < 0 || k < 0 || i >= n || j >= n ||
        k >= n)
      throw Error(ErrorKind::Schema, path + ": bad row '" + line + "'");
    const std::size_t idx = grid->index(i, j, k);
    if (seen[idx]) throw Error(ErrorKind::Schema, path + ": duplicate row '" + line + "'");
    seen[idx] = 1;
    values[idx] = x;
    ++rows;
  }
  if (rows != grid->size()) throw Error(ErrorKind::Schema, path + ": expected n^3 rows");
  return DistributionField(grid, std::move(values), eps);
}

}  // namespace bfd
