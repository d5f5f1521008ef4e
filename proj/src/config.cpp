#include "bfd/config.hpp"

#include <cmath>
#include <initializer_list>
#include <set>

#include <json.hpp>

#include "bfd/equilibrium.hpp"
#include "bfd/error.hpp"

namespace bfd {

namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

// Typed access to one JSON object; every error names the dotted path.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const { throw Error(ErrorKind::Schema, path_ + ": " + what); }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& item : j_.items())
      if (!ok.count(item.key())) throw Error(ErrorKind::Schema, sub(item.key()) + ": unknown key");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string sub(const std::string& key) const { return path_ + "." + key; }

  Node object(const char* key) const {
    if (!has(key)) fail(std::string("missing '") + key + "'");
    return Node(j_.at(key), sub(key));
  }

  double number(const char* key) const {
    if (!has(key)) fail(std::string("missing '") + key + "'");
    const Json& v = j_.at(key);
    if (!v.is_number()) throw Error(ErrorKind::Schema, sub(key) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw Error(ErrorKind::Schema, sub(key) + ": expected a finite number");
    return x;
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  long long integer(const char* key, long long fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_integer()) throw Error(ErrorKind::Schema, sub(key) + ": expected an integer");
    return v.get<long long>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) throw Error(ErrorKind::Schema, sub(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const char* key) const {
    if (!has(key)) fail(std::string("missing '") + key + "'");
    const Json& v = j_.at(key);
    if (!v.is_string()) throw Error(ErrorKind::Schema, sub(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::string string(const char* key, const std::string& fallback) const { return has(key) ? string(key) : fallback; }

  std::vector<double> numbers(const char* key) const {
    const Json& v = j_.at(key);
    if (!v.is_array()) throw Error(ErrorKind::Schema, sub(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw Error(ErrorKind::Schema, sub(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Vec3 vec3(const char* key) const {
    if (!has(key)) return {};
    const auto xs = numbers(key);
    if (xs.size() != 3) throw Error(ErrorKind::Schema, sub(key) + ": expected three components");
    return {xs[0], xs[1], xs[2]};
  }

  const Json& raw(const char* key) const { return j_.at(key); }

 private:
  const Json& j_;
  std::string path_;
};

MaxwellianSpec parse_maxwellian(const Node& n) {
  n.allow({"rho", "u", "T"});
  return MaxwellianSpec{n.number("rho"), n.vec3("u"), n.number("T")};
}

KernelSpec parse_kernel(const Node& n) {
  n.allow({"gamma", "angular"});
  const double gamma = n.number("gamma");
  const Node a = n.object("angular");
  const std::string type = a.string("type");
  try {
    if (type == "constant") {
      a.allow({"type", "b0"});
      return make_kernel(gamma, AngularKernel::constant(a.number("b0")));
    }
    if (type == "inverse_power") {
      a.allow({"type", "alpha", "scale"});
      return make_kernel(gamma, AngularKernel::inverse_power(a.number("alpha"), a.number("scale", 1.0)));
    }
    if (type == "table") {
      a.allow({"type", "nodes"});
      const Json& nodes = a.raw("nodes");
      if (!nodes.is_array()) a.fail("nodes: expected an array of [cos_theta, value] pairs");
      std::vector<std::pair<double, double>> table;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const Json& p = nodes[i];
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
          throw Error(ErrorKind::Schema, a.sub("nodes") + "[" + std::to_string(i) + "]: expected [cos_theta, value]");
        table.emplace_back(p[0].get<double>(), p[1].get<double>());
      }
      return make_kernel(gamma, AngularKernel::table(std::move(table)));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Schema) throw;
    throw Error(ErrorKind::Schema, n.sub("angular") + ": " + e.what());
  }
  throw Error(ErrorKind::Schema, a.sub("type") + ": expected constant, inverse_power or table");
}

InitialDatum parse_initial(const Node& n) {
  const std::string type = n.string("type");
  if (type == "two_maxwellians") {
    n.allow({"type", "first", "second"});
    return TwoMaxwellians{parse_maxwellian(n.object("first")), parse_maxwellian(n.object("second"))};
  }
  if (type == "scaled_equilibrium") {
    n.allow({"type", "rho", "u", "e", "amplitude"});
    return ScaledEquilibrium{n.number("rho"), n.vec3("u"), n.number("e"), n.number("amplitude", 0.0)};
  }
  if (type == "near_saturated") {
    n.allow({"type", "fill", "radius", "u"});
    return NearSaturated{n.number("fill"), n.number("radius"), n.vec3("u")};
  }
  if (type == "file") {
    n.allow({"type", "path"});
    return FileDatum{n.string("path")};
  }
  throw Error(ErrorKind::Schema, n.sub("type") + ": expected two_maxwellians, scaled_equilibrium, near_saturated or file");
}

OJson vec_json(const Vec3& v) { return OJson::array({v.x, v.y, v.z}); }

OJson maxwellian_json(const MaxwellianSpec& m) { return OJson{{"rho", m.rho}, {"u", vec_json(m.u)}, {"T", m.t}}; }

OJson kernel_json(const KernelSpec& k) {
  OJson angular;
  if (const auto* c = std::get_if<ConstantAngular>(&k.angular.model())) {
    angular = OJson{{"type", "constant"}, {"b0", c->b0}};
  } else if (const auto* ip = std::get_if<InversePowerAngular>(&k.angular.model())) {
    angular = OJson{{"type", "inverse_power"}, {"alpha", ip->alpha}, {"scale", ip->scale}};
  } else {
    OJson nodes = OJson::array();
    for (const auto& [c, b] : std::get<TableAngular>(k.angular.model()).nodes) nodes.push_back(OJson::array({c, b}));
    angular = OJson{{"type", "table"}, {"nodes", nodes}};
  }
  return OJson{{"gamma", k.gamma}, {"angular", angular}};
}

OJson initial_json(const InitialDatum& d) {
  if (const auto* tm = std::get_if<TwoMaxwellians>(&d))
    return OJson{{"type", "two_maxwellians"}, {"first", maxwellian_json(tm->first)}, {"second", maxwellian_json(tm->second)}};
  if (const auto* se = std::get_if<ScaledEquilibrium>(&d))
    return OJson{{"type", "scaled_equilibrium"}, {"rho", se->rho}, {"u", vec_json(se->u)}, {"e", se->e}, {"amplitude", se->amplitude}};
  if (const auto* ns = std::get_if<NearSaturated>(&d))
    return OJson{{"type", "near_saturated"}, {"fill", ns->fill}, {"radius", ns->radius}, {"u", vec_json(ns->u)}};
  return OJson{{"type", "file"}, {"path", std::get<FileDatum>(d).path}};
}

void check_saturation(const Moments& m, double eps, const std::string& what) {
  if (!(eps > 0.0)) return;
  const SaturationInfo info = saturation_info(m.rho, m.e, eps);
  if (eps >= info.eps_sat)
    throw Error(ErrorKind::Saturation, what + " = " + std::to_string(eps) + " is not below eps_sat = " +
                                           std::to_string(info.eps_sat) + " for the initial moments");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("config: not valid JSON: ") + e.what());
  }
  const Node root(doc, "config");
  root.allow({"grid", "kernel", "eps", "initial", "t_end", "theta", "diag_stride", "snapshot_times", "diagnostics",
              "output_dir", "seed", "threads", "sweep"});
  RunConfig cfg;
  SimConfig& sim = cfg.sim;
  sim.kernel = parse_kernel(root.object("kernel"));
  sim.eps = root.number("eps");
  if (sim.eps < 0.0) throw Error(ErrorKind::Schema, "config.eps: must be nonnegative");
  sim.initial = parse_initial(root.object("initial"));
  sim.t_end = root.number("t_end", 5.0);
  if (!(sim.t_end > 0.0)) throw Error(ErrorKind::Schema, "config.t_end: must be positive");
  sim.theta = root.number("theta", 0.5);
  if (!(sim.theta > 0.0 && sim.theta < 1.0)) throw Error(ErrorKind::Schema, "config.theta: must lie in (0, 1)");
  const long long stride = root.integer("diag_stride", 10);
  if (stride < 1) throw Error(ErrorKind::Schema, "config.diag_stride: must be at least 1");
  sim.diag_stride = static_cast<int>(stride);
  if (root.has("snapshot_times")) {
    sim.snapshot_times = root.numbers("snapshot_times");
    for (double t : sim.snapshot_times)
      if (!(t > 0.0)) throw Error(ErrorKind::Schema, "config.snapshot_times: entries must be positive");
  }
  if (root.has("diagnostics")) {
    const Node d = root.object("diagnostics");
    d.allow({"production", "sandwich", "ckp"});
    sim.diagnostics.production = d.boolean("production", true);
    sim.diagnostics.sandwich = d.boolean("sandwich", true);
    sim.diagnostics.ckp = d.boolean("ckp", true);
  }

  Moments m;
  try {
    m = datum_moments(sim.initial, sim.eps);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Schema) throw;
    throw Error(ErrorKind::Schema, std::string("config.initial: ") + e.what());
  }
  check_saturation(m, sim.eps, "eps");

  if (root.has("grid")) {
    const Node g = root.object("grid");
    g.allow({"n", "l", "n_theta", "n_phi", "interpolation"});
    sim.grid.n = static_cast<int>(g.integer("n", 16));
    sim.grid.l = g.number("l", 0.0);
    if (g.has("l") && !(sim.grid.l > 0.0)) throw Error(ErrorKind::Schema, "config.grid.l: must be positive");
    sim.grid.n_theta = static_cast<int>(g.integer("n_theta", 8));
    sim.grid.n_phi = static_cast<int>(g.integer("n_phi", 8));
    const std::string interp = g.string("interpolation", "cubic");
    if (interp != "cubic" && interp != "linear") throw Error(ErrorKind::Schema, "config.grid.interpolation: expected cubic or linear");
    sim.grid.interpolation = interpolation_from_string(interp);
  }
  if (sim.grid.n < 8 || sim.grid.n % 2 != 0) throw Error(ErrorKind::Schema, "config.grid.n: must be even and at least 8");
  if (sim.grid.n_theta < 4 || sim.grid.n_phi < 4) throw Error(ErrorKind::Schema, "config.grid: sphere rule must be at least 4 x 4");
  if (!(sim.grid.l > 0.0)) {
    if (const auto* fd = std::get_if<FileDatum>(&sim.initial))
      sim.grid.l = read_snapshot(fd->path).grid().l();
    else
      sim.grid.l = 6.0 * std::sqrt(m.e);
  }

  cfg.output_dir = root.string("output_dir", cfg.output_dir);
  const long long seed = root.integer("seed", 0);
  if (seed < 0) throw Error(ErrorKind::Schema, "config.seed: must be nonnegative");
  cfg.seed = static_cast<std::uint64_t>(seed);
  const long long threads = root.integer("threads", 0);
  if (threads < 0) throw Error(ErrorKind::Schema, "config.threads: must be nonnegative");
  cfg.threads = static_cast<int>(threads);

  if (root.has("sweep")) {
    const Node s = root.object("sweep");
    s.allow({"eps", "dagger_fractions", "kappa0"});
    if (s.has("eps")) cfg.sweep.eps = s.numbers("eps");
    if (s.has("dagger_fractions")) cfg.sweep.dagger_fractions = s.numbers("dagger_fractions");
    cfg.sweep.kappa0 = s.number("kappa0", 0.0);
    if (!(cfg.sweep.kappa0 >= 0.0 && cfg.sweep.kappa0 < 1.0)) throw Error(ErrorKind::Schema, "config.sweep.kappa0: must lie in [0, 1)");
    for (double e : cfg.sweep.eps) {
      if (e < 0.0) throw Error(ErrorKind::Schema, "config.sweep.eps: entries must be nonnegative");
      check_saturation(m, e, "sweep eps");
    }
    for (double x : cfg.sweep.dagger_fractions)
      if (!(x > 0.0 && x <= 1.0)) throw Error(ErrorKind::Schema, "config.sweep.dagger_fractions: entries must lie in (0, 1]");
  }
  return cfg;
}

std::string serialize(const RunConfig& cfg) {
  const SimConfig& sim = cfg.sim;
  OJson doc;
  doc["grid"] = OJson{{"n", sim.grid.n},
                      {"l", sim.grid.l},
                      {"n_theta", sim.grid.n_theta},
                      {"n_phi", sim.grid.n_phi},
                      {"interpolation", to_string(sim.grid.interpolation)}};
  doc["kernel"] = kernel_json(sim.kernel);
  doc["eps"] = sim.eps;
  doc["initial"] = initial_json(sim.initial);
  doc["t_end"] = sim.t_end;
  doc["theta"] = sim.theta;
  doc["diag_stride"] = sim.diag_stride;
  doc["snapshot_times"] = sim.snapshot_times;
  doc["diagnostics"] = OJson{{"production", sim.diagnostics.production},
                             {"sandwich", sim.diagnostics.sandwich},
                             {"ckp", sim.diagnostics.ckp}};
  doc["output_dir"] = cfg.output_dir;
  doc["seed"] = cfg.seed;
  doc["threads"] = cfg.threads;
  doc["sweep"] = OJson{{"eps", cfg.sweep.eps}, {"dagger_fractions", cfg.sweep.dagger_fractions}, {"kappa0", cfg.sweep.kappa0}};
  return doc.dump(2) + "\n";
}

}  // namespace bfd
