#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bfd/config.hpp"
#include "bfd/equilibrium.hpp"
#include "bfd/error.hpp"
#include "bfd/parallel.hpp"
#include "bfd/solver.hpp"
#include "bfd/verify.hpp"

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw bfd::Error(bfd::ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

bfd::RunConfig load_config(const std::string& path, const std::string& out_override, int threads_override) {
  bfd::RunConfig cfg;
  try {
    cfg = bfd::parse_config(read_file(path));
  } catch (const bfd::Error& e) {
    if (e.kind() == bfd::ErrorKind::Schema) throw UsageError(e.what());
    throw;
  }
  if (!out_override.empty()) cfg.output_dir = out_override;
  if (threads_override > 0) cfg.threads = threads_override;
  bfd::set_thread_count(cfg.threads);
  fs::create_directories(cfg.output_dir);
  return cfg;
}

OJson metrics_json(const std::vector<std::pair<std::string, double>>& metrics) {
  OJson m = OJson::object();
  for (const auto& [k, v] : metrics) m[k] = std::isfinite(v) ? OJson(v) : OJson(nullptr);
  return m;
}

OJson finite_or_null(double x) { return std::isfinite(x) ? OJson(x) : OJson(nullptr); }

int cmd_equilibrium(double rho, const std::vector<double>& u, double e, double eps, const std::vector<double>& ks) {
  const bfd::Vec3 uv{u[0], u[1], u[2]};
  const bfd::SaturationInfo sat = bfd::saturation_info(rho, e, eps);
  const bfd::FermiDiracParams p = bfd::fit_fermi_dirac(rho, uv, e, eps);
  OJson doc{{"rho", rho}, {"u", u}, {"e", e}, {"eps", eps}, {"a_eps", p.a_eps}, {"b_eps", p.b_eps},
            {"eps_sat", sat.eps_sat}, {"eps_sat_dagger", sat.eps_sat_dagger}, {"r_e", finite_or_null(sat.r_e)}};
  if (eps <= sat.eps_sat_dagger) {
    OJson c1k = OJson::array();
    double c_inf = 0.0;
    for (double k : ks) {
      const bfd::NormBounds b = bfd::fd_norm_bounds(p, k);
      c_inf = b.c_inf;
      c1k.push_back(b.c_1k);
    }
    doc["c_inf"] = c_inf;
    doc["k"] = ks;
    doc["c_1k"] = c1k;
  } else {
    doc["c_inf"] = nullptr;
    doc["k"] = ks;
    doc["c_1k"] = nullptr;
  }
  std::cout << doc.dump(2) << "\n";
  return 0;
}

std::string snapshot_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snapshot_%04zu.csv", index);
  return buf;
}

int cmd_simulate(const bfd::RunConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  std::ofstream series(dir / "series.csv");
  std::ofstream extra(dir / "series_extra.csv");
  if (!series || !extra) throw bfd::Error(bfd::ErrorKind::Io, "cannot write series files in " + dir.string());
  series << bfd::kSeriesHeader << "\n" << std::flush;
  extra << bfd::kExtraHeader << "\n" << std::flush;

  OJson meta{{"config", OJson::parse(bfd::serialize(cfg))}, {"threads", bfd::thread_count()},
             {"status", "running"}, {"snapshots", OJson::array()}};
  write_file(dir / "metadata.json", meta.dump(2) + "\n");

  bfd::RunHooks hooks;
  hooks.on_record = [&](const bfd::DiagnosticsRecord& r) {
    series << bfd::series_row(r) << "\n" << std::flush;
    extra << bfd::extra_row(r) << "\n" << std::flush;
  };
  hooks.on_snapshot = [&](const bfd::SolverState& s) {
    const std::string name = snapshot_name(meta["snapshots"].size());
    bfd::write_snapshot((dir / name).string(), s.f);
    meta["snapshots"].push_back(OJson{{"file", name}, {"t", s.t}, {"step", s.step_count}});
  };

  try {
    const bfd::TimeSeries ts = bfd::run(cfg.sim, hooks);
    meta["status"] = "complete";
    meta["summary"] = OJson{{"records", ts.records.size()}, {"mass0", ts.mass0}, {"max_drift", ts.max_drift},
                            {"sup_max", ts.sup_max}, {"kappa_floor", ts.kappa_floor}, {"t_end", ts.t_end}};
  } catch (const bfd::Error& e) {
    meta["status"] = "failed";
    meta["error"] = e.what();
    write_file(dir / "metadata.json", meta.dump(2) + "\n");
    throw;
  }
  write_file(dir / "metadata.json", meta.dump(2) + "\n");
  std::cerr << "wrote " << (dir / "series.csv").string() << "\n";
  return 0;
}

int cmd_verify(const bfd::RunConfig& cfg) {
  const std::vector<bfd::Verdict> verdicts = bfd::verify_run(cfg.sim);
  bool all = true;
  OJson checks = OJson::array();
  for (const auto& v : verdicts) {
    all = all && v.pass;
    OJson c{{"name", v.name}, {"pass", v.pass}, {"metrics", metrics_json(v.metrics)}};
    if (!v.note.empty()) c["note"] = v.note;
    checks.push_back(c);
    std::cerr << (v.pass ? "PASS " : "FAIL ") << v.name << "\n";
  }
  const OJson doc{{"pass", all}, {"checks", checks}};
  write_file(fs::path(cfg.output_dir) / "verdict.json", doc.dump(2) + "\n");
  return all ? 0 : kExitFailure;
}

int cmd_sweep(const bfd::RunConfig& cfg) {
  std::vector<double> eps = cfg.sweep.eps;
  if (eps.empty()) {
    const bfd::Moments m = bfd::datum_moments(cfg.sim.initial, cfg.sim.eps);
    const double dagger = bfd::saturation_info(m.rho, m.e, 1.0).eps_sat_dagger;
    for (double x : cfg.sweep.dagger_fractions) eps.push_back(x * dagger);
  }
  const bfd::SweepResult r = bfd::check_linfty_uniform(cfg.sim, eps);
  double sup = 0.0;
  for (double s : r.sup_linf) sup = std::max(sup, s);
  const double kappa0 = cfg.sweep.kappa0 > 0.0 ? cfg.sweep.kappa0 : 1.0 - eps.back() * sup;
  const bfd::Verdict ns = bfd::check_nonsaturation(r, kappa0);

  OJson fits = OJson::array();
  for (const auto& [c, a] : r.decay_fit) fits.push_back(OJson{{"c_fit", finite_or_null(c)}, {"alpha_fit", finite_or_null(a)}});
  const OJson doc{{"pass", r.pass && ns.pass},
                  {"eps_values", r.eps_values},
                  {"sup_linf", r.sup_linf},
                  {"kappa_floor", r.kappa_floor},
                  {"decay_fit", fits},
                  {"spread", r.spread},
                  {"linfty_uniform", r.pass},
                  {"nonsaturation", OJson{{"pass", ns.pass}, {"metrics", metrics_json(ns.metrics)}}}};
  write_file(fs::path(cfg.output_dir) / "sweep.json", doc.dump(2) + "\n");
  std::cerr << (r.pass ? "PASS " : "FAIL ") << "linfty_uniform\n" << (ns.pass ? "PASS " : "FAIL ") << "nonsaturation\n";
  return r.pass && ns.pass ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boltzmann-Fermi-Dirac homogeneous solver"};
  app.require_subcommand(1);

  double rho = 1.0, e = 1.0, eps = 0.0;
  std::vector<double> u{0.0, 0.0, 0.0};
  std::vector<double> ks{0.0, 2.0, 3.0};
  auto* eq = app.add_subcommand("equilibrium", "Fit the Fermi-Dirac equilibrium and print its parameters");
  eq->add_option("--rho", rho, "Mass density")->required()->check(CLI::PositiveNumber);
  eq->add_option("--e", e, "Energy per unit mass E")->required()->check(CLI::PositiveNumber);
  eq->add_option("--eps", eps, "Quantum parameter")->required()->check(CLI::PositiveNumber);
  eq->add_option("--u", u, "Bulk velocity")->expected(3);
  eq->add_option("--k", ks, "Weight orders for c_1k")->check(CLI::NonNegativeNumber);

  std::string config_path, out_dir;
  int threads = 0;
  std::vector<CLI::App*> runs;
  const std::pair<const char*, const char*> run_commands[] = {
      {"simulate", "Integrate a configured run and write series and snapshots"},
      {"verify", "Run the trajectory checks and write verdict.json"},
      {"sweep", "Run the eps sweep and write sweep.json"}};
  for (const auto& [name, help] : run_commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Run configuration JSON")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--threads", threads, "Worker threads (overrides threads and BFD_THREADS)")->check(CLI::NonNegativeNumber);
    runs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (eq->parsed()) return cmd_equilibrium(rho, u, e, eps, ks);
    const bfd::RunConfig cfg = load_config(config_path, out_dir, threads);
    if (runs[0]->parsed()) return cmd_simulate(cfg);
    if (runs[1]->parsed()) return cmd_verify(cfg);
    return cmd_sweep(cfg);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitFailure;
  }
}
