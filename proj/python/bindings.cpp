#include <array>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bfd/collision.hpp"
#include "bfd/config.hpp"
#include "bfd/entropy.hpp"
#include "bfd/equilibrium.hpp"
#include "bfd/error.hpp"
#include "bfd/kernels.hpp"
#include "bfd/parallel.hpp"
#include "bfd/solver.hpp"
#include "bfd/verify.hpp"

namespace py = pybind11;
using namespace bfd;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Nodal arrays cross the boundary as copies shaped (n, n, n).
Array to_numpy(const Field& values, int n) {
  Array out({n, n, n});
  std::copy(values.begin(), values.end(), out.mutable_data());
  return out;
}

Field from_numpy(const Array& a) { return Field(a.data(), a.data() + a.size()); }

Vec3 to_vec(const std::array<double, 3>& u) { return {u[0], u[1], u[2]}; }
std::array<double, 3> from_vec(const Vec3& v) { return {v.x, v.y, v.z}; }

py::dict moments_dict(const Moments& m) {
  py::dict d;
  d["rho"] = m.rho;
  d["u"] = from_vec(m.u);
  d["e"] = m.e;
  return d;
}

py::dict collision_dict(const CollisionOutput& q, int n) {
  py::dict d;
  d["gain"] = to_numpy(q.gain, n);
  d["loss"] = to_numpy(q.loss, n);
  d["net"] = to_numpy(q.net, n);
  return d;
}

py::dict series_dict(const TimeSeries& ts) {
  std::vector<double> t, rho, e, sup_f, kappa_min, h_eps, h_rel, d_eps, residual;
  for (const auto& r : ts.records) {
    t.push_back(r.t);
    rho.push_back(r.m.rho);
    e.push_back(r.m.e);
    sup_f.push_back(r.sup_f);
    kappa_min.push_back(r.kappa_min);
    h_eps.push_back(r.h_eps);
    h_rel.push_back(r.h_rel);
    d_eps.push_back(r.d_eps);
    residual.push_back(r.identity_residual);
  }
  py::dict d;
  d["t"] = py::array(py::cast(t));
  d["rho"] = py::array(py::cast(rho));
  d["E"] = py::array(py::cast(e));
  d["sup_f"] = py::array(py::cast(sup_f));
  d["kappa_min"] = py::array(py::cast(kappa_min));
  d["H_eps"] = py::array(py::cast(h_eps));
  d["H_rel"] = py::array(py::cast(h_rel));
  d["D_eps"] = py::array(py::cast(d_eps));
  d["identity_residual"] = py::array(py::cast(residual));
  d["max_drift"] = ts.max_drift;
  d["sup_max"] = ts.sup_max;
  d["kappa_floor"] = ts.kappa_floor;
  return d;
}

py::dict verdict_dict(const Verdict& v) {
  py::dict metrics;
  for (const auto& [k, x] : v.metrics) metrics[py::str(k)] = x;
  py::dict d;
  d["name"] = v.name;
  d["pass"] = v.pass;
  d["metrics"] = metrics;
  d["note"] = v.note;
  return d;
}

SimConfig sim_config(const std::string& text) {
  const RunConfig cfg = parse_config(text);
  set_thread_count(cfg.threads);
  return cfg.sim;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Homogeneous Boltzmann-Fermi-Dirac solver and trajectory checks.";

  static py::exception<Error> error(m, "BfdError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(e.what());
    }
  });

  py::class_<VelocityGrid, std::shared_ptr<VelocityGrid>>(m, "VelocityGrid")
      .def_property_readonly("n", &VelocityGrid::n)
      .def_property_readonly("l", &VelocityGrid::l)
      .def_property_readonly("dv", &VelocityGrid::dv)
      .def_property_readonly("n_theta", &VelocityGrid::n_theta)
      .def_property_readonly("n_phi", &VelocityGrid::n_phi)
      .def_property_readonly("axis", [](const VelocityGrid& g) {
        std::vector<double> a;
        for (int i = 0; i < g.n(); ++i) a.push_back(g.coord(i));
        return py::array(py::cast(a));
      });

  m.def(
      "build_grid",
      [](int n, double l, int n_theta, int n_phi, const std::string& interpolation) {
        return std::const_pointer_cast<VelocityGrid>(
            build_grid(n, l, n_theta, n_phi, interpolation_from_string(interpolation)));
      },
      py::arg("n"), py::arg("l"), py::arg("n_theta") = 8, py::arg("n_phi") = 8,
      py::arg("interpolation") = "cubic");

  py::class_<DistributionField>(m, "DistributionField")
      .def(py::init([](std::shared_ptr<VelocityGrid> g, const Array& values, double eps) {
             return DistributionField(g, from_numpy(values), eps);
           }),
           py::arg("grid"), py::arg("values"), py::arg("eps"))
      .def_property_readonly("eps", &DistributionField::eps)
      .def_property_readonly("values", [](const DistributionField& f) { return to_numpy(f.values(), f.grid().n()); })
      .def_property_readonly("kappa_min", &DistributionField::kappa_min)
      .def_property_readonly("sup", &DistributionField::sup);

  m.def("fermi_integral", &fermi_integral, py::arg("s"), py::arg("tau"));
  m.def("pressure_ratio", &pressure_ratio, py::arg("tau"));

  m.def(
      "saturation_info",
      [](double rho, double e, double eps) {
        const SaturationInfo s = saturation_info(rho, e, eps);
        py::dict d;
        d["eps_sat"] = s.eps_sat;
        d["eps_sat_dagger"] = s.eps_sat_dagger;
        d["fermi_temperature"] = s.fermi_temperature;
        d["r_e"] = s.r_e;
        return d;
      },
      py::arg("rho"), py::arg("e"), py::arg("eps"));

  py::class_<FermiDiracParams>(m, "FermiDiracParams")
      .def_readonly("a_eps", &FermiDiracParams::a_eps)
      .def_readonly("b_eps", &FermiDiracParams::b_eps)
      .def_readonly("eps", &FermiDiracParams::eps)
      .def_readonly("rho", &FermiDiracParams::rho)
      .def_readonly("e", &FermiDiracParams::e)
      .def_property_readonly("u", [](const FermiDiracParams& p) { return from_vec(p.u); })
      .def("__call__", [](const FermiDiracParams& p, const std::array<double, 3>& v) {
        return eval_fermi_dirac(p, to_vec(v));
      });

  m.def(
      "fit_fermi_dirac",
      [](double rho, const std::array<double, 3>& u, double e, double eps) {
        return fit_fermi_dirac(rho, to_vec(u), e, eps);
      },
      py::arg("rho"), py::arg("u"), py::arg("e"), py::arg("eps"));

  m.def(
      "sample_fermi_dirac",
      [](const FermiDiracParams& p, std::shared_ptr<VelocityGrid> g) { return sample_fermi_dirac(p, g); },
      py::arg("params"), py::arg("grid"));

  py::class_<KernelSpec>(m, "KernelSpec")
      .def_readonly("gamma", &KernelSpec::gamma);
  m.def(
      "constant_kernel",
      [](double gamma, double b0) { return make_kernel(gamma, AngularKernel::constant(b0)); },
      py::arg("gamma"), py::arg("b0"));
  m.def(
      "inverse_power_kernel",
      [](double alpha, double scale) {
        return make_kernel(2.0 * alpha - 5.0, AngularKernel::inverse_power(alpha, scale));
      },
      py::arg("alpha"), py::arg("scale") = 1.0);

  m.def("moments", [](const DistributionField& f) { return moments_dict(moments(f)); }, py::arg("f"));
  m.def(
      "q_eps",
      [](const DistributionField& f, const KernelSpec& k) {
        py::gil_scoped_release release;
        CollisionOutput q = q_eps(f, k);
        py::gil_scoped_acquire acquire;
        return collision_dict(q, f.grid().n());
      },
      py::arg("f"), py::arg("kernel"));

  m.def("fd_entropy", &fd_entropy, py::arg("f"));
  m.def("relative_entropy", py::overload_cast<const DistributionField&>(&relative_entropy), py::arg("f"));
  m.def("entropy_production", &entropy_production, py::arg("f"), py::arg("kernel"),
        py::call_guard<py::gil_scoped_release>());

  m.def("normalize_config", [](const std::string& text) { return serialize(parse_config(text)); }, py::arg("text"));
  m.def(
      "simulate",
      [](const std::string& text) {
        const SimConfig cfg = sim_config(text);
        TimeSeries ts;
        {
          py::gil_scoped_release release;
          ts = run(cfg);
        }
        return series_dict(ts);
      },
      py::arg("config"));
  m.def(
      "verify",
      [](const std::string& text) {
        const SimConfig cfg = sim_config(text);
        std::vector<Verdict> verdicts;
        {
          py::gil_scoped_release release;
          verdicts = verify_run(cfg);
        }
        py::list out;
        for (const auto& v : verdicts) out.append(verdict_dict(v));
        return out;
      },
      py::arg("config"));
}
