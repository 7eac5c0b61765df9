#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ctrap/abm.hpp"
#include "ctrap/analysis.hpp"
#include "ctrap/meanfield.hpp"
#include "ctrap/numerics.hpp"
#include "ctrap/strategy.hpp"

namespace py = pybind11;
using namespace ctrap;

namespace {

py::dict fit_dict(const FitResult& fit) {
  py::dict d;
  d["coefficients"] = fit.coefficients;
  d["std_errors"] = fit.std_errors;
  d["t_stats"] = fit.t_stats;
  d["p_values"] = fit.p_values;
  d["r_squared"] = fit.r_squared;
  d["n_obs"] = fit.n_obs;
  return d;
}

std::optional<double> opt_value(const std::optional<Probability>& p) {
  return p ? std::optional<double>(p->value()) : std::nullopt;
}

}  // namespace

PYBIND11_MODULE(ctrap, m) {
  m.doc() = "Contagious-disruption economy: best responses, mean-field dynamics, agent-based ensembles.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<double, double, double>(), py::arg("alpha"), py::arg("beta"), py::arg("eps") = 0.0)
      .def_property_readonly("alpha", &ModelParams::alpha)
      .def_property_readonly("beta", &ModelParams::beta)
      .def_property_readonly("eps", &ModelParams::eps)
      .def("max_inputs", &ModelParams::max_inputs)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(alpha=" + std::to_string(p.alpha()) + ", beta=" + std::to_string(p.beta()) +
               ", eps=" + std::to_string(p.eps()) + ")";
      });

  py::class_<Strategy>(m, "Strategy")
      .def(py::init<int, int>(), py::arg("m"), py::arg("tau"))
      .def_readonly("m", &Strategy::m)
      .def_readonly("tau", &Strategy::tau)
      .def_property_readonly("buffer", &Strategy::buffer)
      .def(py::self == py::self)
      .def("__hash__", [](const Strategy& s) { return py::hash(py::make_tuple(s.m, s.tau)); })
      .def("__iter__", [](const Strategy& s) { return py::iter(py::make_tuple(s.m, s.tau)); })
      .def("__repr__", [](const Strategy& s) { return "Strategy" + to_string(s); });

  m.def("binomial_tail", [](int mm, int tau, double f) { return binomial_tail(mm, tau, Probability(f)).value(); },
        py::arg("m"), py::arg("tau"), py::arg("f"));
  m.def("lambert_w0", &lambert_w0, py::arg("x"));
  m.def("student_t_sf", [](double t, int dof) { return student_t_sf(t, dof).value(); }, py::arg("t"), py::arg("dof"));

  m.def("utility", [](const Strategy& s, double f, const ModelParams& p) { return utility(s, Probability(f), p); },
        py::arg("strategy"), py::arg("f"), py::arg("params"));
  m.def("best_response", [](const ModelParams& p, double f) { return best_response(p, Probability(f)); },
        py::arg("params"), py::arg("f"));
  m.def("candidate_set", [](const ModelParams& p, double f) { return candidate_set(p, Probability(f)); },
        py::arg("params"), py::arg("f"));
  m.def("analytic_breakpoints", [](const ModelParams& p) {
    const auto b = analytic_breakpoints(p);
    py::dict d;
    d["f_exit_trap"] = b.f_exit_trap.value();
    d["f_11_22"] = opt_value(b.f_11_22);
    d["f_11_21"] = opt_value(b.f_11_21);
    return d;
  }, py::arg("params"));

  m.def("drift", [](const Strategy& s, double f, double eps) { return drift(s, Probability(f), eps); },
        py::arg("strategy"), py::arg("f"), py::arg("eps"));

  m.def("phase_portrait", [](const ModelParams& p, int resolution, int overshoot) {
    py::list rows;
    for (const auto& seg : phase_portrait(p, resolution, overshoot).segments) {
      rows.append(py::make_tuple(seg.f_lo, seg.f_hi, seg.strategy, to_string(seg.drift_sign)));
    }
    return rows;
  }, py::arg("params"), py::arg("resolution") = 1000, py::arg("overshoot") = 0,
     "List of (f_lo, f_hi, strategy, drift_sign) segments.");
  m.def("trap_basin", [](const ModelParams& p, int resolution, int overshoot) {
    return trap_basin(p, resolution, overshoot).f_star.value();
  }, py::arg("params"), py::arg("resolution") = 1000, py::arg("overshoot") = 0);

  m.def("integrate", [](const ModelParams& p, double f0, double t_end, double dt, double commitment) {
    const auto traj = integrate(p, Probability(f0), BestResponsePolicy{commitment}, t_end, dt);
    py::dict d;
    d["t"] = traj.times;
    d["f"] = traj.f_values;
    d["strategies"] = traj.strategies;
    return d;
  }, py::arg("params"), py::arg("f0"), py::arg("t_end"), py::arg("dt") = 1e-3, py::arg("commitment") = 0.0,
     "Best-response mean-field trajectory.");

  m.def("run_replicas", [](const ModelParams& p, int n_agents, double r, double xi, double f0, double t_end,
                           double sample_dt, int replicas, std::uint64_t seed, int threads) {
    AbmConfig c;
    c.n_agents = n_agents;
    c.params = p;
    c.r = r;
    c.xi = xi;
    c.f0 = Probability(f0);
    c.t_end = t_end;
    c.sample_dt = sample_dt;
    c.seed = seed;
    EnsembleSummary s;
    {
      py::gil_scoped_release release;
      s = run_replicas(c, replicas, threads);
    }
    py::dict d;
    d["t"] = s.sample_times;
    d["mean_f"] = s.mean_f;
    d["sd_f"] = s.sd_f;
    d["sem_f"] = s.sem_f;
    d["final_f"] = s.final_f_samples;
    return d;
  }, py::arg("params"), py::arg("n_agents"), py::arg("r") = 1.0, py::arg("xi") = 0.0, py::arg("f0") = 0.5,
     py::arg("t_end") = 100.0, py::arg("sample_dt") = 1.0, py::arg("replicas") = 10, py::arg("seed") = 0,
     py::arg("threads") = 1);

  m.def("ols_quadratic", [](const std::vector<double>& x, const std::vector<double>& y) {
    return fit_dict(ols_quadratic(x, y));
  }, py::arg("x"), py::arg("y"));
}
