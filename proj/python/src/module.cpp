#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "relaxbsde/adjoint.hpp"
#include "relaxbsde/chattering.hpp"
#include "relaxbsde/cli.hpp"
#include "relaxbsde/error.hpp"
#include "relaxbsde/parallel.hpp"
#include "relaxbsde/registry.hpp"
#include "relaxbsde/verify.hpp"

namespace py = pybind11;
using namespace relaxbsde;

namespace {

py::array_t<double> as_array(const std::vector<double>& v, std::vector<py::ssize_t> shape) {
  py::array_t<double> out(shape);
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ProblemSpec problem(const std::string& name, int steps, double horizon, const std::optional<std::vector<double>>& grid) {
  std::optional<ControlGrid> g;
  if (grid) g = ControlGrid::scalar(*grid);
  return make_builtin(name, TimeGrid{horizon, steps}, g);
}

// Weights as a K x m array; a 1-D integer sequence is a strict schedule.
RelaxedControlSchedule schedule_from(const ProblemSpec& spec, const py::object& control) {
  const std::size_t K = spec.time.steps, m = spec.grid.size();
  if (control.is_none()) return dirac_embed(StrictControlSchedule::constant(K, 0, m));
  if (py::isinstance<py::str>(control)) {
    const auto s = cli::parse_control(control.cast<std::string>(), spec);
    if (const auto* v = std::get_if<StrictControlSchedule>(&s)) return dirac_embed(*v);
    return std::get<RelaxedControlSchedule>(s);
  }
  const auto arr = py::array::ensure(control);
  if (!arr) throw ConfigError("control must be a string, an index sequence or a K x m weight array");
  if (arr.ndim() == 1) return dirac_embed(StrictControlSchedule(control.cast<std::vector<std::size_t>>(), m));
  const auto w = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(control);
  if (w.ndim() != 2 || static_cast<std::size_t>(w.shape(0)) != K || static_cast<std::size_t>(w.shape(1)) != m)
    throw ConfigError("weight array must have shape (steps, grid size)");
  return RelaxedControlSchedule(K, m, std::vector<double>(w.data(), w.data() + w.size()));
}

py::array_t<double> schedule_array(const RelaxedControlSchedule& s) {
  return as_array(s.weights(), {static_cast<py::ssize_t>(s.steps()), static_cast<py::ssize_t>(s.grid_size())});
}

py::dict cost_dict(const CostEstimate& c) {
  py::dict d;
  d["mean"] = c.mean;
  d["std_error"] = c.std_error;
  d["paths"] = c.paths;
  return d;
}

py::dict gap_dict(const GapReport& g) {
  py::dict d;
  d["total_gap"] = g.total_gap;
  d["std_error"] = g.std_error;
  d["per_step"] = g.per_step_gap;
  d["argmax"] = g.argmax_indices;
  return d;
}

}  // namespace

PYBIND11_MODULE(_relaxbsde, m) {
  m.doc() = "Relaxed and strict control of backward SDEs";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  m.def("list_problems", [] {
    std::vector<std::string> names;
    for (const auto& p : builtin_problems()) names.push_back(p.name);
    return names;
  });
  m.def("set_workers", &set_worker_count, py::arg("workers"));

  m.def(
      "generate_paths",
      [](std::uint64_t seed, std::size_t n, int steps, double horizon) {
        const auto b = generate_paths(seed, n, TimeGrid{horizon, steps}, 1);
        return as_array(b.raw_increments(), {static_cast<py::ssize_t>(n), steps});
      },
      py::arg("seed"), py::arg("paths"), py::arg("steps"), py::arg("horizon") = 1.0,
      "Brownian increments, shape (paths, steps).");

  m.def(
      "solve",
      [](const std::string& name, const py::object& control, std::uint64_t seed, std::size_t paths, int steps,
         int degree, std::optional<std::vector<double>> grid) {
        const auto spec = problem(name, steps, 1.0, grid);
        const auto mu = schedule_from(spec, control);
        const auto bundle = generate_paths(seed, paths, spec.time, spec.d);
        std::optional<TrajectoryBundle> solved;
        AdjointBundle adj;
        {
          py::gil_scoped_release release;
          solved.emplace(solve_bsde(spec, mu, bundle, RegressionBasis{degree}));
          adj = solve_adjoint(spec, mu, *solved, bundle);
        }
        const auto& traj = *solved;
        py::dict d;
        d["cost"] = cost_dict(evaluate_cost(spec, mu, traj));
        d["y"] = as_array(traj.y, {steps + 1, static_cast<py::ssize_t>(paths)});
        d["z"] = as_array(traj.z, {steps, static_cast<py::ssize_t>(paths)});
        d["p"] = as_array(adj.p, {steps + 1, static_cast<py::ssize_t>(paths)});
        d["gap"] = gap_dict(hamiltonian_gap(spec, mu, traj, adj));
        return d;
      },
      py::arg("problem"), py::arg("control") = py::none(), py::arg("seed") = 7, py::arg("paths") = 16384,
      py::arg("steps") = 64, py::arg("basis_degree") = 2, py::arg("grid") = py::none(),
      "Solve state and adjoint under a control; y, z and p are step-major (steps, paths).");

  m.def(
      "optimize",
      [](const std::string& name, const py::object& init, std::uint64_t seed, std::size_t paths, int steps,
         int max_iters, double gap_tol, const std::string& step_rule, std::optional<std::vector<double>> grid) {
        const auto spec = problem(name, steps, 1.0, grid);
        const auto mu = schedule_from(spec, init);
        OptimizerOptions opts;
        opts.max_iters = max_iters;
        opts.gap_tol = gap_tol;
        opts.step_rule = parse_step_rule(step_rule);
        opts.paths = {seed, paths, RegressionBasis{2}};
        std::optional<OptimizationResult> res;
        {
          py::gil_scoped_release release;
          res.emplace(optimize(spec, mu, opts));
        }
        py::list log;
        for (const auto& r : res->log) log.append(py::make_tuple(r.iter, r.cost, r.cost_se, r.gap, r.theta));
        py::dict d;
        d["schedule"] = schedule_array(res->schedule);
        d["converged"] = res->converged;
        d["cost"] = cost_dict(res->final_cost);
        d["gap"] = gap_dict(res->final_gap);
        d["log"] = log;
        d["bsde_solves"] = res->bsde_solves;
        return d;
      },
      py::arg("problem"), py::arg("init") = py::none(), py::arg("seed") = 7, py::arg("paths") = 16384,
      py::arg("steps") = 64, py::arg("max_iters") = 50, py::arg("gap_tol") = 0.01,
      py::arg("step_rule") = "backtracking", py::arg("grid") = py::none());

  m.def(
      "chatter",
      [](const std::string& name, const py::object& control, std::vector<std::size_t> refinements, std::uint64_t seed,
         std::size_t paths, int steps) {
        const auto spec = problem(name, steps, 1.0, std::nullopt);
        const auto mu = schedule_from(spec, control.is_none() ? py::str("uniform") : control);
        std::vector<ChatterResult> res;
        {
          py::gil_scoped_release release;
          res = compare_values(spec, mu, refinements, PathsConfig{seed, paths, RegressionBasis{2}});
        }
        py::list out;
        for (const auto& r : res) {
          py::dict d;
          d["r"] = r.refinement;
          d["strict"] = r.strict.indices();
          d["J_strict"] = cost_dict(r.j_strict);
          d["J_relaxed"] = cost_dict(r.j_relaxed);
          d["abs_gap"] = r.abs_gap;
          out.append(d);
        }
        return out;
      },
      py::arg("problem"), py::arg("control") = py::none(),
      py::arg("refinements") = std::vector<std::size_t>{1, 2, 4, 8, 16}, py::arg("seed") = 7,
      py::arg("paths") = 16384, py::arg("steps") = 64);

  m.def(
      "verify",
      [](const std::string& name, const py::object& control, std::optional<double> tol, std::uint64_t seed,
         std::size_t paths, int steps) {
        const auto spec = problem(name, steps, 1.0, std::nullopt);
        const auto mu = schedule_from(spec, control);
        const PathsConfig pc{seed, paths, RegressionBasis{2}};
        std::optional<Certificate> cert;
        {
          py::gil_scoped_release release;
          cert.emplace(mu.is_dirac() ? check_necessary(spec, StrictControlSchedule(mu.argmax_indices(), mu.grid_size()), tol, pc)
                                     : check_necessary(spec, mu, tol, pc));
        }
        py::dict d;
        d["kind"] = to_string(cert->kind);
        d["passed"] = cert->passed;
        d["total_gap"] = cert->total_gap;
        d["tol"] = cert->tol;
        d["worst_steps"] = cert->worst_steps;
        d["cost"] = cost_dict(cert->cost);
        return d;
      },
      py::arg("problem"), py::arg("control") = py::none(), py::arg("tol") = py::none(), py::arg("seed") = 7,
      py::arg("paths") = 16384, py::arg("steps") = 64);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command-line interface; returns (exit code, stdout, stderr).");
}
