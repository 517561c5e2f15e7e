#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>

#include "pintadj/model/vdp_advdiff.hpp"
#include "pintadj/oracles.hpp"
#include "pintadj/piggyback.hpp"
#include "pintadj/solver.hpp"

namespace py = pybind11;
using namespace pintadj;

namespace {

/// Copies points 0..N into an (N+1, dim) array.
py::array_t<double> to_array(const std::vector<Vector>& states)
{
    const auto rows = static_cast<py::ssize_t>(states.size());
    const auto cols = static_cast<py::ssize_t>(states.empty() ? 0 : states.front().size());
    py::array_t<double> out({rows, cols});
    auto view = out.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < rows; ++i) {
        for (py::ssize_t k = 0; k < cols; ++k) {
            view(i, k) = states[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
    }
    return out;
}

template <class T>
void apply_kwargs(T& target, const py::kwargs& kwargs)
{
    py::object self = py::cast(&target, py::return_value_policy::reference);
    for (const auto& [key, value] : kwargs) {
        const auto name = py::cast<std::string>(key);
        if (!py::hasattr(self, name.c_str())) {
            throw py::type_error("unknown option '" + name + "'");
        }
        py::setattr(self, name.c_str(), value);
    }
}

py::dict sequential(const model::ModelConfig& mc, double rho)
{
    const model::VdpAdvDiff app(mc);
    const Design design{rho};
    oracles::ForwardResult fwd;
    oracles::AdjointResult adj;
    {
        py::gil_scoped_release release;
        fwd = oracles::sequential_forward(app, mc.time_grid(), design);
        adj = oracles::sequential_adjoint(app, mc.time_grid(), design, fwd);
    }
    py::dict d;
    d["objective"] = fwd.objective;
    d["gradient"] = adj.gradient[0];
    d["trajectory"] = to_array(fwd.trajectory);
    return d;
}

py::dict mgrit(const model::ModelConfig& mc, const SolverConfig& sc, double rho)
{
    const model::VdpAdvDiff app(mc);
    const Solver solver(app, mc.time_grid(), sc);
    SolveResult r;
    {
        py::gil_scoped_release release;
        r = solver.solve(Design{rho});
    }
    py::dict d;
    d["objective"] = r.objective;
    d["state"] = to_array(r.state);
    d["residual_history"] = r.residual_history;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    d["seconds"] = r.seconds;
    return d;
}

py::dict piggyback(const model::ModelConfig& mc, const SolverConfig& sc, double rho)
{
    const model::VdpAdvDiff app(mc);
    const Solver solver(app, mc.time_grid(), sc);
    PiggybackState s;
    {
        py::gil_scoped_release release;
        s = piggyback_solve(solver, Design{rho});
    }
    py::dict d;
    d["objective"] = s.objective;
    d["gradient"] = s.gradient[0];
    d["state"] = to_array(s.u);
    d["adjoint"] = to_array(s.adjoint);
    d["primal_history"] = s.primal_history;
    d["adjoint_history"] = s.adjoint_history;
    d["iterations"] = s.iterations;
    d["converged"] = s.converged;
    d["seconds"] = s.seconds;
    return d;
}

double finite_difference(const model::ModelConfig& mc, double rho, double epsilon, const std::string& scheme)
{
    if (scheme != "forward" && scheme != "central") {
        throw ConfigError("scheme must be 'forward' or 'central'");
    }
    const model::VdpAdvDiff app(mc);
    oracles::FDSpec fd;
    fd.epsilon = epsilon;
    fd.scheme = scheme == "central" ? oracles::FDScheme::Central : oracles::FDScheme::Forward;
    py::gil_scoped_release release;
    return oracles::finite_difference_gradient(app, mc.time_grid(), Design{rho}, fd);
}

}  // namespace

PYBIND11_MODULE(pintadj, m)
{
    m.doc() = "MGRIT primal and adjoint solver for a Van-der-Pol driven advection-diffusion model";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<StepError>(m, "StepError", PyExc_RuntimeError);

    py::enum_<model::ObjectiveNorm>(m, "ObjectiveNorm")
        .value("Discrete", model::ObjectiveNorm::Discrete)
        .value("Weighted", model::ObjectiveNorm::Weighted);
    py::enum_<model::StepSolver>(m, "StepSolver")
        .value("Functional", model::StepSolver::Functional)
        .value("Newton", model::StepSolver::Newton);
    py::enum_<Relaxation>(m, "Relaxation").value("F", Relaxation::F).value("FCF", Relaxation::FCF);

    py::class_<model::ModelConfig>(m, "ModelConfig")
        .def(py::init([](const py::kwargs& kwargs) {
            model::ModelConfig c;
            apply_kwargs(c, kwargs);
            return c;
        }))
        .def_readwrite("a", &model::ModelConfig::a)
        .def_readwrite("mu", &model::ModelConfig::mu)
        .def_readwrite("dx", &model::ModelConfig::dx)
        .def_readwrite("n", &model::ModelConfig::n)
        .def_readwrite("t_final", &model::ModelConfig::t_final)
        .def_readwrite("n_steps", &model::ModelConfig::n_steps)
        .def_readwrite("step_tol", &model::ModelConfig::step_tol)
        .def_readwrite("step_max_iter", &model::ModelConfig::step_max_iter)
        .def_readwrite("step_solver", &model::ModelConfig::step_solver)
        .def_readwrite("norm", &model::ModelConfig::norm)
        .def_readwrite("z0", &model::ModelConfig::z0)
        .def_readwrite("w0", &model::ModelConfig::w0)
        .def_readwrite("v0", &model::ModelConfig::v0)
        .def("validate", &model::ModelConfig::validate)
        .def_property_readonly("dim", &model::ModelConfig::dim);

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init([](const py::kwargs& kwargs) {
            SolverConfig c;
            apply_kwargs(c, kwargs);
            return c;
        }))
        .def_readwrite("tol", &SolverConfig::tol)
        .def_readwrite("max_iter", &SolverConfig::max_iter)
        .def_readwrite("max_levels", &SolverConfig::max_levels)
        .def_readwrite("coarsening", &SolverConfig::coarsening)
        .def_readwrite("min_coarse_points", &SolverConfig::min_coarse_points)
        .def_readwrite("relaxation", &SolverConfig::relaxation)
        .def_readwrite("workers", &SolverConfig::workers)
        .def("validate", &SolverConfig::validate);

    m.def("sequential", &sequential, py::arg("model"), py::arg("rho"),
          "Serial forward and adjoint sweep: objective, gradient and trajectory.");
    m.def("mgrit", &mgrit, py::arg("model"), py::arg("solver"), py::arg("rho"), "MGRIT solve of the primal.");
    m.def("piggyback", &piggyback, py::arg("model"), py::arg("solver"), py::arg("rho"),
          "Simultaneous primal and adjoint MGRIT iteration.");
    m.def("finite_difference_gradient", &finite_difference, py::arg("model"), py::arg("rho"),
          py::arg("epsilon") = 1e-6, py::arg("scheme") = "forward",
          "Difference quotient of the serial objective.");
}
