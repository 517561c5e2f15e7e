#include "pintadj/piggyback.hpp"

#include <cstdio>
#include <sstream>

namespace pintadj {

PiggybackState piggyback_solve(const Solver& solver, const Design& design)
{
    RunResult r = solver.run(design, true);
    PiggybackState s;
    s.u = std::move(r.state);
    s.adjoint = std::move(r.adjoint);
    s.objective = r.objective;
    s.gradient = std::move(r.gradient);
    s.primal_history = std::move(r.primal_history);
    s.adjoint_history = std::move(r.adjoint_history);
    s.iterations = r.iterations;
    s.converged = r.converged;
    s.seconds = r.seconds;
    return s;
}

GradientReport gradient_report(const PiggybackState& state)
{
    return GradientReport{state.objective,       state.gradient,          state.iterations, state.converged,
                          state.primal_residual(), state.adjoint_residual(), state.seconds};
}

std::string format_number(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.15g", value);
    return buf;
}

std::string GradientReport::to_string() const
{
    std::ostringstream out;
    out << "objective        " << format_number(objective) << '\n';
    for (std::size_t k = 0; k < gradient.size(); ++k) {
        out << "gradient[" << k << "]      " << format_number(gradient[k]) << '\n';
    }
    out << "iterations       " << iterations << (converged ? " (converged)" : " (not converged)") << '\n';
    out << "primal residual  " << format_number(primal_residual) << '\n';
    out << "adjoint residual " << format_number(adjoint_residual) << '\n';
    out << "wall time [s]    " << format_number(seconds) << '\n';
    return out.str();
}

}  // namespace pintadj
