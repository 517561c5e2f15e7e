#pragma once

#include <string>
#include <vector>

#include "pintadj/solver.hpp"

namespace pintadj {

/// Primal and adjoint iterates advanced in lockstep, starting from the initial
/// guess and a zero adjoint.
struct PiggybackState {
    SpaceTimeState u;
    std::vector<Vector> adjoint;
    double objective = 0.0;
    Vector gradient;
    std::vector<double> primal_history;
    std::vector<double> adjoint_history;
    int iterations = 0;
    bool converged = false;
    double seconds = 0.0;

    double primal_residual() const { return primal_history.empty() ? 0.0 : primal_history.back(); }
    double adjoint_residual() const { return adjoint_history.empty() ? 0.0 : adjoint_history.back(); }
};

/// Each iteration: one taped V-cycle on u_k, then its reverse sweep seeded with the
/// current adjoint. Stops once both residuals are below the solver tolerance.
PiggybackState piggyback_solve(const Solver& solver, const Design& design);

struct GradientReport {
    double objective = 0.0;
    Vector gradient;
    int iterations = 0;
    bool converged = false;
    double primal_residual = 0.0;
    double adjoint_residual = 0.0;
    double seconds = 0.0;

    std::string to_string() const;
};

GradientReport gradient_report(const PiggybackState& state);

/// Formats with 15 significant digits.
std::string format_number(double value);

}  // namespace pintadj
