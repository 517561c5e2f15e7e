#pragma once

#include <vector>

#include "pintadj/app.hpp"
#include "pintadj/grid_hierarchy.hpp"
#include "pintadj/solver.hpp"

/// Time-serial reference computations. They call the application hooks directly
/// and share nothing else with the parallel solver.
namespace pintadj::oracles {

struct ForwardResult {
    std::vector<Vector> trajectory;  // points 0..N
    double objective = 0.0;
};

/// u^i = Phi(u^{i-1}) for i = 1..N from init(t_0); J = sum_{i>=1} f(u^i).
ForwardResult sequential_forward(const App& app, const TimeGridSpec& grid, const Design& design);

struct AdjointResult {
    Vector gradient;
    /// Adjoint of every trajectory point, 0..N.
    std::vector<Vector> adjoint;
};

/// Backward sweep i = N..1: access_adjoint at u^i, then step_adjoint to u^{i-1}.
AdjointResult sequential_adjoint(const App& app, const TimeGridSpec& grid, const Design& design,
                                 const ForwardResult& forward);
AdjointResult sequential_adjoint(const App& app, const TimeGridSpec& grid, const Design& design);

enum class FDScheme { Forward, Central };

struct FDSpec {
    double epsilon = 1e-6;
    FDScheme scheme = FDScheme::Forward;
    /// Design component e_j to perturb.
    std::size_t direction = 0;

    void validate(std::size_t design_dim) const;
};

/// Difference quotient of the sequential objective along e_direction.
double finite_difference_gradient(const App& app, const TimeGridSpec& grid, const Design& design,
                                  const FDSpec& fd);

/// Row-major matrix of d H(u)^i / d u^j over points 1..N, flattened by point then
/// component, from central differences of one MGRIT iteration.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

DenseMatrix dense_iteration_jacobian(const Solver& solver, const SpaceTimeState& state, const Design& design,
                                     double epsilon = 1e-6);

struct DotProductCheck {
    double forward = 0.0;  // bar^T (F(x + eps d) - F(x - eps d)) / (2 eps)
    double reverse = 0.0;  // d^T (adjoint of bar)
    double relative_error() const;
};

/// Transpose test of one step: central difference of `step` against `step_adjoint`.
DotProductCheck step_dot_product(const App& app, const Vector& u, const StepInfo& info, const Design& design,
                                 const Vector& direction, const Vector& seed, double epsilon = 1e-6);

/// Transpose test of one whole V-cycle with the objective seed switched off.
/// `direction` and `seed` cover points 0..N; point 0 of both is ignored.
DotProductCheck iteration_dot_product(const Solver& solver, const SpaceTimeState& state, const Design& design,
                                      const std::vector<Vector>& direction, const std::vector<Vector>& seed,
                                      double epsilon = 1e-6);

/// Flattens points 1..N of a space-time vector.
Vector flatten_tail(const std::vector<Vector>& v);

}  // namespace pintadj::oracles
