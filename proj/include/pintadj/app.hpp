#pragma once

#include "pintadj/core.hpp"

namespace pintadj {

/// Where a step sits in the hierarchy. `index` is the target point on `level`;
/// the step maps the state at index-1 to index with that level's spacing `dt`.
struct StepInfo {
    int level = 0;
    Index index = 1;
    double t_prev = 0.0;
    double t_next = 0.0;
    double dt = 0.0;
};

/// The user side of the solver. Everything the solver does to a state goes
/// through these hooks, which is what lets the adjoint replay them in reverse.
///
/// States are flat vectors. clone/sum/norm/pack/unpack have Euclidean defaults
/// and only need overriding when an application wants a different norm or wire
/// format. The two adjoint hooks accumulate into their outputs and must never
/// overwrite them.
class App {
public:
    virtual ~App() = default;

    /// Initial guess at time t. The value at the first grid point is the initial condition.
    virtual Vector init(double t) const = 0;

    /// u^i = Phi^i(u^{i-1}, design).
    virtual Vector step(const Vector& u_prev, const StepInfo& info, const Design& design) const = 0;

    /// Objective contribution of the finest-grid state at `index`.
    virtual double access(const Vector& u, Index index, const Design& design) const;

    /// bar_prev += (dPhi/du_prev)^T bar_next, bar_design += (dPhi/ddesign)^T bar_next.
    virtual void step_adjoint(const Vector& u_prev, const StepInfo& info, const Design& design,
                              const Vector& bar_next, Vector& bar_prev, Vector& bar_design) const;

    /// bar_u += bar_objective * grad_u f, bar_design += bar_objective * grad_design f.
    virtual void access_adjoint(const Vector& u, Index index, const Design& design, double bar_objective,
                                Vector& bar_u, Vector& bar_design) const;

    virtual Vector clone(const Vector& u) const { return u; }

    /// v = alpha * u + beta * v
    virtual void sum(double alpha, const Vector& u, double beta, Vector& v) const;

    virtual double norm(const Vector& u) const;

    virtual Buffer pack(const Vector& u) const;
    virtual Vector unpack(const Buffer& buffer) const;
};

}  // namespace pintadj
