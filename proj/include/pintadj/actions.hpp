#pragma once

#include "pintadj/app.hpp"
#include "pintadj/parallel.hpp"
#include "pintadj/tape.hpp"

namespace pintadj {

/// A primal state together with its adjoint slot (null when not recording).
struct TrackedVector {
    Vector value;
    SlotPtr bar;
};

/// The solver's only way to touch states. Each call runs the user hook and, when a
/// tape is attached, records itself with its inputs and adjoint slots.
class ActionRecorder {
public:
    ActionRecorder(const App& app, const Design& design, const Endpoint* endpoint = nullptr)
        : app_(&app), design_(&design), endpoint_(endpoint)
    {
    }

    void attach(ActionTape* tape) { tape_ = tape; }
    bool recording() const { return tape_ != nullptr; }
    ActionTape* tape() const { return tape_; }
    const App& app() const { return *app_; }
    const Design& design() const { return *design_; }

    /// Wraps an untracked value, giving it a fresh slot when recording.
    TrackedVector adopt(Vector value) const;

    TrackedVector clone(const TrackedVector& u) const;
    /// v = alpha * u + beta * v, in place on v.
    void sum(double alpha, const TrackedVector& u, double beta, TrackedVector& v) const;
    TrackedVector step(const TrackedVector& u_prev, const StepInfo& info) const;
    double access(const TrackedVector& u, Index index) const;

    void send(const TrackedVector& u, int to, int level, Index index) const;
    TrackedVector recv(int from, int level, Index index) const;

private:
    const App* app_;
    const Design* design_;
    const Endpoint* endpoint_;
    ActionTape* tape_ = nullptr;
};

}  // namespace pintadj
