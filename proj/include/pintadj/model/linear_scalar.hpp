#pragma once

#include <utility>

#include "pintadj/app.hpp"

namespace pintadj::model {

/// Scalar test problem u^i = a u^{i-1} + rho b with objective sum_i weight * (u^i)^2.
///
/// Level l steps with the exact m^l-fold composition of the fine step, so two-level
/// MGRIT is exact after one iteration and closed-form answers are available.
class LinearScalarApp : public App {
public:
    LinearScalarApp(double a, double b, Index m, double u0 = 1.0, double weight = 1.0);

    /// Coefficients (a_l, b_l) of the level-l step.
    std::pair<double, double> coefficients(int level) const;

    Vector init(double t) const override;
    Vector step(const Vector& u_prev, const StepInfo& info, const Design& design) const override;
    double access(const Vector& u, Index index, const Design& design) const override;
    void step_adjoint(const Vector& u_prev, const StepInfo& info, const Design& design, const Vector& bar_next,
                      Vector& bar_prev, Vector& bar_design) const override;
    void access_adjoint(const Vector& u, Index index, const Design& design, double bar_objective, Vector& bar_u,
                        Vector& bar_design) const override;

private:
    double a_;
    double b_;
    Index m_;
    double u0_;
    double weight_;
};

}  // namespace pintadj::model
