#include "pintadj/model/linear_scalar.hpp"

namespace pintadj::model {

LinearScalarApp::LinearScalarApp(double a, double b, Index m, double u0, double weight)
    : a_(a), b_(b), m_(m), u0_(u0), weight_(weight)
{
    if (m < 2) {
        throw ConfigError("coarsening factor must be at least 2");
    }
}

std::pair<double, double> LinearScalarApp::coefficients(int level) const
{
    Index steps = 1;
    for (int l = 0; l < level; ++l) {
        steps *= m_;
    }
    double al = 1.0;
    double bl = 0.0;
    for (Index s = 0; s < steps; ++s) {
        bl += al * b_;
        al *= a_;
    }
    return {al, bl};
}

Vector LinearScalarApp::init(double /*t*/) const
{
    return Vector{u0_};
}

Vector LinearScalarApp::step(const Vector& u_prev, const StepInfo& info, const Design& design) const
{
    const auto [al, bl] = coefficients(info.level);
    const double rho = design.size() > 0 ? design[0] : 0.0;
    return Vector{al * u_prev[0] + rho * bl};
}

double LinearScalarApp::access(const Vector& u, Index /*index*/, const Design& /*design*/) const
{
    return weight_ * u[0] * u[0];
}

void LinearScalarApp::step_adjoint(const Vector& /*u_prev*/, const StepInfo& info, const Design& design,
                                   const Vector& bar_next, Vector& bar_prev, Vector& bar_design) const
{
    const auto [al, bl] = coefficients(info.level);
    bar_prev[0] += al * bar_next[0];
    if (design.size() > 0) {
        bar_design[0] += bl * bar_next[0];
    }
}

void LinearScalarApp::access_adjoint(const Vector& u, Index /*index*/, const Design& /*design*/,
                                     double bar_objective, Vector& bar_u, Vector& /*bar_design*/) const
{
    bar_u[0] += bar_objective * 2.0 * weight_ * u[0];
}

}  // namespace pintadj::model
