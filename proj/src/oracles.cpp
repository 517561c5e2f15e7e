#include "pintadj/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pintadj::oracles {

namespace {

StepInfo fine_step(const TimeGridSpec& grid, Index i)
{
    const double t_prev = grid.t_start + static_cast<double>(i - 1) * grid.dt;
    const double t_next = i == grid.n_steps ? grid.t_final : grid.t_start + static_cast<double>(i) * grid.dt;
    return StepInfo{0, i, t_prev, t_next, grid.dt};
}

}  // namespace

ForwardResult sequential_forward(const App& app, const TimeGridSpec& grid, const Design& design)
{
    ForwardResult r;
    r.trajectory.reserve(static_cast<std::size_t>(grid.points()));
    r.trajectory.push_back(app.init(grid.t_start));
    for (Index i = 1; i <= grid.n_steps; ++i) {
        r.trajectory.push_back(app.step(r.trajectory.back(), fine_step(grid, i), design));
        r.objective += app.access(r.trajectory.back(), i, design);
    }
    return r;
}

AdjointResult sequential_adjoint(const App& app, const TimeGridSpec& grid, const Design& design,
                                 const ForwardResult& forward)
{
    if (forward.trajectory.size() != static_cast<std::size_t>(grid.points())) {
        throw ConfigError("forward trajectory does not match the time grid");
    }
    AdjointResult r;
    r.gradient.assign(design.size(), 0.0);
    r.adjoint.resize(forward.trajectory.size());
    const auto n = static_cast<std::size_t>(grid.n_steps);
    Vector bar(forward.trajectory[n].size(), 0.0);
    for (Index i = grid.n_steps; i >= 1; --i) {
        const auto k = static_cast<std::size_t>(i);
        app.access_adjoint(forward.trajectory[k], i, design, 1.0, bar, r.gradient);
        r.adjoint[k] = bar;
        Vector prev(forward.trajectory[k - 1].size(), 0.0);
        app.step_adjoint(forward.trajectory[k - 1], fine_step(grid, i), design, bar, prev, r.gradient);
        bar = std::move(prev);
    }
    r.adjoint[0] = bar;
    return r;
}

AdjointResult sequential_adjoint(const App& app, const TimeGridSpec& grid, const Design& design)
{
    return sequential_adjoint(app, grid, design, sequential_forward(app, grid, design));
}

void FDSpec::validate(std::size_t design_dim) const
{
    if (!(epsilon > 0.0)) {
        throw ConfigError("finite-difference epsilon must be positive");
    }
    if (direction >= design_dim) {
        throw ConfigError("finite-difference direction " + std::to_string(direction) + " out of range");
    }
}

double finite_difference_gradient(const App& app, const TimeGridSpec& grid, const Design& design, const FDSpec& fd)
{
    fd.validate(design.size());
    Design plus = design;
    plus[fd.direction] += fd.epsilon;
    const double j_plus = sequential_forward(app, grid, plus).objective;
    if (fd.scheme == FDScheme::Forward) {
        return (j_plus - sequential_forward(app, grid, design).objective) / fd.epsilon;
    }
    Design minus = design;
    minus[fd.direction] -= fd.epsilon;
    return (j_plus - sequential_forward(app, grid, minus).objective) / (2.0 * fd.epsilon);
}

Vector flatten_tail(const std::vector<Vector>& v)
{
    Vector out;
    for (std::size_t i = 1; i < v.size(); ++i) {
        out.insert(out.end(), v[i].begin(), v[i].end());
    }
    return out;
}

DenseMatrix dense_iteration_jacobian(const Solver& solver, const SpaceTimeState& state, const Design& design,
                                     double epsilon)
{
    const std::size_t n = flatten_tail(state).size();
    DenseMatrix m{n, n, std::vector<double>(n * n, 0.0)};
    std::size_t col = 0;
    for (std::size_t i = 1; i < state.size(); ++i) {
        for (std::size_t c = 0; c < state[i].size(); ++c, ++col) {
            SpaceTimeState plus = state;
            SpaceTimeState minus = state;
            plus[i][c] += epsilon;
            minus[i][c] -= epsilon;
            const Vector hp = flatten_tail(solver.mgrit_iteration(plus, design).state);
            const Vector hm = flatten_tail(solver.mgrit_iteration(minus, design).state);
            for (std::size_t r = 0; r < n; ++r) {
                m.data[r * n + col] = (hp[r] - hm[r]) / (2.0 * epsilon);
            }
        }
    }
    return m;
}

double DotProductCheck::relative_error() const
{
    const double scale = std::max(std::abs(forward), std::abs(reverse));
    return scale == 0.0 ? 0.0 : std::abs(forward - reverse) / scale;
}

namespace {

double dot(const Vector& x, const Vector& y)
{
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        s += x[k] * y[k];
    }
    return s;
}

Vector axpy(const Vector& x, double alpha, const Vector& d)
{
    Vector out = x;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] += alpha * d[k];
    }
    return out;
}

}  // namespace

DotProductCheck step_dot_product(const App& app, const Vector& u, const StepInfo& info, const Design& design,
                                 const Vector& direction, const Vector& seed, double epsilon)
{
    const Vector plus = app.step(axpy(u, epsilon, direction), info, design);
    const Vector minus = app.step(axpy(u, -epsilon, direction), info, design);
    DotProductCheck c;
    for (std::size_t k = 0; k < seed.size(); ++k) {
        c.forward += seed[k] * (plus[k] - minus[k]) / (2.0 * epsilon);
    }
    Vector bar_prev(u.size(), 0.0);
    Vector bar_design(design.size(), 0.0);
    app.step_adjoint(u, info, design, seed, bar_prev, bar_design);
    c.reverse = dot(direction, bar_prev);
    return c;
}

DotProductCheck iteration_dot_product(const Solver& solver, const SpaceTimeState& state, const Design& design,
                                      const std::vector<Vector>& direction, const std::vector<Vector>& seed,
                                      double epsilon)
{
    if (direction.size() != state.size() || seed.size() != state.size()) {
        throw ConfigError("direction and seed must cover every time point");
    }
    SpaceTimeState plus = state;
    SpaceTimeState minus = state;
    for (std::size_t i = 1; i < state.size(); ++i) {
        plus[i] = axpy(state[i], epsilon, direction[i]);
        minus[i] = axpy(state[i], -epsilon, direction[i]);
    }
    const Vector hp = flatten_tail(solver.mgrit_iteration(plus, design).state);
    const Vector hm = flatten_tail(solver.mgrit_iteration(minus, design).state);
    const Vector bar = flatten_tail(seed);
    DotProductCheck c;
    for (std::size_t k = 0; k < bar.size(); ++k) {
        c.forward += bar[k] * (hp[k] - hm[k]) / (2.0 * epsilon);
    }
    const auto adj = solver.adjoint_iteration(state, seed, design, 0.0);
    c.reverse = dot(flatten_tail(direction), flatten_tail(adj.adjoint));
    return c;
}

}  // namespace pintadj::oracles
