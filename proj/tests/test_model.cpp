#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pintadj/model/vdp_advdiff.hpp"
#include "pintadj/oracles.hpp"

using namespace pintadj;
using model::ModelConfig;
using model::VdpAdvDiff;

namespace {

Vector random_vector(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(n);
    for (double& x : v) {
        x = dist(rng);
    }
    return v;
}

ModelConfig with_steps(Index n_steps, double t_final)
{
    ModelConfig mc;
    mc.n_steps = n_steps;
    mc.t_final = t_final;
    return mc;
}

/// Classical RK4 on the semi-discrete system.
Vector rk4(const VdpAdvDiff& app, Vector u, double rho, double t_final, int steps)
{
    const double h = t_final / steps;
    auto axpy = [](const Vector& x, double s, const Vector& y) {
        Vector r(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) {
            r[k] = x[k] + s * y[k];
        }
        return r;
    };
    for (int s = 0; s < steps; ++s) {
        const Vector k1 = app.rhs(u, rho);
        const Vector k2 = app.rhs(axpy(u, 0.5 * h, k1), rho);
        const Vector k3 = app.rhs(axpy(u, 0.5 * h, k2), rho);
        const Vector k4 = app.rhs(axpy(u, h, k3), rho);
        for (std::size_t k = 0; k < u.size(); ++k) {
            u[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
    }
    return u;
}

double max_diff(const Vector& a, const Vector& b)
{
    double d = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        d = std::max(d, std::abs(a[k] - b[k]));
    }
    return d;
}

}  // namespace

TEST_CASE("model config validation")
{
    ModelConfig mc;
    CHECK_NOTHROW(mc.validate());
    mc.n = 50;
    CHECK_THROWS_AS(mc.validate(), ConfigError);
    mc = ModelConfig{};
    mc.mu = 0.0;
    CHECK_THROWS_AS(mc.validate(), ConfigError);
    mc = ModelConfig{};
    mc.n_steps = 0;
    CHECK_THROWS_AS(mc.validate(), ConfigError);
    CHECK_THROWS_AS(VdpAdvDiff{mc}, ConfigError);
}

TEST_CASE("a uniform field fed by a matching inflow is steady")
{
    const VdpAdvDiff app(ModelConfig{});
    Vector u(app.config().dim(), 0.7);
    u[1] = -0.3;
    const Vector g = app.rhs(u, 2.0);
    for (std::size_t k = 2; k < g.size(); ++k) {
        CHECK(g[k] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("oscillator right-hand side")
{
    const VdpAdvDiff app(ModelConfig{});
    Vector u(app.config().dim(), 0.0);
    u[0] = 1.0;
    const Vector g = app.rhs(u, 0.0);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == -1.0);

    u[0] = 0.5;
    u[1] = 2.0;
    CHECK(app.rhs(u, 3.0)[1] == doctest::Approx(-0.5 + 3.0 * 0.75 * 2.0));
    CHECK(app.rhs_design_derivative(u)[1] == doctest::Approx(0.75 * 2.0));
}

TEST_CASE("second-order upwind advection is second-order accurate")
{
    std::vector<double> errors;
    for (int n : {50, 100, 200}) {
        ModelConfig mc;
        mc.n = n;
        mc.dx = 1.0 / n;
        mc.mu = 1e-30;
        const VdpAdvDiff app(mc);
        Vector u(mc.dim(), 0.0);
        for (int j = 1; j <= n; ++j) {
            u[static_cast<std::size_t>(j) + 1] = std::sin(2.0 * std::numbers::pi * j * mc.dx);
        }
        const Vector g = app.rhs(u, 0.0);
        double err = 0.0;
        for (int j = 3; j <= n; ++j) {
            const double exact = -2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * j * mc.dx);
            err = std::max(err, std::abs(g[static_cast<std::size_t>(j) + 1] - exact));
        }
        errors.push_back(err);
    }
    CHECK(errors[0] / errors[1] == doctest::Approx(4.0).epsilon(0.1));
    CHECK(errors[1] / errors[2] == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("analytic Jacobian matches finite differences of the right-hand side")
{
    const VdpAdvDiff app(ModelConfig{});
    std::mt19937_64 rng(1);
    Vector u = random_vector(rng, app.config().dim());
    const double rho = 2.5;
    const auto J = app.jacobian(u, rho);
    const double eps = 1e-6;
    for (std::size_t c = 0; c < u.size(); ++c) {
        Vector up = u;
        Vector um = u;
        up[c] += eps;
        um[c] -= eps;
        const Vector gp = app.rhs(up, rho);
        const Vector gm = app.rhs(um, rho);
        for (std::size_t r = 0; r < u.size(); ++r) {
            const double fd = (gp[r] - gm[r]) / (2.0 * eps);
            CHECK(J.at(r, c) == doctest::Approx(fd).epsilon(1e-6).scale(1e3));
        }
    }
}

TEST_CASE("Crank-Nicolson conserves the oscillator invariant at rho = 0")
{
    ModelConfig mc;
    mc.z0 = 1.0;
    mc.w0 = 0.0;
    const VdpAdvDiff app(mc);
    Vector u = app.init(0.0);
    for (double dt : {1e-3, 0.1, 1.0}) {
        const auto s = app.cn_step(u, dt, 0.0);
        CHECK(std::abs(s.u[0] * s.u[0] + s.u[1] * s.u[1] - 1.0) < 10.0 * mc.step_tol);
    }
    for (int i = 0; i < 1000; ++i) {
        u = app.cn_step(u, 0.01, 0.0).u;
    }
    CHECK(std::abs(u[0] * u[0] + u[1] * u[1] - 1.0) < 10.0 * mc.step_tol);
}

TEST_CASE("a vanishing step returns the previous state")
{
    const VdpAdvDiff app(ModelConfig{});
    std::mt19937_64 rng(2);
    const Vector u = random_vector(rng, app.config().dim());
    CHECK(max_diff(app.cn_step(u, 1e-12, 2.0).u, u) < 1e-9);
    CHECK_THROWS_AS(app.cn_step(u, 0.0, 2.0), StepError);
}

TEST_CASE("Crank-Nicolson is second-order accurate in time")
{
    const double t_final = 1.0;
    const double rho = 2.0;
    const VdpAdvDiff ref_app(ModelConfig{});
    const Vector reference = rk4(ref_app, ref_app.init(0.0), rho, t_final, 20000);
    std::vector<double> errors;
    for (Index n : {100, 200, 400}) {
        const VdpAdvDiff app(with_steps(n, t_final));
        const auto fwd = oracles::sequential_forward(app, app.config().time_grid(), Design{rho});
        errors.push_back(max_diff(fwd.trajectory.back(), reference));
    }
    CHECK(errors[0] / errors[1] == doctest::Approx(4.0).epsilon(0.15));
    CHECK(errors[1] / errors[2] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("one oscillator step agrees with a fine reference to third order")
{
    // the stiff field modes are not in the asymptotic range at these steps
    const VdpAdvDiff app(ModelConfig{});
    const Vector u = app.init(0.0);
    std::vector<double> errors;
    for (double dt : {4e-3, 2e-3}) {
        const Vector cn = app.cn_step(u, dt, 2.0).u;
        const Vector ref = rk4(app, u, 2.0, dt, 200);
        errors.push_back(std::max(std::abs(cn[0] - ref[0]), std::abs(cn[1] - ref[1])));
    }
    CHECK(errors[0] / errors[1] == doctest::Approx(8.0).epsilon(0.2));
}

TEST_CASE("functional iteration agrees with Newton where it converges and reports failure elsewhere")
{
    ModelConfig functional;
    functional.step_solver = model::StepSolver::Functional;
    const VdpAdvDiff f_app(functional);
    const VdpAdvDiff n_app(ModelConfig{});
    const Vector u = n_app.init(0.0);
    const auto a = f_app.cn_step(u, 5e-4, 2.0);
    const auto b = n_app.cn_step(u, 5e-4, 2.0);
    CHECK_FALSE(a.newton);
    CHECK(b.newton);
    CHECK(max_diff(a.u, b.u) < 1e-11);

    try {
        f_app.cn_step(u, 8e-3, 2.0, StepInfo{2, 7, 0.0, 8e-3, 8e-3});
        FAIL("expected StepError");
    } catch (const StepError& e) {
        CHECK(e.level() == 2);
        CHECK(e.index() == 7);
        CHECK(e.iterations() > 0);
    }
}

TEST_CASE("step adjoint passes the dot-product test at every level spacing")
{
    const VdpAdvDiff app(ModelConfig{});
    std::mt19937_64 rng(6);
    for (double dt : {5e-4, 2e-3, 8e-3, 0.1}) {
        Vector u = app.init(0.0);
        const Vector noise = random_vector(rng, u.size());
        for (std::size_t k = 0; k < u.size(); ++k) {
            u[k] += 0.1 * noise[k];
        }
        const StepInfo info{0, 1, 0.0, dt, dt};
        const auto c = oracles::step_dot_product(app, u, info, Design{2.0}, random_vector(rng, u.size()),
                                                 random_vector(rng, u.size()));
        CHECK(c.relative_error() < 1e-7);
    }
}

TEST_CASE("step adjoint of the decoupled oscillator is the transposed CN matrix")
{
    const VdpAdvDiff app(ModelConfig{});
    const double dt = 0.2;
    const double h = dt / 2.0;
    const Vector u = app.init(0.0);
    Vector bar_next(u.size(), 0.0);
    bar_next[0] = 0.3;
    bar_next[1] = -1.1;
    Vector bar_prev(u.size(), 0.0);
    Vector bar_design(1, 0.0);
    app.step_adjoint(u, StepInfo{0, 1, 0.0, dt, dt}, Design{0.0}, bar_next, bar_prev, bar_design);
    // M = (I - h S)^{-1} (I + h S), S = [[0, 1], [-1, 0]]
    const double d = 1.0 + h * h;
    const double m00 = (1.0 - h * h) / d;
    const double m01 = 2.0 * h / d;
    const double m10 = -2.0 * h / d;
    const double m11 = (1.0 - h * h) / d;
    CHECK(bar_prev[0] == doctest::Approx(m00 * 0.3 + m10 * -1.1).epsilon(1e-13));
    CHECK(bar_prev[1] == doctest::Approx(m01 * 0.3 + m11 * -1.1).epsilon(1e-13));
    for (std::size_t k = 2; k < u.size(); ++k) {
        CHECK(bar_prev[k] == 0.0);
    }
}

TEST_CASE("step adjoint accumulates and ignores zero seeds")
{
    const VdpAdvDiff app(ModelConfig{});
    std::mt19937_64 rng(8);
    const Vector u = random_vector(rng, app.config().dim());
    const StepInfo info{0, 1, 0.0, 5e-4, 5e-4};
    Vector bar_prev(u.size(), 0.0);
    Vector bar_design(1, 0.0);
    app.step_adjoint(u, info, Design{2.0}, Vector(u.size(), 0.0), bar_prev, bar_design);
    CHECK(max_diff(bar_prev, Vector(u.size(), 0.0)) == 0.0);
    CHECK(bar_design[0] == 0.0);

    const Vector seed = random_vector(rng, u.size());
    Vector once(u.size(), 0.0);
    Vector g1(1, 0.0);
    app.step_adjoint(u, info, Design{2.0}, seed, once, g1);
    Vector twice = once;
    Vector g2 = g1;
    app.step_adjoint(u, info, Design{2.0}, seed, twice, g2);
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(twice[k] == doctest::Approx(2.0 * once[k]));
    }
    CHECK(g2[0] == doctest::Approx(2.0 * g1[0]));
}

TEST_CASE("access and its adjoint")
{
    for (auto norm : {model::ObjectiveNorm::Discrete, model::ObjectiveNorm::Weighted}) {
        ModelConfig mc;
        mc.norm = norm;
        const VdpAdvDiff app(mc);
        const double weight = mc.time_grid().dt / mc.t_final;
        Vector u(mc.dim(), 0.0);
        CHECK(app.access(u, 1, Design{2.0}) == 0.0);
        u[0] = 1.0;
        CHECK(app.access(u, 1, Design{2.0}) == doctest::Approx(weight));
        u[5] = 2.0;
        const double field = norm == model::ObjectiveNorm::Weighted ? mc.dx : 1.0;
        CHECK(app.access(u, 1, Design{2.0}) == doctest::Approx(weight * (1.0 + 4.0 * field)));

        std::mt19937_64 rng(10);
        const Vector x = random_vector(rng, mc.dim());
        const Vector d = random_vector(rng, mc.dim());
        Vector bar(mc.dim(), 0.0);
        Vector bar_design(1, 0.0);
        app.access_adjoint(x, 1, Design{2.0}, 1.5, bar, bar_design);
        Vector xp = x;
        Vector xm = x;
        for (std::size_t k = 0; k < x.size(); ++k) {
            xp[k] += 1e-6 * d[k];
            xm[k] -= 1e-6 * d[k];
        }
        const double fd = 1.5 * (app.access(xp, 1, Design{2.0}) - app.access(xm, 1, Design{2.0})) / 2e-6;
        double rev = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            rev += bar[k] * d[k];
        }
        CHECK(rev == doctest::Approx(fd).epsilon(1e-7));
        CHECK(bar_design[0] == 0.0);
    }
}

TEST_CASE("the objective sum is a first-order quadrature of the time average")
{
    const VdpAdvDiff app(with_steps(600, 30.0));
    const auto fwd = oracles::sequential_forward(app, app.config().time_grid(), Design{2.0});
    const double dt = app.config().time_grid().dt;
    double trapezoid = 0.0;
    const auto n = fwd.trajectory.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double f = app.squared_norm(fwd.trajectory[i]);
        trapezoid += (i == 0 || i + 1 == n ? 0.5 : 1.0) * f;
    }
    trapezoid *= dt / app.config().t_final;
    const double half_ends =
        0.5 * dt / app.config().t_final *
        std::abs(app.squared_norm(fwd.trajectory.back()) - app.squared_norm(fwd.trajectory.front()));
    CHECK(std::abs(fwd.objective - trapezoid) == doctest::Approx(half_ends).epsilon(1e-9));
}
