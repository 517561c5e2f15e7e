#include <doctest.h>

#include <cmath>

#include "pintadj/model/linear_scalar.hpp"
#include "pintadj/model/vdp_advdiff.hpp"
#include "pintadj/oracles.hpp"

using namespace pintadj;

TEST_CASE("sequential forward with a single step")
{
    const model::LinearScalarApp app(0.5, 1.0, 2, 2.0, 1.0);
    const auto r = oracles::sequential_forward(app, TimeGridSpec::uniform(0.0, 1.0, 1), Design{3.0});
    REQUIRE(r.trajectory.size() == 2);
    CHECK(r.trajectory[0][0] == 2.0);
    CHECK(r.trajectory[1][0] == 4.0);
    CHECK(r.objective == 16.0);
}

TEST_CASE("sequential forward of a linear scalar trajectory")
{
    const model::LinearScalarApp app(0.5, 0.0, 2);
    const auto r = oracles::sequential_forward(app, TimeGridSpec::uniform(0.0, 1.0, 4), Design{0.0});
    const std::vector<double> expected{1.0, 0.5, 0.25, 0.125, 0.0625};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(r.trajectory[i][0] == expected[i]);
    }
}

TEST_CASE("sequential adjoint reproduces a gradient computed by hand")
{
    // u = 1.5, 1.75, 1.875, 1.9375 and du/drho = 1, 1.5, 1.75, 1.875
    const model::LinearScalarApp app(0.5, 1.0, 2, 1.0, 1.0);
    const auto grid = TimeGridSpec::uniform(0.0, 1.0, 4);
    const auto fwd = oracles::sequential_forward(app, grid, Design{1.0});
    CHECK(fwd.objective == 12.58203125);
    const auto adj = oracles::sequential_adjoint(app, grid, Design{1.0}, fwd);
    CHECK(adj.gradient[0] == 22.078125);
    CHECK(adj.adjoint.size() == 5);
    CHECK(adj.adjoint[4][0] == doctest::Approx(2.0 * 1.9375));
}

TEST_CASE("zero objective weight gives a zero gradient")
{
    const model::LinearScalarApp app(0.5, 1.0, 2, 1.0, 0.0);
    const auto adj = oracles::sequential_adjoint(app, TimeGridSpec::uniform(0.0, 1.0, 6), Design{1.0});
    CHECK(adj.gradient[0] == 0.0);
}

TEST_CASE("finite differences of a quadratic objective")
{
    // a = 0, b = 1, u0 = 0: u1 = rho and J = rho^2
    const model::LinearScalarApp app(0.0, 1.0, 2, 0.0, 1.0);
    const auto grid = TimeGridSpec::uniform(0.0, 1.0, 1);
    oracles::FDSpec fd;
    fd.epsilon = 1e-4;
    fd.scheme = oracles::FDScheme::Forward;
    CHECK(oracles::finite_difference_gradient(app, grid, Design{3.0}, fd) == doctest::Approx(6.0 + 1e-4));
    fd.scheme = oracles::FDScheme::Central;
    CHECK(oracles::finite_difference_gradient(app, grid, Design{3.0}, fd) == doctest::Approx(6.0).epsilon(1e-9));

    fd.epsilon = 0.0;
    CHECK_THROWS_AS(oracles::finite_difference_gradient(app, grid, Design{3.0}, fd), ConfigError);
    fd.epsilon = 1e-4;
    fd.direction = 1;
    CHECK_THROWS_AS(oracles::finite_difference_gradient(app, grid, Design{3.0}, fd), ConfigError);
}

TEST_CASE("central and forward differences agree with the adjoint on the model")
{
    model::ModelConfig mc;
    mc.n_steps = 600;
    const model::VdpAdvDiff app(mc);
    const auto grid = mc.time_grid();
    const Design design{2.0};
    const double adjoint = oracles::sequential_adjoint(app, grid, design).gradient[0];
    oracles::FDSpec fd;
    fd.epsilon = 1e-6;
    const double forward = oracles::finite_difference_gradient(app, grid, design, fd);
    fd.scheme = oracles::FDScheme::Central;
    const double central = oracles::finite_difference_gradient(app, grid, design, fd);
    CHECK(std::abs(forward - central) <= 1e-4 * std::abs(central));
    CHECK(std::abs(adjoint - central) <= 1e-5 * std::abs(central));
}

TEST_CASE("dot-product check arithmetic")
{
    oracles::DotProductCheck c{2.0, 2.0 + 2e-9};
    CHECK(c.relative_error() == doctest::Approx(1e-9).epsilon(1e-6));
    const auto tail = oracles::flatten_tail({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
    CHECK(tail == Vector{3.0, 4.0, 5.0, 6.0});
}
