#include <doctest.h>

#include <cstring>
#include <numeric>
#include <stdexcept>

#include "pintadj/app.hpp"
#include "pintadj/parallel.hpp"

using namespace pintadj;

TEST_CASE("partition sizes")
{
    const auto p = partition(17, 4);
    REQUIRE(p.size() == 4);
    CHECK(p[0].size() == 5);
    CHECK(p[1].size() == 4);
    CHECK(p[2].size() == 4);
    CHECK(p[3].size() == 4);
    CHECK(p[0].begin == 0);
    CHECK(p[3].end == 17);
    for (std::size_t r = 1; r < p.size(); ++r) {
        CHECK(p[r].begin == p[r - 1].end);
    }

    const auto one = partition(101, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].begin == 0);
    CHECK(one[0].end == 101);

    CHECK_THROWS_AS(partition(8, 9), ConfigError);
    CHECK_THROWS_AS(partition(8, 0), ConfigError);
}

TEST_CASE("coarse ownership follows fine ownership")
{
    const auto h = build_hierarchy(TimeGridSpec::uniform(0.0, 1.0, 64), 4, 3);
    const Partition part(h, 5);
    for (int l = 0; l < h.num_levels(); ++l) {
        Index covered = 0;
        for (int r = 0; r < 5; ++r) {
            const auto& range = part.range(l, r);
            covered += range.size();
            for (Index i = range.begin; i < range.end; ++i) {
                CHECK(part.owner(l, i) == r);
                CHECK(part.owner(0, h.fine_index(l, i)) == r);
            }
        }
        CHECK(covered == h.points(l));
    }
}

TEST_CASE("reduce_deterministic sums in rank order")
{
    std::vector<std::vector<double>> parts{{1.0}, {2.0}, {3.0}};
    CHECK(reduce_deterministic(parts, 1) == std::vector<double>{6.0});

    std::vector<std::vector<double>> rows{{1.0, 10.0, 2.0, 20.0}, {}, {3.0, 30.0}};
    CHECK(reduce_deterministic(rows, 2) == std::vector<double>{6.0, 60.0});
}

TEST_CASE("all_reduce is independent of arrival order")
{
    for (int w : {1, 2, 3, 4}) {
        std::vector<double> result(static_cast<std::size_t>(w));
        run_workers(w, [&](Endpoint ep) {
            std::vector<double> terms;
            for (int k = 0; k <= ep.rank(); ++k) {
                terms.push_back(0.1 * (ep.rank() + 1));
            }
            result[static_cast<std::size_t>(ep.rank())] = ep.all_reduce(terms, 1)[0];
        });
        double expected = 0.0;
        for (int r = 0; r < w; ++r) {
            for (int k = 0; k <= r; ++k) {
                expected += 0.1 * (r + 1);
            }
        }
        for (double v : result) {
            CHECK(v == expected);
        }
    }
}

TEST_CASE("pack and unpack round trip bit-exactly")
{
    struct Plain : App {
        Vector init(double) const override { return {}; }
        Vector step(const Vector& u, const StepInfo&, const Design&) const override { return u; }
    } app;
    const Vector u{1.0 / 3.0, -0.0, 1e-308, 6.02214076e23};
    const Vector back = app.unpack(app.pack(u));
    REQUIRE(back.size() == u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(std::memcmp(&back[k], &u[k], sizeof(double)) == 0);
    }
}

TEST_CASE("forward then reverse boundary exchange")
{
    Buffer received_adjoint;
    run_workers(2, [&](Endpoint ep) {
        auto& comm = ep.comm();
        if (ep.rank() == 0) {
            comm.exchange_boundary(Direction::Forward, 0, Buffer{std::byte{1}, std::byte{2}});
            received_adjoint = comm.receive_boundary(Direction::Reverse, 0);
        } else {
            Buffer state = comm.receive_boundary(Direction::Forward, 1);
            CHECK(state == Buffer{std::byte{1}, std::byte{2}});
            comm.exchange_boundary(Direction::Reverse, 1, Buffer{std::byte{7}});
        }
    });
    CHECK(received_adjoint == Buffer{std::byte{7}});
}

TEST_CASE("worker failure surfaces without deadlock")
{
    CHECK_THROWS_WITH_AS(run_workers(3,
                                     [](Endpoint ep) {
                                         if (ep.rank() == 1) {
                                             throw std::runtime_error("boom");
                                         }
                                         // would block forever without the abort
                                         ep.recv(1);
                                     }),
                         "boom", std::runtime_error);
}
