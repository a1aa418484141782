#include <cmath>
#include <vector>

#include "doctest.h"

#include "agestruct/errors.hpp"
#include "agestruct/grid.hpp"

using namespace agestruct;

TEST_SUITE("grid") {

TEST_CASE("age grid spacing and pinned last node") {
    const AgeGrid g(10.0, 500);
    CHECK(g.spacing() == doctest::Approx(10.0 / 499));
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(g.last()) == 10.0);
    CHECK(g.nodes().size() == 500);
    CHECK_THROWS_AS(AgeGrid(10.0, 1), DomainError);
    CHECK_THROWS_AS(AgeGrid(-1.0, 10), DomainError);
}

TEST_CASE("time grid enforces the CFL bound") {
    const AgeGrid g(10.0, 11);
    const TimeGrid ok(10.0, 10, g);
    CHECK(ok.dt() == doctest::Approx(1.0));
    CHECK(ok.weight(0) == doctest::Approx(0.5));
    CHECK(ok.weight(5) == doctest::Approx(1.0));
    CHECK(ok.weight(10) == doctest::Approx(0.5));
    CHECK(ok.time(10) == 10.0);
    try {
        TimeGrid bad(10.0, 9, g);
        FAIL("expected a CFL violation");
    } catch (const DomainError& e) {
        CHECK(e.field() == "time_grid");
    }
}

TEST_CASE("trapezoid is exact for linear integrands") {
    const AgeGrid g(4.0, 9);
    const Profile f = Profile::from_function(g, [](double a) { return 2.0 * a + 1.0; });
    CHECK(trapezoid(f) == doctest::Approx(20.0).epsilon(1e-14));
    const Profile F = cumulative_integral(f);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = g.node(i);
        CHECK(F[i] == doctest::Approx(a * a + a).epsilon(1e-14));
    }
}

TEST_CASE("trapezoid converges at second order") {
    auto err = [](std::size_t n) {
        const AgeGrid g(1.0, n);
        return std::abs(trapezoid(Profile::from_function(g, [](double a) { return std::exp(a); })) - (std::exp(1.0) - 1.0));
    };
    CHECK(err(11) / err(21) == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("interpolation is linear inside and constant outside") {
    const std::vector<double> xs{0.0, 1.0, 3.0}, ys{1.0, 3.0, -1.0};
    CHECK(interpolate(xs, ys, 0.5) == doctest::Approx(2.0));
    CHECK(interpolate(xs, ys, 2.0) == doctest::Approx(1.0));
    CHECK(interpolate(xs, ys, -5.0) == 1.0);
    CHECK(interpolate(xs, ys, 9.0) == -1.0);
}

TEST_CASE("field rows and grid equality") {
    const AgeGrid g(10.0, 11);
    const TimeGrid t(10.0, 10, g);
    Field2D f(t, g, 2.0);
    f(3, 4) = 7.0;
    CHECK(f.row(3)[4] == 7.0);
    CHECK(f.row_profile(3)[4] == 7.0);
    CHECK(f.same_grids(Field2D(t, g)));
    CHECK_FALSE(f.same_grids(Field2D(TimeGrid(5.0, 10, g), g)));
}

}
