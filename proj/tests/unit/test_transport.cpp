#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"

#include "agestruct/errors.hpp"
#include "agestruct/presets.hpp"
#include "agestruct/transport.hpp"

using namespace agestruct;
using nlohmann::json;

TEST_SUITE("transport") {

TEST_CASE("dt = spacing follows characteristics exactly with mortality and harvest") {
    // Along a characteristic x <- x (1 - dt mu) - dt u, evaluated independently.
    const Scenario s = testing::scenario(testing::small_document(51, 10.0, 50));
    const SolveReport r = solve_rate_forward(s);
    const double dt = s.time_grid.dt();
    const AgeGrid& g = s.age_grid;
    double err = 0.0;
    for (std::size_t start = 0; start < g.size(); ++start) {
        double x = s.initial_profile[start];
        for (std::size_t n = 0; n + start + 1 < g.size() && n < s.time_grid.steps(); ++n) {
            const std::size_t i = start + n + 1;
            const double a = g.node(i);
            const double u = (a >= 3.0 && a <= 7.0) ? 0.05 : 0.0;
            x = std::max(x * (1.0 - dt * (0.01 + 0.005 * a)) - dt * u, 0.0);
            err = std::max(err, std::abs(r.state(n + 1, i) - x));
        }
    }
    CHECK(err < 1e-13);
}

TEST_CASE("state stays nonnegative and clamps are reported") {
    json d = testing::small_document(51, 10.0, 50);
    d["control"]["intensity"]["level"] = 0.9;
    const Scenario s = testing::scenario(d);
    const SolveReport r = solve_rate_forward(s);
    for (double v : r.state.values()) CHECK(v >= 0.0);
    int clamped = 0;
    for (std::size_t n = 0; n < s.time_grid.steps(); ++n)
        for (std::size_t i = 1; i < s.age_grid.size(); ++i) {
            if (r.truncated(n, i) == 1.0) {
                ++clamped;
                CHECK(r.state(n + 1, i) == 0.0);
                CHECK(r.applied_extraction(n, i) <= r.controls.intensity(n, i));
                CHECK(r.applied_extraction(n, i) >= 0.0);
            } else {
                CHECK(r.applied_extraction(n, i) == r.controls.intensity(n, i));
            }
        }
    CHECK(clamped > 0);
}

TEST_CASE("unharvested stationary profile is an equilibrium up to first order") {
    json d = testing::small_document(201, 20.0, 400);
    d["control"]["intensity"]["level"] = 0.0;
    const Scenario s = testing::scenario(d);
    const SolveReport r = solve_rate_forward(s);
    double drift = 0.0;
    for (std::size_t i = 0; i < s.age_grid.size(); ++i)
        drift = std::max(drift, std::abs(r.state(s.time_grid.steps(), i) - s.initial_profile[i]));
    CHECK(drift < 5e-3);
}

TEST_CASE("balance residual is first order under refinement") {
    const json doc = preset("dynamics").document;
    auto worst = [](const json& d) {
        const SolveReport r = solve_rate_forward(testing::scenario(d));
        double m = 0.0;
        for (double v : r.balance_residual.values) m = std::max(m, std::abs(v));
        return m;
    };
    const double ratio = worst(doc) / worst(refine_document(doc, 2));
    CHECK(ratio >= 1.7);
    CHECK(ratio <= 2.3);
}

TEST_CASE("effort model: positivity bound and aggregate bookkeeping") {
    json d = testing::small_document(51, 10.0, 50);
    d["control"]["kind"] = "effort";
    d["mortality"]["density_coefficient"] = 0.002;
    const Scenario s = testing::scenario(d);
    const SolveReport r = solve_effort_forward(s);
    for (std::size_t n = 0; n < s.time_grid.size(); ++n)
        CHECK(r.aggregate.values[n] == doctest::Approx(trapezoid(r.state.row(n), s.age_grid.spacing())).epsilon(1e-15));
    for (std::size_t n = 0; n < s.time_grid.size(); ++n)
        for (std::size_t i = 0; i < s.age_grid.size(); ++i)
            CHECK(r.applied_extraction(n, i) == doctest::Approx(r.controls.intensity(n, i) * r.state(n, i)));

    // dt (mu + w) > 1 must be rejected.
    d["economics"]["bounds"]["w_max"] = 10.0;
    d["control"]["intensity"]["level"] = 6.0;
    CHECK_THROWS_AS(solve_effort_forward(testing::scenario(d)), SolverError);
}

TEST_CASE("effort model with alpha = 0 matches the exponential survival on characteristics") {
    // Product of (1 - dt k) along a characteristic against exp(-int k): first order.
    auto err_for = [](int nodes) {
        json d = testing::small_document(nodes, 10.0, nodes - 1);
        d["control"]["kind"] = "effort";
        d["control"]["intensity"]["level"] = 0.08;
        const Scenario s = testing::scenario(d);
        const SolveReport r = solve_effort_forward(s);
        // Cohort born at t = 0 reaches age 10 at t = 10.
        const double a = 10.0;
        const double integral = 0.01 * a + 0.0025 * a * a + 0.08 * 4.0;
        return std::abs(r.state(s.time_grid.steps(), s.age_grid.last()) - std::exp(-integral));
    };
    const double coarse = err_for(101), fine = err_for(201);
    CHECK(coarse / fine == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("grid mismatch is rejected") {
    const Scenario s = testing::scenario(testing::small_document());
    const Scenario other = testing::scenario(testing::small_document(101, 10.0, 100));
    CHECK_THROWS_AS(solve_rate_forward(s, evaluate_controls(other)), DomainError);
}

}
