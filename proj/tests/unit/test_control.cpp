#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"

#include "agestruct/control.hpp"
#include "agestruct/errors.hpp"
#include "agestruct/presets.hpp"
#include "agestruct/stationary.hpp"

using namespace agestruct;
using nlohmann::json;

namespace {

// sum_n tau_n e^{-r t_n} on the grid: the trapezoid rule applied to e^{-r t}.
double discount_sum(const TimeGrid& tg, double r) {
    double s = 0.0;
    for (std::size_t n = 0; n < tg.size(); ++n) s += tg.weight(n) * std::exp(-r * tg.time(n));
    return s;
}

json long_document() {
    json d = testing::small_document(21, 400.0, 800);
    return d;
}

}  // namespace

TEST_SUITE("control") {

TEST_CASE("rate objective for constant extraction on a positive state") {
    const Scenario s = testing::scenario(long_document());
    const SolveReport r = solve_rate_forward(s);
    for (double v : r.truncated.values()) REQUIRE(v == 0.0);
    const ObjectiveValue J = objective_rate(s, r);
    // Level 0.05 on the nodes of [3, 7], c = 1, k = 0: the trapezoid of the
    // node indicator is 4 + h.
    const double rate = 0.05 * (4.0 + s.age_grid.spacing());
    CHECK(J.value == doctest::Approx(rate * discount_sum(s.time_grid, 0.05)).epsilon(1e-12));
    CHECK(J.value == doctest::Approx(rate * (1.0 - std::exp(-20.0)) / 0.05).epsilon(2e-4));
    CHECK(J.horizon == 400.0);
    CHECK(J.tail_bound >= 0.0);
    CHECK(J.tail_bound < 1e-6);
}

TEST_CASE("inflow cost enters with a negative sign") {
    json d = long_document();
    d["control"]["intensity"]["level"] = 0.0;
    d["economics"]["inflow_cost"] = {{"type", "constant"}, {"value", 0.6}};
    const Scenario s = testing::scenario(d);
    const ObjectiveValue J = objective(s, solve_forward(s, evaluate_controls(s)));
    CHECK(J.value == doctest::Approx(-0.6 * discount_sum(s.time_grid, 0.05)).epsilon(1e-12));
    CHECK(J.value == doctest::Approx(-12.0).epsilon(2e-4));
}

TEST_CASE("zero activity has zero value") {
    json d = testing::small_document();
    d["control"]["intensity"]["level"] = 0.0;
    const Scenario s = testing::scenario(d);
    CHECK(objective(s, solve_forward(s, evaluate_controls(s))).value == 0.0);
}

TEST_CASE("effort objective accumulates c w x") {
    const Scenario s = preset_scenario("gradcheck-effort");
    const SolveReport r = solve_effort_forward(s);
    const Profile c = s.economics.unit_value_profile(s.age_grid);
    const std::vector<double> k = inflow_cost_series(s);
    double expected = 0.0;
    for (std::size_t n = 0; n < s.time_grid.size(); ++n) {
        std::vector<double> dens(s.age_grid.size());
        for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = c[i] * r.controls.intensity(n, i) * r.state(n, i);
        expected += s.time_grid.weight(n) * std::exp(-0.05 * s.time_grid.time(n)) *
                    (trapezoid(dens, s.age_grid.spacing()) - k[n] * r.controls.inflow[n]);
    }
    CHECK(objective_effort(s, r).value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lagrangian equals the objective when the multiplier sees no state") {
    const Scenario s = preset_scenario("gradcheck");
    const SolveReport r = solve_rate_forward(s);
    CHECK(lagrangian_rate(s, r, Field2D(s.time_grid, s.age_grid)) == objective_rate(s, r).value);
    const double L = lagrangian_rate(s, r, broadcast(s, s.multiplier_or_zero()));
    CHECK(L > objective_rate(s, r).value);
}

TEST_CASE("switching with zero costate harvests everywhere and stops inflow when costly") {
    const Scenario s = preset_scenario("gradcheck");
    const AdjointReport zero = solve_rate_adjoint(s, Field2D(s.time_grid, s.age_grid));
    const SwitchingReport sw = switching_functions(s, zero);
    const Profile c = s.economics.unit_value_profile(s.age_grid);
    for (std::size_t n = 0; n < s.time_grid.size(); ++n) {
        for (std::size_t i = 0; i < s.age_grid.size(); ++i) {
            CHECK(sw.sigma_u(n, i) == c[i]);
            CHECK(sw.synthesized_u(n, i) == (c[i] > 0.0 ? s.economics.bounds.u_max : 0.0));
        }
        CHECK(sw.sigma_p.values[n] == doctest::Approx(-0.6));
        CHECK(sw.synthesized_p.values[n] == 0.0);
    }
}

TEST_CASE("dead zone keeps the previous control") {
    const Scenario s = preset_scenario("gradcheck");
    const AdjointReport zero = solve_rate_adjoint(s, Field2D(s.time_grid, s.age_grid));
    ControlTables prev = evaluate_controls(s);
    const SwitchingReport sw = switching_functions(s, zero, 10.0, &prev);
    CHECK(sw.synthesized_u == prev.intensity);
    CHECK(sw.synthesized_p.values == prev.inflow);
    const SwitchingReport fresh = switching_functions(s, zero, 10.0);
    for (double v : fresh.synthesized_u.values()) CHECK(v == 0.0);
}

TEST_CASE("stationary switching sets match the sign changes of c - lambda") {
    const Scenario s = preset_scenario("switching");
    const Profile c = s.economics.unit_value_profile(s.age_grid);
    const Profile lambda = stationary_adjoint(s.mortality, s.multiplier_or_zero(), 0.05);
    const StationarySwitching sw = stationary_switching(c, lambda, 0.15);
    int sign_changes = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double sigma = c[i] - lambda[i];
        CHECK(sw.sigma_u[i] == sigma);
        CHECK(sw.synthesized_u[i] == (sigma > 0.0 ? 0.15 : 0.0));
        if (i > 0 && (sw.synthesized_u[i] > 0.0) != (sw.synthesized_u[i - 1] > 0.0)) ++sign_changes;
    }
    CHECK(sign_changes >= 2);
}

TEST_CASE("switching decisions are invariant under a positive rescaling") {
    const Scenario s = preset_scenario("switching");
    const Profile c = s.economics.unit_value_profile(s.age_grid);
    const Profile eta = s.multiplier_or_zero();
    const Profile lambda = stationary_adjoint(s.mortality, eta, 0.05);
    const double kappa = 3.7;
    Profile c2 = c, eta2 = eta;
    for (std::size_t i = 0; i < c.size(); ++i) {
        c2[i] *= kappa;
        eta2[i] *= kappa;
    }
    const Profile lambda2 = stationary_adjoint(s.mortality, eta2, 0.05);
    const StationarySwitching a = stationary_switching(c, lambda, 0.15, 1e-9);
    const StationarySwitching b = stationary_switching(c2, lambda2, 0.15, 1e-9 * kappa);
    CHECK(a.synthesized_u == b.synthesized_u);
}

TEST_CASE("switching consistency counts contradicting nodes") {
    const Scenario s = preset_scenario("gradcheck");
    const AdjointReport zero = solve_rate_adjoint(s, Field2D(s.time_grid, s.age_grid));
    const SwitchingReport sw = switching_functions(s, zero);
    const ControlTables bang{sw.synthesized_u, sw.synthesized_p.values};
    CHECK(check_switching(s, sw, bang).violations == 0);
    CHECK(check_switching(s, sw, bang).checked > 0);
    ControlTables wrong = bang;
    wrong.intensity(3, 10) = 0.0;
    CHECK(check_switching(s, sw, wrong).violations == 1);
}

TEST_CASE("complementary slackness residual") {
    const TimeGrid tg(1.0, 2, AgeGrid(1.0, 3));
    const AgeGrid ag(1.0, 3);
    Field2D x(tg, ag, 1.0), eta(tg, ag);
    CHECK(complementary_slackness_residual(x, eta).max_abs == 0.0);
    eta(1, 1) = 0.25;
    CHECK(complementary_slackness_residual(x, eta).max_abs == 0.25);
    x(1, 1) = 0.0;
    CHECK(complementary_slackness_residual(x, eta).max_abs == 0.0);
    eta(0, 0) = -1.0;
    x(2, 2) = -0.5;
    const SlacknessResidual r = complementary_slackness_residual(x, eta);
    CHECK(r.negative_multiplier == 1);
    CHECK(r.negative_state == 1);
}

TEST_CASE("channel names round-trip") {
    for (Channel ch : {Channel::rate_u, Channel::rate_p, Channel::effort_w}) CHECK(parse_channel(to_string(ch)) == ch);
    CHECK_THROWS_AS(parse_channel("rate"), DomainError);
}

TEST_CASE("probe shape vanishes on the boundary of its support") {
    const Probe p{4.0, 5.0, 2.0, 6.0};
    CHECK(p.shape(4.5, 4.0) == doctest::Approx(1.0));
    CHECK(p.shape(4.0, 4.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(p.shape(4.5, 6.0) == doctest::Approx(0.0).scale(1.0));
    CHECK(p.shape(3.0, 4.0) == 0.0);
    CHECK(p.shape(4.5) == doctest::Approx(1.0));
}

TEST_CASE("adjoint gradients agree with finite differences") {
    const Scenario rate = preset_scenario("gradcheck");
    const GradientCheck u = gradient_check(rate, Channel::rate_u, {4.0, 5.0, 2.0, 6.0});
    const GradientCheck p = gradient_check(rate, Channel::rate_p, {1.0, 2.0, 0.0, 0.0});
    CHECK(u.rel_err <= 1e-6);
    CHECK(p.rel_err <= 1e-6);
    CHECK(std::abs(u.adjoint_gradient) > 0.0);

    const Scenario effort = preset_scenario("gradcheck-effort");
    const GradientCheck w = gradient_check(effort, Channel::effort_w, {4.0, 5.0, 4.0, 6.0});
    const GradientCheck w0 = gradient_check(effort, Channel::effort_w, {4.0, 5.0, 4.0, 6.0}, false);
    CHECK(w.rel_err <= 1e-3);
    CHECK_FALSE(w0.nonlocal);
    CHECK(w0.rel_err >= 10.0 * w.rel_err);
}

TEST_CASE("ablation is exact when the coupling vanishes") {
    json d = preset("gradcheck-effort").document;
    d["mortality"]["density_coefficient"] = 0.0;
    const Scenario s = testing::scenario(d);
    const GradientCheck a = gradient_check(s, Channel::effort_w, {4.0, 5.0, 4.0, 6.0});
    const GradientCheck b = gradient_check(s, Channel::effort_w, {4.0, 5.0, 4.0, 6.0}, false);
    CHECK(a.adjoint_gradient == b.adjoint_gradient);
}

TEST_CASE("gradient probes must stay inside the admissible set") {
    const Scenario s = preset_scenario("gradcheck");
    // The window level sits at zero outside [1, 9], a lower bound.
    CHECK_THROWS_AS(gradient_check(s, Channel::rate_u, {4.0, 5.0, 0.0, 0.9}), DomainError);
    CHECK_THROWS_AS(gradient_check(s, Channel::effort_w, {4.0, 5.0, 4.0, 6.0}), DomainError);
}

TEST_CASE("sweep with worthless catch shuts harvesting down") {
    json d = preset("fbs").document;
    d["economics"]["unit_value"] = {{"type", "constant"}, {"value", 0.0}};
    const Scenario s = testing::scenario(d);
    const SweepResult r = forward_backward_sweep(s);
    CHECK(r.converged);
    CHECK(r.iterations <= 2);
    for (double v : r.controls.intensity.values()) CHECK(v == 0.0);
    for (double v : r.controls.inflow) CHECK(v == 0.0);
}

TEST_CASE("sweep converges to a consistent bang-bang control") {
    const Scenario s = preset_scenario("fbs");
    const SweepResult r = forward_backward_sweep(s);
    CHECK(r.converged);
    CHECK_FALSE(r.warning.has_value());
    CHECK(check_switching(s, r.switching, r.controls).violations == 0);
    for (double v : r.controls.intensity.values()) CHECK((v == 0.0 || v == s.economics.bounds.u_max));
    REQUIRE(r.history.size() >= 2);
    CHECK(r.history.back().value >= r.history.front().value);
    CHECK(objective(s, r.forward).value == r.history.back().value);
}

TEST_CASE("yield sweep rows") {
    const Scenario s = preset_scenario("comparison");
    const std::vector<double> hs = uniform_points(0.0, 0.3, 7);
    CHECK(hs.front() == 0.0);
    CHECK(hs.back() == doctest::Approx(0.3));
    const std::vector<YieldRow> one = yield_sweep(s, hs, {}, 1);
    const std::vector<YieldRow> four = yield_sweep(s, hs, {}, 4);
    REQUIRE(one.size() == hs.size());
    CHECK(one[0].y_rate == 0.0);
    CHECK(one[0].y_effort == 0.0);
    CHECK(one[0].e_rate == doctest::Approx(one[0].e_effort).epsilon(1e-9));
    for (std::size_t k = 0; k < one.size(); ++k) {
        CHECK(one[k].h == four[k].h);
        CHECK(one[k].y_rate == four[k].y_rate);
        CHECK(one[k].y_effort == four[k].y_effort);
        CHECK(one[k].e_rate == four[k].e_rate);
        if (k > 0) {
            CHECK(one[k].e_rate < one[k - 1].e_rate);
            CHECK(one[k].e_effort < one[k - 1].e_effort);
            CHECK(one[k].y_effort > 0.0);
        }
    }
    const std::vector<YieldRow> rate_only = yield_sweep(s, hs, {true, false}, 2);
    CHECK(rate_only[3].y_rate == one[3].y_rate);
    CHECK(rate_only[3].y_effort == 0.0);
}

}
