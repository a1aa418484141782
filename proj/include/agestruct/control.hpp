#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agestruct/adjoint.hpp"
#include "agestruct/grid.hpp"
#include "agestruct/scenario.hpp"
#include "agestruct/transport.hpp"

namespace agestruct {

struct ObjectiveValue {
    double value = 0.0;
    double horizon = 0.0;
    double tail_bound = 0.0;  // bound on the discarded payoff beyond the horizon
};

// J = sum_n tau_n e^{-r t_n} (trapezoid(c u_actual) - k p), u_actual the
// truncated extraction actually applied.
ObjectiveValue objective_rate(const Scenario& scenario, const SolveReport& report);

// Same with payoff density c w x.
ObjectiveValue objective_effort(const Scenario& scenario, const SolveReport& report);

ObjectiveValue objective(const Scenario& scenario, const SolveReport& report);

// J + sum_n tau_n e^{-r t_n} trapezoid(eta x): the rate objective with the
// state-constraint multiplier attached. Equals J when eta x = 0.
double lagrangian_rate(const Scenario& scenario, const SolveReport& report, const Field2D& eta);

// Current-value switching functions and their bang-bang synthesis.
struct SwitchingReport {
    Field2D sigma_u;              // c - lambda
    TimeSeries sigma_p;           // lambda(., 0) - k
    Field2D synthesized_u;        // in {0, u_max}
    TimeSeries synthesized_p;     // in {0, p_max}
    double threshold = 0.0;       // dead zone [-eps, eps]
};

// Inside the dead zone the value from `previous` is kept when given, otherwise 0.
SwitchingReport switching_functions(const Scenario& scenario, const AdjointReport& costate, double threshold = 0.0,
                                    const ControlTables* previous = nullptr);

struct StationarySwitching {
    Profile sigma_u;
    Profile synthesized_u;
    double threshold = 0.0;
};

StationarySwitching stationary_switching(const Profile& unit_value, const Profile& costate, double u_max,
                                         double threshold = 0.0);

// Nodes where a control contradicts the sign of its switching function:
// sigma > eps requires the upper bound, sigma < -eps requires 0.
struct SwitchingConsistency {
    int checked = 0;
    int violations = 0;
};

SwitchingConsistency check_switching(const Scenario& scenario, const SwitchingReport& switching,
                                     const ControlTables& controls);

struct SlacknessResidual {
    double max_abs = 0.0;  // max |eta x|
    int negative_multiplier = 0;
    int negative_state = 0;
};

SlacknessResidual complementary_slackness_residual(const Field2D& state, const Field2D& eta);

enum class Channel { rate_u, rate_p, effort_w };

std::string_view to_string(Channel channel);
Channel parse_channel(std::string_view name);

// sin^2 bump supported on [t_lo, t_hi] x [a_lo, a_hi] (the age box is unused
// by rate-p), scaled by `step` for the finite differences.
struct Probe {
    double t_lo = 0.0;
    double t_hi = 0.0;
    double a_lo = 0.0;
    double a_hi = 0.0;
    double step = 1e-4;

    double shape(double t, double a) const;
    double shape(double t) const;
};

struct GradientCheck {
    Channel channel = Channel::rate_u;
    double adjoint_gradient = 0.0;
    double fd_gradient = 0.0;
    double rel_err = 0.0;
    bool nonlocal = true;
};

// Rate channels differentiate the Lagrangian with eta from the scenario
// multiplier. Throws DomainError when the probe touches the state constraint
// (x <= 0 on its support or a changed clamp mask) or a control bound.
GradientCheck gradient_check(const Scenario& scenario, Channel channel, const Probe& probe,
                             bool include_nonlocal = true);

struct SweepOptions {
    double relaxation = 1.0;
    int max_iter = 100;
    double tolerance = 1e-12;
    double threshold = 0.0;
};

struct SweepResult {
    ControlTables controls;
    std::vector<ObjectiveValue> history;  // objective of each iterate
    std::vector<double> changes;          // max control change per iteration
    int iterations = 0;
    bool converged = false;
    std::optional<std::string> warning;
    SolveReport forward;                  // verification solve with the returned controls
    AdjointReport costate;
    SwitchingReport switching;
};

// Forward solve, clamp-consistent adjoint, bang-bang target, relaxed update.
SweepResult forward_backward_sweep(const Scenario& scenario, const SweepOptions& options = {});

struct YieldRow {
    double h = 0.0;
    double y_rate = 0.0;
    double y_effort = 0.0;
    double e_rate = 0.0;
    double e_effort = 0.0;
    bool rate_truncated = false;  // stationary rate profile hits zero inside [0, A]
};

struct Mechanisms {
    bool rate = true;
    bool effort = true;
};

// Stationary yield and aggregate of both mechanisms for intensity h on the
// scenario's control window, aggregate-dependent mortality in both.
// Points run on up to `jobs` threads.
std::vector<YieldRow> yield_sweep(const Scenario& scenario, std::span<const double> h_values,
                                  Mechanisms mechanisms = {}, unsigned jobs = 1);

// Long-run control intensity profile (ramps completed).
Profile stationary_intensity(const Scenario& scenario);

std::vector<double> uniform_points(double lo, double hi, int count);

}  // namespace agestruct
