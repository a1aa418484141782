#pragma once

#include <optional>
#include <span>
#include <string>

#include "agestruct/grid.hpp"
#include "agestruct/scenario.hpp"
#include "agestruct/transport.hpp"

namespace agestruct {

struct AdjointReport {
    Field2D costate;                      // current-value lambda(t, a), lambda(t, A) = 0
    double horizon = 0.0;                 // truncation horizon T, lambda(T, .) = 0
    double discount_at_horizon = 0.0;     // exp(-r T)
    std::string terminal_time_condition;  // human-readable truncation rule
    TimeSeries nonlocal_series;           // effort model: alpha * h * sum_i lambda_i y_i per time node
    // Rate model with truncation: source implied on the active set {x = 0}
    // (heuristic multiplier estimate, clipped at zero).
    std::optional<Field2D> multiplier_estimate;
    int negative_multiplier_nodes = 0;
};

// Time-constant age profile broadcast onto the scenario grids.
Field2D broadcast(const Scenario& scenario, const Profile& profile);

// Backward solve of d_t lambda + d_a lambda = (r + mu) lambda - eta with
// lambda(T, .) = 0 and lambda(t, A) = 0. The stencil is the transpose of the
// forward upwind step, so discrete gradients are exact.
AdjointReport solve_rate_adjoint(const Scenario& scenario, const Field2D& eta);

// As above, but consistent with the truncated forward map of `forward`: on
// clamped nodes the extra stock would be harvested, so lambda = c there.
AdjointReport solve_rate_adjoint(const Scenario& scenario, const Field2D& eta, const SolveReport& forward);

// Backward solve of d_t lambda + d_a lambda = (r + mu(E) + w) lambda - c w
//   + int mu_E x lambda ds, nonlocal term lagged by one step.
// `include_nonlocal = false` drops the aggregate coupling (ablation).
AdjointReport solve_effort_adjoint(const Scenario& scenario, const SolveReport& forward,
                                   bool include_nonlocal = true);

// One linearized rate-model step and its transpose, exposed for the duality check.
// step:      out_i = (1 - dt mu_i) ((1 - nu) dx_i + nu dx_{i-1}), i >= 1; out_0 = 0
// transpose: out_j = (1 - nu)(1 - dt mu_j) lam_j [j >= 1] + nu (1 - dt mu_{j+1}) lam_{j+1} [j < last]
void rate_step(const Scenario& scenario, std::span<const double> dx, std::span<double> out);
void rate_step_transpose(const Scenario& scenario, std::span<const double> lam, std::span<double> out);

// Summation-by-parts terms of the discounted space-time pairing
// sum_n e^{-r t_n} h sum_{i>=1} lam^n_i (dx^{n+1}_i - (L dx^n)_i).
struct DualityTerms {
    double pairing = 0.0;        // the left-hand side above
    double interior = 0.0;       // <L* lam, dx> over 1 <= i < last, 1 <= n < N
    double terminal_age = 0.0;   // i = last column (vanishes when lam(t, A) = 0)
    double inflow_boundary = 0.0;  // a = 0 pairing, lam(t, 0) dp
    double terminal_time = 0.0;  // t = T pairing
    double initial_time = 0.0;   // t = 0 pairing
    double residual() const {
        return pairing - (interior + terminal_age + inflow_boundary + terminal_time + initial_time);
    }
};

DualityTerms rate_duality_terms(const Scenario& scenario, const Field2D& lambda, const Field2D& dx);

}  // namespace agestruct
