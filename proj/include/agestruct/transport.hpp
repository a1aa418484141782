#pragma once

#include <span>
#include <vector>

#include "agestruct/grid.hpp"
#include "agestruct/scenario.hpp"

namespace agestruct {

struct SolveReport {
    ControlKind kind = ControlKind::rate;
    Field2D state;                 // x(t, a) >= 0
    TimeSeries aggregate;          // E(t) = trapezoid of each state row
    Field2D applied_extraction;    // rate: truncated u_actual; effort: yield density w x
    TimeSeries balance_residual;   // at half steps t_{n+1/2}
    std::vector<int> fixed_point_iterations;  // empty: the effort coupling is explicit
    ControlTables controls;        // requested intensity and inflow actually used
    Field2D truncated;             // rate model: 1 where step n clamped node i, else 0
};

// y_i = (1 - nu) x_i + nu x_{i-1} for i >= 1, y_0 = x_0, nu = dt / spacing.
void upwind_transport(std::span<const double> row, double courant, std::span<double> out);

// Explicit upwind transport plus Euler source -mu x - u, inflow x(t_{n+1}, 0) = p(t_{n+1}).
// Nodes that would go negative are clamped to 0 and the shortfall is removed
// from the applied extraction.
SolveReport solve_rate_forward(const Scenario& scenario, const ControlTables& controls);
SolveReport solve_rate_forward(const Scenario& scenario);

// Same transport with source -(mu(E(t_n), a) + w) x, E taken from the
// beginning-of-step row. Throws SolverError when dt (mu + w) > 1.
SolveReport solve_effort_forward(const Scenario& scenario, const ControlTables& controls);
SolveReport solve_effort_forward(const Scenario& scenario);

// Dispatches on scenario.control.kind.
SolveReport solve_forward(const Scenario& scenario, const ControlTables& controls);

// Discrete residual of dE/dt = p - x(t, A) - int (mu x + extraction) da at half
// steps: the difference of E across each step against the step-averaged
// right-hand side, using the extraction applied during the step.
TimeSeries balance_residual(const SolveReport& report, const Scenario& scenario);

}  // namespace agestruct
