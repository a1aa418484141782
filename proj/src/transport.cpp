#include "agestruct/transport.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "agestruct/errors.hpp"

namespace agestruct {

namespace {

void check_controls(const Scenario& s, const ControlTables& c) {
    if (!(c.intensity.time_grid() == s.time_grid) || !(c.intensity.age_grid() == s.age_grid))
        throw DomainError("controls", "control table grid does not match scenario grids");
    if (c.inflow.size() != s.time_grid.size()) throw DomainError("controls", "inflow series length mismatch");
}

void check_finite_row(std::span<const double> row, std::size_t step) {
    for (double v : row)
        if (!std::isfinite(v)) throw SolverError("non-finite state encountered at step " + std::to_string(step));
}

SolveReport make_report(const Scenario& s, ControlKind kind, const ControlTables& controls) {
    const TimeGrid& tg = s.time_grid;
    SolveReport r{.kind = kind,
                  .state = Field2D(tg, s.age_grid),
                  .aggregate = {tg.times(), std::vector<double>(tg.size())},
                  .applied_extraction = Field2D(tg, s.age_grid),
                  .balance_residual = {},
                  .fixed_point_iterations = {},
                  .controls = controls,
                  .truncated = Field2D(tg, s.age_grid)};
    auto row0 = r.state.row(0);
    std::copy(s.initial_profile.values().begin(), s.initial_profile.values().end(), row0.begin());
    r.aggregate.values[0] = trapezoid(row0, s.age_grid.spacing());
    return r;
}

}  // namespace

void upwind_transport(std::span<const double> row, double courant, std::span<double> out) {
    out[0] = row[0];
    for (std::size_t i = 1; i < row.size(); ++i) out[i] = (1.0 - courant) * row[i] + courant * row[i - 1];
}

SolveReport solve_rate_forward(const Scenario& s, const ControlTables& controls) {
    check_controls(s, controls);
    const TimeGrid& tg = s.time_grid;
    const AgeGrid& ag = s.age_grid;
    const double dt = tg.dt();
    const double nu = dt / ag.spacing();
    const Profile mu = s.mortality.baseline_profile(ag);
    for (std::size_t i = 0; i < ag.size(); ++i)
        if (dt * mu[i] > 1.0) throw DomainError("time_grid", "dt * mu exceeds 1; refine the time grid");

    SolveReport r = make_report(s, ControlKind::rate, controls);
    std::vector<double> y(ag.size());
    for (std::size_t n = 0; n < tg.steps(); ++n) {
        upwind_transport(r.state.row(n), nu, y);
        auto next = r.state.row(n + 1);
        auto applied = r.applied_extraction.row(n);
        next[0] = controls.inflow[n + 1];
        applied[0] = 0.0;
        for (std::size_t i = 1; i < ag.size(); ++i) {
            const double u = controls.intensity(n, i);
            const double v = y[i] * (1.0 - dt * mu[i]) - dt * u;
            if (v < 0.0) {
                next[i] = 0.0;
                applied[i] = u + v / dt;
                r.truncated(n, i) = 1.0;
            } else {
                next[i] = v;
                applied[i] = u;
            }
        }
        check_finite_row(next, n + 1);
        r.aggregate.values[n + 1] = trapezoid(next, ag.spacing());
    }
    // No step follows the last row; extraction there is what the state can support.
    const std::size_t last = tg.steps();
    for (std::size_t i = 1; i < ag.size(); ++i)
        r.applied_extraction(last, i) = r.state(last, i) > 0.0 ? controls.intensity(last, i) : 0.0;

    r.balance_residual = balance_residual(r, s);
    return r;
}

SolveReport solve_rate_forward(const Scenario& s) { return solve_rate_forward(s, evaluate_controls(s)); }

SolveReport solve_effort_forward(const Scenario& s, const ControlTables& controls) {
    check_controls(s, controls);
    const TimeGrid& tg = s.time_grid;
    const AgeGrid& ag = s.age_grid;
    const double dt = tg.dt();
    const double nu = dt / ag.spacing();
    const double alpha = s.mortality.density_coefficient;
    const Profile mu = s.mortality.baseline_profile(ag);

    SolveReport r = make_report(s, ControlKind::effort, controls);
    std::vector<double> y(ag.size());
    for (std::size_t n = 0; n < tg.steps(); ++n) {
        const double aggregate = r.aggregate.values[n];
        upwind_transport(r.state.row(n), nu, y);
        auto next = r.state.row(n + 1);
        next[0] = controls.inflow[n + 1];
        for (std::size_t i = 1; i < ag.size(); ++i) {
            const double loss = dt * (mu[i] + alpha * aggregate + controls.intensity(n, i));
            if (loss > 1.0)
                throw SolverError("positivity bound dt*(mu+w) <= 1 violated at step " + std::to_string(n) +
                                  ", age node " + std::to_string(i));
            next[i] = (1.0 - loss) * y[i];
        }
        check_finite_row(next, n + 1);
        r.aggregate.values[n + 1] = trapezoid(next, ag.spacing());
    }
    for (std::size_t n = 0; n < tg.size(); ++n)
        for (std::size_t i = 0; i < ag.size(); ++i)
            r.applied_extraction(n, i) = controls.intensity(n, i) * r.state(n, i);

    r.balance_residual = balance_residual(r, s);
    return r;
}

SolveReport solve_effort_forward(const Scenario& s) { return solve_effort_forward(s, evaluate_controls(s)); }

SolveReport solve_forward(const Scenario& s, const ControlTables& controls) {
    return s.control.kind == ControlKind::rate ? solve_rate_forward(s, controls) : solve_effort_forward(s, controls);
}

TimeSeries balance_residual(const SolveReport& r, const Scenario& s) {
    const TimeGrid& tg = r.state.time_grid();
    const AgeGrid& ag = r.state.age_grid();
    const double dt = tg.dt();
    const double h = ag.spacing();
    const double alpha = s.mortality.density_coefficient;
    const Profile mu = s.mortality.baseline_profile(ag);
    const std::size_t last = ag.last();

    // Loss density at time node n, excluding the extraction term.
    std::vector<double> loss(ag.size());
    auto mortality_loss = [&](std::size_t n) {
        const double aggregate = r.kind == ControlKind::effort ? r.aggregate.values[n] : 0.0;
        for (std::size_t i = 0; i < ag.size(); ++i) {
            double k = mu[i] + alpha * aggregate;
            if (r.kind == ControlKind::effort) k += r.controls.intensity(n, i);
            loss[i] = k * r.state(n, i);
        }
        return trapezoid(loss, h);
    };

    TimeSeries out;
    out.times.reserve(tg.steps());
    out.values.reserve(tg.steps());
    double loss_prev = mortality_loss(0);
    for (std::size_t n = 0; n < tg.steps(); ++n) {
        const double loss_next = mortality_loss(n + 1);
        const double dE = (r.aggregate.values[n + 1] - r.aggregate.values[n]) / dt;
        double rhs = 0.5 * (r.controls.inflow[n] + r.controls.inflow[n + 1]) -
                     0.5 * (r.state(n, last) + r.state(n + 1, last)) - 0.5 * (loss_prev + loss_next);
        if (r.kind == ControlKind::rate) rhs -= trapezoid(r.applied_extraction.row(n), h);
        out.times.push_back(0.5 * (tg.time(n) + tg.time(n + 1)));
        out.values.push_back(dE - rhs);
        loss_prev = loss_next;
    }
    return out;
}

}  // namespace agestruct
