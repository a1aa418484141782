#include "agestruct/adjoint.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "agestruct/errors.hpp"

namespace agestruct {

namespace {

struct BackwardProblem {
    const Field2D& decay;   // k^n_i
    const Field2D& source;  // s^n_i
    double alpha = 0.0;
    const Field2D* transported = nullptr;  // y^n for the nonlocal term
    const Field2D* truncated = nullptr;    // clamp mask of the forward run
    const Profile* unit_value = nullptr;   // c(a), used on clamped nodes
};

void require_same_grids(const Scenario& s, const Field2D& f, const char* what) {
    if (!(f.time_grid() == s.time_grid) || !(f.age_grid() == s.age_grid))
        throw DomainError(what, "grid mismatch with scenario");
}

void check_finite_row(std::span<const double> row, std::size_t n) {
    for (double v : row)
        if (!std::isfinite(v)) throw SolverError("non-finite costate at time node " + std::to_string(n));
}

std::string terminal_rule(double horizon, double discount) {
    std::ostringstream os;
    os << "lambda(T, a) = 0 at T = " << horizon << " (exp(-rT) = " << discount << ")";
    return os.str();
}

AdjointReport solve_backward(const Scenario& s, const BackwardProblem& bp) {
    const TimeGrid& tg = s.time_grid;
    const AgeGrid& ag = s.age_grid;
    const std::size_t steps = tg.steps();
    const std::size_t last = ag.last();
    const double dt = tg.dt();
    const double h = ag.spacing();
    const double nu = dt / h;
    const double r = s.economics.discount_rate;
    const double decay_one_step = std::exp(-r * dt);

    AdjointReport rep{.costate = Field2D(tg, ag),
                      .horizon = tg.horizon(),
                      .discount_at_horizon = std::exp(-r * tg.horizon()),
                      .terminal_time_condition = {},
                      .nonlocal_series = {tg.times(), std::vector<double>(tg.size(), 0.0)},
                      .multiplier_estimate = std::nullopt,
                      .negative_multiplier_nodes = 0};
    rep.terminal_time_condition = terminal_rule(rep.horizon, rep.discount_at_horizon);
    if (bp.truncated) rep.multiplier_estimate = Field2D(tg, ag);

    Field2D& lam = rep.costate;
    auto nonlocal = [&](std::size_t n) {
        if (bp.alpha == 0.0 || !bp.transported) return 0.0;
        double acc = 0.0;
        for (std::size_t j = 1; j <= last; ++j) acc += lam(n, j) * (*bp.transported)(n, j);
        return bp.alpha * h * acc;
    };

    // Row N stays zero: lambda(T, .) = 0.
    for (std::size_t n = steps; n-- > 0;) {
        const std::size_t m = n + 1;
        const double time_weight = tg.weight(m) / dt;
        const double coupling = rep.nonlocal_series.values[m];
        for (std::size_t i = 1; i < last; ++i) {
            const double carried = (1.0 - nu) * (1.0 - dt * bp.decay(m, i)) * lam(m, i) +
                                   nu * (1.0 - dt * bp.decay(m, i + 1)) * lam(m, i + 1);
            const double src = time_weight * dt * bp.source(m, i);
            double value = decay_one_step * (carried - dt * coupling + src);
            if (bp.truncated && (*bp.truncated)(n, i) != 0.0) {
                // Extra stock on a clamped node is harvested at unit value c.
                const double target = (*bp.unit_value)[i];
                const double implied = (target - value) / (decay_one_step * time_weight * dt);
                if (implied < 0.0) ++rep.negative_multiplier_nodes;
                (*rep.multiplier_estimate)(m, i) = std::max(implied, 0.0);
                value = target;
            }
            lam(n, i) = value;
        }
        lam(n, last) = 0.0;
        rep.nonlocal_series.values[n] = nonlocal(n);
        lam(n, 0) = (1.0 - dt * bp.decay(n, 1)) * lam(n, 1) +
                    0.5 * h * (tg.weight(n) / dt * bp.source(n, 0) - rep.nonlocal_series.values[n]);
        check_finite_row(lam.row(n), n);
    }
    return rep;
}

Field2D rate_decay(const Scenario& s) {
    const Profile mu = s.mortality.baseline_profile(s.age_grid);
    Field2D k(s.time_grid, s.age_grid);
    for (std::size_t n = 0; n < k.rows(); ++n)
        for (std::size_t i = 0; i < k.cols(); ++i) k(n, i) = mu[i];
    return k;
}

}  // namespace

Field2D broadcast(const Scenario& s, const Profile& profile) {
    if (!(profile.grid() == s.age_grid)) throw DomainError("profile", "grid mismatch with scenario");
    Field2D f(s.time_grid, s.age_grid);
    for (std::size_t n = 0; n < f.rows(); ++n)
        for (std::size_t i = 0; i < f.cols(); ++i) f(n, i) = profile[i];
    return f;
}

AdjointReport solve_rate_adjoint(const Scenario& s, const Field2D& eta) {
    require_same_grids(s, eta, "eta");
    for (double v : eta.values())
        if (!(v >= 0.0)) throw DomainError("eta", "multiplier must be nonnegative");
    const Field2D decay = rate_decay(s);
    return solve_backward(s, BackwardProblem{.decay = decay, .source = eta});
}

AdjointReport solve_rate_adjoint(const Scenario& s, const Field2D& eta, const SolveReport& forward) {
    require_same_grids(s, eta, "eta");
    require_same_grids(s, forward.state, "forward");
    if (forward.kind != ControlKind::rate) throw DomainError("forward", "expected a rate-model solve");
    for (double v : eta.values())
        if (!(v >= 0.0)) throw DomainError("eta", "multiplier must be nonnegative");
    const Field2D decay = rate_decay(s);
    const Profile c = s.economics.unit_value_profile(s.age_grid);
    return solve_backward(
        s, BackwardProblem{.decay = decay, .source = eta, .truncated = &forward.truncated, .unit_value = &c});
}

AdjointReport solve_effort_adjoint(const Scenario& s, const SolveReport& forward, bool include_nonlocal) {
    require_same_grids(s, forward.state, "forward");
    if (forward.kind != ControlKind::effort) throw DomainError("forward", "expected an effort-model solve");
    const TimeGrid& tg = s.time_grid;
    const AgeGrid& ag = s.age_grid;
    const double alpha = s.mortality.density_coefficient;
    const double nu = tg.dt() / ag.spacing();
    const Profile mu = s.mortality.baseline_profile(ag);
    const Profile c = s.economics.unit_value_profile(ag);

    Field2D decay(tg, ag), source(tg, ag), transported(tg, ag);
    for (std::size_t n = 0; n < tg.size(); ++n) {
        const double aggregate = forward.aggregate.values[n];
        for (std::size_t i = 0; i < ag.size(); ++i) {
            const double w = forward.controls.intensity(n, i);
            decay(n, i) = mu[i] + alpha * aggregate + w;
            source(n, i) = c[i] * w;
        }
        upwind_transport(forward.state.row(n), nu, transported.row(n));
    }
    return solve_backward(s, BackwardProblem{.decay = decay,
                                             .source = source,
                                             .alpha = include_nonlocal ? alpha : 0.0,
                                             .transported = &transported});
}

void rate_step(const Scenario& s, std::span<const double> dx, std::span<double> out) {
    const double dt = s.time_grid.dt();
    const double nu = dt / s.age_grid.spacing();
    const Profile mu = s.mortality.baseline_profile(s.age_grid);
    out[0] = 0.0;
    for (std::size_t i = 1; i < dx.size(); ++i) out[i] = (1.0 - dt * mu[i]) * ((1.0 - nu) * dx[i] + nu * dx[i - 1]);
}

void rate_step_transpose(const Scenario& s, std::span<const double> lam, std::span<double> out) {
    const double dt = s.time_grid.dt();
    const double nu = dt / s.age_grid.spacing();
    const Profile mu = s.mortality.baseline_profile(s.age_grid);
    const std::size_t last = lam.size() - 1;
    for (std::size_t j = 0; j <= last; ++j) {
        double v = 0.0;
        if (j >= 1) v += (1.0 - nu) * (1.0 - dt * mu[j]) * lam[j];
        if (j < last) v += nu * (1.0 - dt * mu[j + 1]) * lam[j + 1];
        out[j] = v;
    }
}

DualityTerms rate_duality_terms(const Scenario& s, const Field2D& lambda, const Field2D& dx) {
    require_same_grids(s, lambda, "lambda");
    require_same_grids(s, dx, "dx");
    const TimeGrid& tg = s.time_grid;
    const std::size_t steps = tg.steps();
    const std::size_t cols = s.age_grid.size();
    const std::size_t last = cols - 1;
    const double h = s.age_grid.spacing();
    const double r = s.economics.discount_rate;
    auto disc = [&](std::size_t n) { return std::exp(-r * tg.time(n)); };

    std::vector<double> tmp(cols);
    DualityTerms d;
    for (std::size_t n = 0; n < steps; ++n) {
        rate_step(s, dx.row(n), tmp);
        for (std::size_t i = 1; i <= last; ++i) d.pairing += disc(n) * h * lambda(n, i) * (dx(n + 1, i) - tmp[i]);
    }

    std::vector<double> adj(cols);
    for (std::size_t n = 0; n < steps; ++n) {
        rate_step_transpose(s, lambda.row(n), adj);
        if (n == 0) {
            for (std::size_t j = 0; j <= last; ++j) d.initial_time -= disc(0) * h * adj[j] * dx(0, j);
            continue;
        }
        d.inflow_boundary -= disc(n) * h * adj[0] * dx(n, 0);
        for (std::size_t i = 1; i <= last; ++i) {
            const double term = h * dx(n, i) * (disc(n - 1) * lambda(n - 1, i) - disc(n) * adj[i]);
            (i == last ? d.terminal_age : d.interior) += term;
        }
    }
    for (std::size_t i = 1; i <= last; ++i) d.terminal_time += disc(steps - 1) * h * lambda(steps - 1, i) * dx(steps, i);
    return d;
}

}  // namespace agestruct
