#include "agestruct/control.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "agestruct/errors.hpp"
#include "agestruct/stationary.hpp"

namespace agestruct {

namespace {

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double age_weight(const AgeGrid& g, std::size_t i) {
    return (i == 0 || i == g.last()) ? 0.5 * g.spacing() : g.spacing();
}

// sum_n tau_n e^{-r t_n} (trapezoid(c * density_n) - k_n p_n)
double discounted_payoff(const Scenario& s, const Field2D& density, const std::vector<double>& inflow) {
    const TimeGrid& tg = s.time_grid;
    const AgeGrid& ag = s.age_grid;
    const double r = s.economics.discount_rate;
    const Profile c = s.economics.unit_value_profile(ag);
    const std::vector<double> k = inflow_cost_series(s);
    std::vector<double> row(ag.size());
    double total = 0.0;
    for (std::size_t n = 0; n < tg.size(); ++n) {
        for (std::size_t i = 0; i < ag.size(); ++i) row[i] = c[i] * density(n, i);
        const double payoff = trapezoid(row, ag.spacing()) - k[n] * inflow[n];
        total += tg.weight(n) * std::exp(-r * tg.time(n)) * payoff;
    }
    return total;
}

double tail_bound(const Scenario& s, double extraction_bound) {
    const double r = s.economics.discount_rate;
    const double T = s.time_grid.horizon();
    const double c_max = max_abs(s.economics.unit_value_profile(s.age_grid).values());
    const double k_max = max_abs(inflow_cost_series(s));
    const double sup = c_max * extraction_bound * s.age_grid.max_age() + k_max * s.economics.bounds.p_max;
    return r > 0.0 ? std::exp(-r * T) * sup / r : INFINITY;
}

double synthesize(double sigma, double eps, double upper, double previous) {
    if (sigma > eps) return upper;
    if (sigma < -eps) return 0.0;
    return previous;
}

void require_grids(const Scenario& s, const Field2D& f, const char* what) {
    if (!(f.time_grid() == s.time_grid) || !(f.age_grid() == s.age_grid))
        throw DomainError(what, "grid mismatch with scenario");
}

}  // namespace

ObjectiveValue objective_rate(const Scenario& s, const SolveReport& r) {
    require_grids(s, r.state, "report");
    return {discounted_payoff(s, r.applied_extraction, r.controls.inflow), s.time_grid.horizon(),
            tail_bound(s, s.economics.bounds.u_max)};
}

ObjectiveValue objective_effort(const Scenario& s, const SolveReport& r) {
    require_grids(s, r.state, "report");
    Field2D density(s.time_grid, s.age_grid);
    for (std::size_t n = 0; n < density.rows(); ++n)
        for (std::size_t i = 0; i < density.cols(); ++i)
            density(n, i) = r.controls.intensity(n, i) * r.state(n, i);
    const double bound = s.economics.bounds.w_max * max_abs(r.state.values());
    return {discounted_payoff(s, density, r.controls.inflow), s.time_grid.horizon(), tail_bound(s, bound)};
}

ObjectiveValue objective(const Scenario& s, const SolveReport& r) {
    return r.kind == ControlKind::rate ? objective_rate(s, r) : objective_effort(s, r);
}

double lagrangian_rate(const Scenario& s, const SolveReport& r, const Field2D& eta) {
    require_grids(s, eta, "eta");
    const TimeGrid& tg = s.time_grid;
    const double rate = s.economics.discount_rate;
    std::vector<double> row(s.age_grid.size());
    double penalty = 0.0;
    for (std::size_t n = 0; n < tg.size(); ++n) {
        for (std::size_t i = 0; i < row.size(); ++i) row[i] = eta(n, i) * r.state(n, i);
        penalty += tg.weight(n) * std::exp(-rate * tg.time(n)) * trapezoid(row, s.age_grid.spacing());
    }
    return objective_rate(s, r).value + penalty;
}

SwitchingReport switching_functions(const Scenario& s, const AdjointReport& costate, double threshold,
                                    const ControlTables* previous) {
    require_grids(s, costate.costate, "costate");
    if (!(threshold >= 0.0)) throw DomainError("threshold", "must be nonnegative");
    if (previous) require_grids(s, previous->intensity, "previous");
    const TimeGrid& tg = s.time_grid;
    const Profile c = s.economics.unit_value_profile(s.age_grid);
    const std::vector<double> k = inflow_cost_series(s);
    const ControlBounds& b = s.economics.bounds;

    SwitchingReport rep{.sigma_u = Field2D(tg, s.age_grid),
                        .sigma_p = {tg.times(), std::vector<double>(tg.size())},
                        .synthesized_u = Field2D(tg, s.age_grid),
                        .synthesized_p = {tg.times(), std::vector<double>(tg.size())},
                        .threshold = threshold};
    for (std::size_t n = 0; n < tg.size(); ++n) {
        for (std::size_t i = 0; i < s.age_grid.size(); ++i) {
            const double sigma = c[i] - costate.costate(n, i);
            rep.sigma_u(n, i) = sigma;
            rep.synthesized_u(n, i) =
                synthesize(sigma, threshold, b.u_max, previous ? previous->intensity(n, i) : 0.0);
        }
        const double sigma = costate.costate(n, 0) - k[n];
        rep.sigma_p.values[n] = sigma;
        rep.synthesized_p.values[n] = synthesize(sigma, threshold, b.p_max, previous ? previous->inflow[n] : 0.0);
    }
    return rep;
}

StationarySwitching stationary_switching(const Profile& c, const Profile& lambda, double u_max, double threshold) {
    if (!(c.grid() == lambda.grid())) throw DomainError("costate", "grid mismatch with unit value");
    StationarySwitching out{Profile(c.grid()), Profile(c.grid()), threshold};
    for (std::size_t i = 0; i < c.size(); ++i) {
        out.sigma_u[i] = c[i] - lambda[i];
        out.synthesized_u[i] = synthesize(out.sigma_u[i], threshold, u_max, 0.0);
    }
    return out;
}

SwitchingConsistency check_switching(const Scenario& s, const SwitchingReport& sw, const ControlTables& controls) {
    require_grids(s, sw.sigma_u, "switching");
    require_grids(s, controls.intensity, "controls");
    const ControlBounds& b = s.economics.bounds;
    const double eps = sw.threshold;
    SwitchingConsistency out;
    auto check = [&](double sigma, double value, double upper) {
        ++out.checked;
        if ((sigma > eps && value != upper) || (sigma < -eps && value != 0.0)) ++out.violations;
    };
    for (std::size_t n = 0; n < sw.sigma_u.rows(); ++n) {
        for (std::size_t i = 0; i < sw.sigma_u.cols(); ++i) check(sw.sigma_u(n, i), controls.intensity(n, i), b.u_max);
        check(sw.sigma_p.values[n], controls.inflow[n], b.p_max);
    }
    return out;
}

SlacknessResidual complementary_slackness_residual(const Field2D& state, const Field2D& eta) {
    if (!state.same_grids(eta)) throw DomainError("eta", "grid mismatch with state");
    SlacknessResidual out;
    const auto x = state.values();
    const auto e = eta.values();
    for (std::size_t k = 0; k < x.size(); ++k) {
        out.max_abs = std::max(out.max_abs, std::abs(x[k] * e[k]));
        if (e[k] < 0.0) ++out.negative_multiplier;
        if (x[k] < 0.0) ++out.negative_state;
    }
    return out;
}

std::string_view to_string(Channel channel) {
    switch (channel) {
        case Channel::rate_u: return "rate-u";
        case Channel::rate_p: return "rate-p";
        case Channel::effort_w: return "effort-w";
    }
    return "?";
}

Channel parse_channel(std::string_view name) {
    if (name == "rate-u") return Channel::rate_u;
    if (name == "rate-p") return Channel::rate_p;
    if (name == "effort-w") return Channel::effort_w;
    throw DomainError("channel", "unknown channel '" + std::string(name) + "'");
}

double Probe::shape(double t) const {
    if (t <= t_lo || t >= t_hi) return 0.0;
    const double s = std::sin(std::numbers::pi * (t - t_lo) / (t_hi - t_lo));
    return s * s;
}

double Probe::shape(double t, double a) const {
    if (a <= a_lo || a >= a_hi) return 0.0;
    const double s = std::sin(std::numbers::pi * (a - a_lo) / (a_hi - a_lo));
    return shape(t) * s * s;
}

namespace {

void probe_error(const std::string& what) { throw DomainError("probe", what); }

ControlTables perturbed(const Scenario& s, const ControlTables& base, Channel ch, const Probe& probe, double eps) {
    ControlTables out = base;
    const TimeGrid& tg = s.time_grid;
    for (std::size_t n = 0; n < tg.size(); ++n) {
        const double t = tg.time(n);
        if (ch == Channel::rate_p) {
            out.inflow[n] += eps * probe.shape(t);
            continue;
        }
        for (std::size_t i = 0; i < s.age_grid.size(); ++i)
            out.intensity(n, i) += eps * probe.shape(t, s.age_grid.node(i));
    }
    return out;
}

void check_interior(const Scenario& s, const SolveReport& base, Channel ch, const Probe& probe) {
    const TimeGrid& tg = s.time_grid;
    const ControlBounds& b = s.economics.bounds;
    const double upper = ch == Channel::effort_w ? b.w_max : b.u_max;
    for (std::size_t n = 0; n < tg.size(); ++n) {
        const double t = tg.time(n);
        if (ch == Channel::rate_p) {
            const double p = base.controls.inflow[n];
            if (probe.shape(t) > 0.0 && !(p - probe.step > 0.0 && p + probe.step < b.p_max))
                probe_error("inflow at a bound on the probe support");
            continue;
        }
        for (std::size_t i = 0; i < s.age_grid.size(); ++i) {
            if (probe.shape(t, s.age_grid.node(i)) <= 0.0) continue;
            const double v = base.controls.intensity(n, i);
            if (!(v - probe.step > 0.0 && v + probe.step < upper)) probe_error("control at a bound on the probe support");
            if (!(base.state(n, i) > 0.0)) probe_error("state not positive on the probe support");
        }
    }
}

}  // namespace

GradientCheck gradient_check(const Scenario& s, Channel ch, const Probe& probe, bool include_nonlocal) {
    if (!(probe.t_hi > probe.t_lo)) throw DomainError("probe", "empty time support");
    if (ch != Channel::rate_p && !(probe.a_hi > probe.a_lo)) throw DomainError("probe", "empty age support");
    if (!(probe.step > 0.0)) throw DomainError("probe", "step must be positive");
    const bool rate = ch != Channel::effort_w;
    if (rate != (s.control.kind == ControlKind::rate))
        throw DomainError("control.kind", "channel does not match the scenario control kind");

    const TimeGrid& tg = s.time_grid;
    const AgeGrid& ag = s.age_grid;
    const double r = s.economics.discount_rate;
    const ControlTables base_controls = evaluate_controls(s);
    const SolveReport base = solve_forward(s, base_controls);
    check_interior(s, base, ch, probe);

    const Profile c = s.economics.unit_value_profile(ag);
    const std::vector<double> k = inflow_cost_series(s);
    const Field2D eta = broadcast(s, s.multiplier_or_zero());

    double adjoint_gradient = 0.0;
    if (rate) {
        const AdjointReport adj = solve_rate_adjoint(s, eta, base);
        for (std::size_t n = 0; n < tg.size(); ++n) {
            const double w = tg.weight(n) * std::exp(-r * tg.time(n));
            const double t = tg.time(n);
            if (ch == Channel::rate_p) {
                adjoint_gradient += w * (adj.costate(n, 0) - k[n]) * probe.shape(t);
                continue;
            }
            for (std::size_t i = 0; i < ag.size(); ++i)
                adjoint_gradient += w * age_weight(ag, i) * (c[i] - adj.costate(n, i)) * probe.shape(t, ag.node(i));
        }
    } else {
        const AdjointReport adj = solve_effort_adjoint(s, base, include_nonlocal);
        const double nu = tg.dt() / ag.spacing();
        std::vector<double> y(ag.size());
        for (std::size_t n = 0; n < tg.size(); ++n) {
            const double w = tg.weight(n) * std::exp(-r * tg.time(n));
            upwind_transport(base.state.row(n), nu, y);
            for (std::size_t i = 0; i < ag.size(); ++i) {
                const double field = c[i] * base.state(n, i) - adj.costate(n, i) * y[i];
                adjoint_gradient += w * age_weight(ag, i) * field * probe.shape(tg.time(n), ag.node(i));
            }
        }
    }

    auto evaluate = [&](double eps) {
        const SolveReport run = solve_forward(s, perturbed(s, base_controls, ch, probe, eps));
        if (rate) {
            if (!(run.truncated == base.truncated)) probe_error("perturbation changes the active state constraint");
            return lagrangian_rate(s, run, eta);
        }
        return objective_effort(s, run).value;
    };
    const double fd = (evaluate(probe.step) - evaluate(-probe.step)) / (2.0 * probe.step);
    const double scale = std::max(std::abs(fd), 1e-300);
    return {ch, adjoint_gradient, fd, std::abs(adjoint_gradient - fd) / scale, rate || include_nonlocal};
}

SweepResult forward_backward_sweep(const Scenario& s, const SweepOptions& opt) {
    if (s.control.kind != ControlKind::rate) throw DomainError("control.kind", "the sweep supports the rate model");
    if (!(opt.relaxation > 0.0 && opt.relaxation <= 1.0)) throw DomainError("relaxation", "must lie in (0, 1]");
    if (opt.max_iter < 1) throw DomainError("max_iter", "must be at least 1");

    const Field2D no_source(s.time_grid, s.age_grid);
    const double w = opt.relaxation;
    ControlTables controls = evaluate_controls(s);
    ControlTables best = controls;
    double best_value = -INFINITY;
    int decreasing = 0;

    std::vector<ObjectiveValue> history;
    std::vector<double> changes;
    int iterations = 0;
    bool converged = false;
    std::optional<std::string> warning;

    for (int it = 1; it <= opt.max_iter; ++it) {
        const SolveReport fwd = solve_rate_forward(s, controls);
        const ObjectiveValue J = objective_rate(s, fwd);
        if (!history.empty() && J.value < history.back().value) ++decreasing;
        else decreasing = 0;
        history.push_back(J);
        if (J.value > best_value) {
            best_value = J.value;
            best = controls;
        }
        iterations = it;
        if (decreasing >= 5) {
            warning = "oscillation: objective decreased for 5 consecutive iterates; returning the best iterate";
            controls = best;
            break;
        }

        const AdjointReport adj = solve_rate_adjoint(s, no_source, fwd);
        // The starting controls are a guess, not an iterate: the first synthesis is one-shot.
        const SwitchingReport sw = switching_functions(s, adj, opt.threshold, it == 1 ? nullptr : &controls);

        double change = 0.0;
        ControlTables next = controls;
        for (std::size_t n = 0; n < next.inflow.size(); ++n) {
            for (std::size_t i = 0; i < s.age_grid.size(); ++i) {
                const double v = (1.0 - w) * controls.intensity(n, i) + w * sw.synthesized_u(n, i);
                change = std::max(change, std::abs(v - controls.intensity(n, i)));
                next.intensity(n, i) = v;
            }
            const double p = (1.0 - w) * controls.inflow[n] + w * sw.synthesized_p.values[n];
            change = std::max(change, std::abs(p - controls.inflow[n]));
            next.inflow[n] = p;
        }
        changes.push_back(change);
        if (change <= opt.tolerance) {
            // Snap to the bang-bang target.
            for (std::size_t n = 0; n < next.inflow.size(); ++n) {
                for (std::size_t i = 0; i < s.age_grid.size(); ++i) next.intensity(n, i) = sw.synthesized_u(n, i);
                next.inflow[n] = sw.synthesized_p.values[n];
            }
            controls = std::move(next);
            converged = true;
            break;
        }
        controls = std::move(next);
    }
    if (!converged && !warning) {
        warning = "no convergence within " + std::to_string(opt.max_iter) + " iterations; returning the best iterate";
        controls = best;
    }

    SolveReport forward = solve_rate_forward(s, controls);
    AdjointReport costate = solve_rate_adjoint(s, no_source, forward);
    SwitchingReport switching = switching_functions(s, costate, opt.threshold, &controls);
    return SweepResult{.controls = std::move(controls),
                       .history = std::move(history),
                       .changes = std::move(changes),
                       .iterations = iterations,
                       .converged = converged,
                       .warning = std::move(warning),
                       .forward = std::move(forward),
                       .costate = std::move(costate),
                       .switching = std::move(switching)};
}

Profile stationary_intensity(const Scenario& s) {
    return Profile::from_function(s.age_grid, [&](double a) { return s.control(INFINITY, a); });
}

std::vector<double> uniform_points(double lo, double hi, int count) {
    if (count < 1) throw DomainError("points", "must be at least 1");
    if (count == 1) return {lo};
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) out[k] = lo + (hi - lo) * k / (count - 1);
    out.back() = hi;
    return out;
}

namespace {

// Intensity shape with unit level on the control window.
Profile intensity_shape(const Scenario& s) {
    const AgeGrid& ag = s.age_grid;
    if (const auto* w = std::get_if<WindowIntensity>(&s.control.intensity)) {
        return Profile::from_function(ag, [&](double a) { return (a >= w->a_lo && a <= w->a_hi) ? 1.0 : 0.0; });
    }
    const auto& t = std::get<Tabulated>(s.control.intensity);
    const double peak = max_abs(t.values);
    if (peak == 0.0) return Profile(ag);
    return Profile::from_function(ag, [&](double a) { return t(a) / peak; });
}

YieldRow sweep_point(const Scenario& s, const Profile& shape, double h, Mechanisms m) {
    const double p = s.inflow(0.0);
    Profile u(shape.grid());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = h * shape[i];
    YieldRow row{.h = h};
    if (m.rate) {
        const StationaryRateResult r = stationary_rate_self_consistent(s.mortality, u, p);
        row.y_rate = r.solution.yield;
        row.e_rate = r.solution.aggregate;
        row.rate_truncated = r.solution.crossing_age.has_value();
    }
    if (m.effort) {
        const StationaryEffortResult e = stationary_effort_profile(s.mortality, u, p);
        Profile density(u.grid());
        for (std::size_t i = 0; i < u.size(); ++i) density[i] = u[i] * e.profile[i];
        row.y_effort = trapezoid(density);
        row.e_effort = e.aggregate;
    }
    return row;
}

}  // namespace

std::vector<YieldRow> yield_sweep(const Scenario& s, std::span<const double> h_values, Mechanisms m, unsigned jobs) {
    const double upper = std::min(m.rate ? s.economics.bounds.u_max : INFINITY,
                                  m.effort ? s.economics.bounds.w_max : INFINITY);
    for (double h : h_values)
        if (!(h >= 0.0 && h <= upper)) throw DomainError("h_values", "intensity outside [0, min(u_max, w_max)]");

    const Profile shape = intensity_shape(s);
    std::vector<YieldRow> rows(h_values.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t k; (k = next.fetch_add(1)) < rows.size();) {
            try {
                rows[k] = sweep_point(s, shape, h_values[k], m);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(rows.size())));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return rows;
}

}  // namespace agestruct
