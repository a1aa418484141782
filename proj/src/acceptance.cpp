#include "agestruct/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <unistd.h>

#include "json.hpp"

#include "agestruct/adjoint.hpp"
#include "agestruct/cli.hpp"
#include "agestruct/control.hpp"
#include "agestruct/presets.hpp"
#include "agestruct/stationary.hpp"
#include "agestruct/transport.hpp"

namespace agestruct::acceptance {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Check bound(const std::string& name, double value, double limit) {
    return {name, value <= limit, sci(value) + " <= " + sci(limit)};
}

// 1. pure advection at dt = spacing against the characteristic solution
std::vector<Check> exact_advection() {
    const auto t0 = std::chrono::steady_clock::now();
    const AgeGrid ages(10.0, 200);
    const double h = ages.spacing();
    auto p = [](double t) { return 0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * t / 8.0); };
    // x0(0) = p(0), so the characteristic through the origin is unambiguous.
    auto x0 = [](double a) { return 0.5 + 0.4 * std::sin(0.7 * a); };
    std::vector<double> nodes = ages.nodes(), init;
    for (double a : nodes) init.push_back(x0(a));

    json doc{{"age_grid", {{"max_age", 10.0}, {"n_nodes", 200}}},
             {"time_grid", {{"horizon", 400 * h}, {"n_steps", 400}}},
             {"mortality", {{"baseline", {{"type", "linear"}, {"m0", 0.0}, {"m1", 0.0}}}}},
             {"economics",
              {{"discount_rate", 0.05},
               {"unit_value", {{"type", "constant"}, {"value", 1.0}}},
               {"inflow_cost", {{"type", "constant"}, {"value", 0.0}}},
               {"bounds", {{"u_max", 1.0}, {"w_max", 1.0}, {"p_max", 1.0}}}}},
             {"control", {{"kind", "rate"}, {"intensity", {{"type", "window"}, {"a_lo", 0.0}, {"a_hi", 10.0}, {"level", 0.0}}}}},
             {"inflow", {{"type", "sinusoid"}, {"p0", 0.5}, {"p1", 0.3}, {"period", 8.0}}},
             {"initial_profile", {{"type", "tabulated"}, {"ages", nodes}, {"values", init}}}};
    const Scenario s = parse_scenario(doc.dump());
    const SolveReport r = solve_rate_forward(s);

    double err = 0.0;
    const TimeGrid& tg = s.time_grid;
    for (std::size_t n = 0; n < tg.size(); ++n) {
        const double t = tg.time(n);
        for (std::size_t i = 0; i < ages.size(); ++i) {
            const double a = ages.node(i);
            const double exact = a <= t + 1e-9 ? p(t - a) : x0(a - t);
            err = std::max(err, std::abs(r.state(n, i) - exact));
        }
    }
    const double elapsed = seconds_since(t0);
    return {bound("max abs error", err, 1e-12), bound("runtime s", elapsed, 1.0)};
}

// 2. closed-form stationary profiles
std::vector<Check> closed_forms() {
    const AgeGrid g(10.0, 500);
    const MortalitySpec constant{LinearAgeLaw{0.1, 0.0}, 0.0};
    const Profile u(g, 0.05);
    const Profile rate = stationary_rate_profile(constant, u, 1.0).profile;
    double rel_rate = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double exact = 1.5 * std::exp(-0.1 * g.node(i)) - 0.5;
        rel_rate = std::max(rel_rate, std::abs(rate[i] - exact) / std::abs(exact));
    }

    const MortalitySpec base{LinearAgeLaw{0.01, 0.005}, 0.0};
    const Profile effort = stationary_effort_profile(base, Profile(g), 1.0).profile;
    double rel_effort = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = g.node(i);
        const double exact = std::exp(-(0.01 * a + 0.0025 * a * a));
        rel_effort = std::max(rel_effort, std::abs(effort[i] - exact) / exact);
    }
    return {bound("rate profile rel error", rel_rate, 1e-5), bound("effort survival rel error", rel_effort, 1e-5)};
}

// 3. damped fixed point against bisection
std::vector<Check> fixed_point() {
    const Scenario s = preset_scenario("profiles");
    const AgeGrid& g = s.age_grid;
    const Profile w = stationary_intensity(s);
    const double p = s.inflow(0.0);
    std::vector<Check> out;

    int iterations = 0;
    double last = INFINITY, E = NAN;
    try {
        const StationaryEffortResult r = stationary_effort_profile(s.mortality, w, p);
        iterations = r.iterations;
        last = r.residual_history.back();
        E = r.aggregate;
    } catch (const std::exception& e) {
        return {{"converged", false, e.what()}};
    }
    out.push_back(bound("final |E_k+1 - E_k|", last, 1e-10));
    out.push_back({"iterations", iterations <= 200, std::to_string(iterations) + " <= 200"});

    // Independent evaluation of Phi(E) = int p exp(-int (mu + alpha E + w)).
    const double h = g.spacing();
    auto phi = [&](double e) {
        double cum = 0.0, total = 0.0, prev_rate = 0.0, prev_x = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double a = g.node(i);
            const double rate = 0.01 + 0.005 * a + 0.002 * e + w[i];
            if (i > 0) cum += 0.5 * h * (prev_rate + rate);
            const double x = p * std::exp(-cum);
            if (i > 0) total += 0.5 * h * (prev_x + x);
            prev_rate = rate;
            prev_x = x;
        }
        return total;
    };
    double lo = 0.0, hi = phi(0.0);
    for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
        const double mid = 0.5 * (lo + hi);
        (phi(mid) - mid > 0.0 ? lo : hi) = mid;
    }
    out.push_back(bound("|E* - bisection|", std::abs(E - 0.5 * (lo + hi)), 1e-8));
    return out;
}

// 4. stationary adjoint formula against a backward RK4 solve of the ODE
std::vector<Check> stationary_adjoint_check() {
    const Scenario s = preset_scenario("switching");
    const AgeGrid& g = s.age_grid;
    const Profile eta = s.multiplier_or_zero();
    const double r = s.economics.discount_rate;
    const Profile lambda = stationary_adjoint(s.mortality, eta, r);

    // lambda' = (r + mu) lambda - eta, eta linear between nodes.
    const int sub = 32;
    const double h = g.spacing() / sub;
    auto eta_at = [&](std::size_t cell, double frac) { return (1.0 - frac) * eta[cell] + frac * eta[cell + 1]; };
    std::vector<double> oracle(g.size(), 0.0);
    double y = 0.0;
    for (std::size_t j = g.last(); j-- > 0;) {
        const double a0 = g.node(j);
        for (int k = sub; k > 0; --k) {
            // integrate from a0 + k h down to a0 + (k - 1) h
            auto f = [&](double a, double lam) {
                const double frac = (a - a0) / g.spacing();
                return (r + 0.01 + 0.005 * a) * lam - eta_at(j, frac);
            };
            const double a = a0 + k * h;
            const double k1 = f(a, y);
            const double k2 = f(a - 0.5 * h, y - 0.5 * h * k1);
            const double k3 = f(a - 0.5 * h, y - 0.5 * h * k2);
            const double k4 = f(a - h, y - h * k3);
            y -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        oracle[j] = y;
    }
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        err = std::max(err, std::abs(lambda[i] - oracle[i]));
        scale = std::max(scale, std::abs(oracle[i]));
    }
    return {bound("max rel error", err / scale, 1e-6),
            {"lambda(A) = 0", lambda[g.last()] == 0.0, "lambda(A) = " + sci(lambda[g.last()])}};
}

// 5. adjoint gradients against central differences
std::vector<Check> gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario rate = preset_scenario("gradcheck");
    const Scenario effort = preset_scenario("gradcheck-effort");
    const GradientCheck u = gradient_check(rate, Channel::rate_u, {4.0, 5.0, 2.0, 6.0, 1e-4});
    const GradientCheck p = gradient_check(rate, Channel::rate_p, {1.0, 2.0, 0.0, 0.0, 1e-4});
    const GradientCheck w = gradient_check(effort, Channel::effort_w, {4.0, 5.0, 4.0, 6.0, 1e-4});
    const GradientCheck ablated = gradient_check(effort, Channel::effort_w, {4.0, 5.0, 4.0, 6.0, 1e-4}, false);
    const double ratio = ablated.rel_err / std::max(w.rel_err, 1e-300);
    return {bound("rate-u rel_err", u.rel_err, 1e-3),
            bound("rate-p rel_err", p.rel_err, 1e-3),
            bound("effort-w rel_err", w.rel_err, 1e-3),
            {"ablated effort-w fails", ablated.rel_err > 1e-3 && ratio >= 10.0,
             "rel_err " + sci(ablated.rel_err) + ", " + sci(ratio) + "x the full error"},
            bound("runtime s", seconds_since(t0), 30.0)};
}

// 6. summation by parts on random fields
std::vector<Check> duality() {
    const Scenario s = preset_scenario("gradcheck");
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        Field2D lam(s.time_grid, s.age_grid), dx(s.time_grid, s.age_grid);
        for (std::size_t n = 0; n < lam.rows(); ++n)
            for (std::size_t i = 0; i < lam.cols(); ++i) {
                lam(n, i) = U(rng);
                dx(n, i) = U(rng);
            }
        worst = std::max(worst, std::abs(rate_duality_terms(s, lam, dx).residual()));
    }
    return {bound("max residual over 20 pairs", worst, 1e-10)};
}

// 7. balance residual under 2x refinement
std::vector<Check> balance_order() {
    const json doc = preset("dynamics").document;
    auto max_residual = [](const json& d) {
        const Scenario s = parse_scenario(d.dump());
        const SolveReport r = solve_rate_forward(s);
        double m = 0.0;
        for (double v : r.balance_residual.values) m = std::max(m, std::abs(v));
        return m;
    };
    const double coarse = max_residual(doc);
    const double fine = max_residual(refine_document(doc, 2));
    const double ratio = coarse / fine;
    return {{"residual ratio in [1.7, 2.3]", ratio >= 1.7 && ratio <= 2.3,
             sci(coarse) + " / " + sci(fine) + " = " + std::to_string(ratio)}};
}

// 8. sweep properties
std::vector<Check> sweep_properties() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = preset_scenario("comparison");
    const std::vector<double> hs = uniform_points(0.0, 0.5, 51);
    const unsigned jobs = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    const std::vector<YieldRow> rows = yield_sweep(s, hs, {}, jobs);
    const double elapsed = seconds_since(t0);

    double second = -INFINITY;
    for (std::size_t k = 1; k + 1 < rows.size(); ++k)
        second = std::max(second, rows[k + 1].y_effort - 2.0 * rows[k].y_effort + rows[k - 1].y_effort);
    double excess = -INFINITY;
    for (const auto& r : rows)
        if (r.h > 0.0) excess = std::max(excess, r.e_rate - r.e_effort);

    double peak = 0.0, after = 0.0;
    std::optional<double> onset;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double inc = rows[k].y_rate - rows[k - 1].y_rate;
        peak = std::max(peak, inc);
        if (onset) after = std::max(after, inc);
        if (!onset && rows[k].rate_truncated) onset = rows[k].h;
    }
    const double ratio = peak > 0.0 ? after / peak : 0.0;

    return {{"zero", rows.front().y_rate == 0.0 && rows.front().y_effort == 0.0,
             "Y_R(0) = " + sci(rows.front().y_rate) + ", Y_E(0) = " + sci(rows.front().y_effort)},
            bound("concavity", second, 1e-8),
            bound("depletion", excess, 0.0),
            {"plateau", onset && ratio <= 0.01,
             "onset h = " + (onset ? std::to_string(*onset) : std::string("none")) +
                 ", max increment after onset / peak = " + sci(ratio) + " (limit 1e-2)"},
            bound("runtime s", elapsed, 60.0)};
}

// 9. forward-backward sweep output against the switching conditions
std::vector<Check> sweep_self_consistency() {
    const Scenario s = preset_scenario("fbs");
    const SweepResult r = forward_backward_sweep(s, {.relaxation = 1.0, .threshold = 0.0});
    const SwitchingConsistency c = check_switching(s, r.switching, r.controls);
    const SlacknessResidual slack = complementary_slackness_residual(r.forward.state, *r.costate.multiplier_estimate);
    return {{"switching inequalities", c.violations == 0,
             std::to_string(c.violations) + " violations in " + std::to_string(c.checked) + " nodes" +
                 (r.converged ? ", converged in " + std::to_string(r.iterations) : ", not converged")},
            bound("slackness residual", slack.max_abs, 1e-8)};
}

// 10. byte-identical CSVs across repeated preset runs
std::vector<Check> determinism() {
    const std::vector<std::vector<std::string>> commands{
        {"stationary", "--preset", "profiles"}, {"dynamics", "--preset", "dynamics"},
        {"adjoint", "--preset", "switching"},   {"sweep", "--preset", "comparison"},
        {"gradcheck", "--all"},                 {"fbs", "--preset", "fbs"}};
    const fs::path root = fs::temp_directory_path() / ("agestruct-determinism-" + std::to_string(::getpid()));
    auto slurp = [](const fs::path& f) {
        std::ifstream in(f, std::ios::binary);
        std::stringstream b;
        b << in.rdbuf();
        return b.str();
    };

    std::vector<Check> out;
    for (const auto& cmd : commands) {
        std::vector<fs::path> dirs{root / (cmd[0] + "-1"), root / (cmd[0] + "-2")};
        std::string detail;
        bool pass = true;
        for (const auto& d : dirs) {
            fs::create_directories(d);
            std::vector<std::string> args = cmd;
            args.insert(args.end(), {"--out", d.string()});
            std::ostringstream sink;
            const int code = cli::run(args, sink, sink);
            if (code == cli::io_error) {
                pass = false;
                detail = "run failed: " + sink.str();
            }
        }
        int files = 0;
        for (const auto& e : fs::directory_iterator(dirs[0])) {
            if (e.path().extension() != ".csv") continue;
            ++files;
            if (slurp(e.path()) != slurp(dirs[1] / e.path().filename())) {
                pass = false;
                detail += e.path().filename().string() + " differs; ";
            }
        }
        if (files == 0) pass = false;
        out.push_back({cmd[0], pass, detail.empty() ? std::to_string(files) + " CSVs identical" : detail});
    }
    std::error_code ec;
    fs::remove_all(root, ec);
    return out;
}

struct Entry {
    int id;
    const char* title;
    std::function<std::vector<Check>()> run;
};

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries{
        {1, "exact advection at dt = spacing", exact_advection},
        {2, "closed-form stationary profiles", closed_forms},
        {3, "fixed-point aggregate", fixed_point},
        {4, "stationary adjoint vs ODE oracle", stationary_adjoint_check},
        {5, "gradient checks", gradients},
        {6, "discrete duality", duality},
        {7, "balance law convergence order", balance_order},
        {8, "yield sweep properties", sweep_properties},
        {9, "forward-backward sweep self-consistency", sweep_self_consistency},
        {10, "determinism", determinism},
    };
    return entries;
}

}  // namespace

bool Result::pass() const {
    if (checks.empty()) return false;
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const std::vector<int>& criteria() {
    static const std::vector<int> ids = [] {
        std::vector<int> v;
        for (const auto& e : registry()) v.push_back(e.id);
        return v;
    }();
    return ids;
}

Result run(int id, const std::vector<std::string>& only) {
    for (const auto& e : registry()) {
        if (e.id != id) continue;
        Result r{id, e.title, {}, 0.0};
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r.checks = e.run();
        } catch (const std::exception& ex) {
            r.checks = {{"error", false, ex.what()}};
        }
        r.seconds = seconds_since(t0);
        if (!only.empty()) {
            std::erase_if(r.checks, [&](const Check& c) {
                return std::find(only.begin(), only.end(), c.name) == only.end();
            });
        }
        return r;
    }
    return {id, "unknown criterion", {{"lookup", false, "no criterion " + std::to_string(id)}}, 0.0};
}

std::string format_line(const Result& r) {
    std::ostringstream os;
    os << (r.pass() ? "[PASS] " : "[FAIL] ") << "criterion " << r.id << ": " << r.title << " (";
    os.precision(3);
    os << std::fixed << r.seconds << " s)";
    for (const auto& c : r.checks) os << " | " << (c.pass ? "" : "FAILED ") << c.name << ": " << c.detail;
    return os.str();
}

}  // namespace agestruct::acceptance
