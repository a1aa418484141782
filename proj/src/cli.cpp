#include "agestruct/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "agestruct/acceptance.hpp"
#include "agestruct/adjoint.hpp"
#include "agestruct/control.hpp"
#include "agestruct/csv.hpp"
#include "agestruct/errors.hpp"
#include "agestruct/presets.hpp"
#include "agestruct/stationary.hpp"
#include "agestruct/transport.hpp"

namespace agestruct::cli {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path default_output_dir() {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "out";
}

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Source {
    json source;  // {"preset": name} or {"scenario": path}
    json document;
    std::vector<std::string> artifact_defaults;
    Scenario scenario;
};

struct Common {
    std::string preset;
    std::string scenario;
    std::string out;
};

Source load_source(const Common& c, const std::string& fallback) {
    if (!c.preset.empty() && !c.scenario.empty()) throw SchemaError("arguments", "give either --preset or --scenario");
    if (!c.scenario.empty()) {
        std::ifstream in(c.scenario, std::ios::binary);
        if (!in) throw IoError("cannot read scenario file '" + c.scenario + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        Scenario s = parse_scenario(buf.str());
        return {json{{"scenario", c.scenario}}, json::parse(buf.str()), {}, std::move(s)};
    }
    Preset p = preset(c.preset.empty() ? fallback : c.preset);
    Scenario s = parse_scenario(p.document.dump());
    return {json{{"preset", p.name}}, p.document, p.artifact_defaults, std::move(s)};
}

Scenario reparse(const json& document) { return parse_scenario(document.dump()); }

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
        if (!fs::is_directory(dir_)) throw IoError("output directory '" + dir_.string() + "' does not exist");
    }

    void write(const std::string& name, const csv::Table& table) {
        csv::write(dir_ / name, table);
        files_.push_back(name);
    }

    void manifest(const std::string& command, const Source& src, json diagnostics, double seconds) const {
        for (const auto& f : files_)
            if (fs::file_size(dir_ / f) == 0) throw IoError("output '" + f + "' is empty");
        json m{{"schema", kSchemaVersion},
               {"command", command},
               {"source", src.source},
               {"parameters", json::parse(serialize_scenario(src.scenario))},
               {"artifact_defaults", src.artifact_defaults},
               {"outputs", files_},
               {"diagnostics", std::move(diagnostics)},
               {"wall_time_s", seconds}};
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        if (!out) throw IoError("cannot write manifest in '" + dir_.string() + "'");
        out << m.dump(2) << '\n';
    }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Maximal runs of nodes where `on` holds, as [first, last] node ages.
json intervals(const AgeGrid& g, const std::vector<bool>& on) {
    json out = json::array();
    for (std::size_t i = 0; i < on.size();) {
        if (!on[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < on.size() && on[j + 1]) ++j;
        out.push_back({g.node(i), g.node(j)});
        i = j + 1;
    }
    return out;
}

// Sign changes of a nodal function, linearly interpolated.
json roots(const Profile& f) {
    json out = json::array();
    const AgeGrid& g = f.grid();
    for (std::size_t i = 0; i + 1 < f.size(); ++i) {
        if ((f[i] < 0.0) != (f[i + 1] < 0.0)) out.push_back(g.node(i) + g.spacing() * f[i] / (f[i] - f[i + 1]));
    }
    return out;
}

// ---------------------------------------------------------------- stationary

int cmd_stationary(const Source& src, Outputs& outs, json& diag, std::ostream& out) {
    const Scenario& s = src.scenario;
    const AgeGrid& g = s.age_grid;
    const double p = s.inflow(0.0);
    const Profile u = stationary_intensity(s);
    const Profile zero(g);

    const StationaryRateResult rate = stationary_rate_self_consistent(s.mortality, u, p);
    const StationaryRateResult rate_base = stationary_rate_self_consistent(s.mortality, zero, p);
    const StationaryEffortResult effort = stationary_effort_profile(s.mortality, u, p);
    const StationaryEffortResult effort_base = stationary_effort_profile(s.mortality, zero, p);

    outs.write("rate_profile.csv", csv::profile(rate.solution.profile));
    outs.write("rate_baseline.csv", csv::profile(rate_base.solution.profile));
    outs.write("effort_profile.csv", csv::profile(effort.profile));
    outs.write("effort_baseline.csv", csv::profile(effort_base.profile));

    Profile yield_density(g);
    for (std::size_t i = 0; i < g.size(); ++i) yield_density[i] = u[i] * effort.profile[i];
    diag["rate"] = {{"aggregate", rate.solution.aggregate},
                    {"yield", rate.solution.yield},
                    {"crossing_age", rate.solution.crossing_age ? json(*rate.solution.crossing_age) : json()},
                    {"fixed_point_iterations", rate.iterations}};
    diag["effort"] = {{"aggregate", effort.aggregate},
                      {"yield", trapezoid(yield_density)},
                      {"fixed_point_iterations", effort.iterations},
                      {"residual_history", effort.residual_history}};
    diag["baseline_aggregate"] = {{"rate", rate_base.solution.aggregate}, {"effort", effort_base.aggregate}};
    out << "stationary: E_rate=" << rate.solution.aggregate << " E_effort=" << effort.aggregate << " ("
        << effort.iterations << " fixed-point iterations)\n";
    return Exit::ok;
}

// ------------------------------------------------------------------ dynamics

struct DynamicsOptions {
    int refine = 1;
};

void write_dynamics(const Scenario& s, const SolveReport& r, Outputs& outs, const std::string& suffix) {
    outs.write("state" + suffix + ".csv", csv::field(r.state));
    outs.write("aggregate" + suffix + ".csv", csv::series(r.aggregate));
    outs.write("balance_residual" + suffix + ".csv", csv::series(r.balance_residual));
    if (r.kind == ControlKind::effort) {
        TimeSeries shift{r.aggregate.times, r.aggregate.values};
        for (double& v : shift.values) v *= s.mortality.density_coefficient;
        outs.write("mortality_shift" + suffix + ".csv", csv::series(shift));
    }
}

int cmd_dynamics(const Source& src, const DynamicsOptions& opt, Outputs& outs, json& diag, std::ostream& out) {
    const Scenario& s = src.scenario;
    const SolveReport r = solve_forward(s, evaluate_controls(s));
    write_dynamics(s, r, outs, "");

    // Age profiles at five evenly spaced times.
    const TimeGrid& tg = s.time_grid;
    csv::Table selected{{"t", "a", "value"}, {}};
    for (int k = 0; k <= 4; ++k) {
        const std::size_t n = tg.steps() * k / 4;
        for (std::size_t i = 0; i < s.age_grid.size(); ++i) selected.add({tg.time(n), s.age_grid.node(i), r.state(n, i)});
    }
    outs.write("profiles.csv", selected);

    const double res = max_abs(r.balance_residual.values);
    diag["kind"] = std::string(to_string(r.kind));
    diag["max_balance_residual"] = res;
    diag["truncated_nodes"] = static_cast<long>(std::count(r.truncated.values().begin(), r.truncated.values().end(), 1.0));
    if (r.kind == ControlKind::effort) {
        const auto [lo, hi] = std::minmax_element(r.aggregate.values.begin(), r.aggregate.values.end());
        diag["nonlocal"] = {{"density_coefficient", s.mortality.density_coefficient},
                            {"mortality_shift_min", s.mortality.density_coefficient * *lo},
                            {"mortality_shift_max", s.mortality.density_coefficient * *hi}};
    }
    out << "dynamics: max balance residual " << res << '\n';

    if (opt.refine > 1) {
        const Scenario fine = reparse(refine_document(src.document, opt.refine));
        const SolveReport rf = solve_forward(fine, evaluate_controls(fine));
        write_dynamics(fine, rf, outs, "_refined");
        const double res_fine = max_abs(rf.balance_residual.values);
        const double ratio = res / res_fine;
        diag["refinement"] = {{"factor", opt.refine},
                              {"max_balance_residual", res_fine},
                              {"residual_ratio", ratio},
                              {"observed_order", std::log(ratio) / std::log(static_cast<double>(opt.refine))}};
        out << "dynamics: refined x" << opt.refine << " residual " << res_fine << ", ratio " << ratio << '\n';
    }
    return Exit::ok;
}

// ------------------------------------------------------------------- adjoint

struct AdjointOptions {
    std::optional<double> eta0;
    std::string mode = "stationary";
    double horizon = 100.0;
    std::optional<double> threshold;
};

Profile scaled_multiplier(const Scenario& s, std::optional<double> eta0) {
    Profile eta = s.multiplier_or_zero();
    if (!eta0) return eta;
    const double peak = max_abs(eta.values());
    if (peak == 0.0) throw DomainError("multiplier", "--eta0 needs a nonzero multiplier profile");
    for (std::size_t i = 0; i < eta.size(); ++i) eta[i] *= *eta0 / peak;
    return eta;
}

Scenario with_horizon(Scenario s, double horizon) {
    const double h = s.age_grid.spacing();
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / h - 1e-9));
    s.time_grid = TimeGrid(horizon, steps, s.age_grid);
    return s;
}

int cmd_adjoint(const Source& src, const AdjointOptions& opt, Outputs& outs, json& diag, std::ostream& out) {
    const Scenario& s = src.scenario;
    const AgeGrid& g = s.age_grid;
    const double r = s.economics.discount_rate;
    const Profile eta = scaled_multiplier(s, opt.eta0);
    const Profile c = s.economics.unit_value_profile(g);
    const Profile lambda = stationary_adjoint(s.mortality, eta, r);
    const double k0 = inflow_cost_series(s).front();

    if (opt.mode == "stationary") {
        const bool figure = src.source.contains("preset") && src.source["preset"] == "switching";
        const double eps = opt.threshold.value_or(figure ? 0.05 : 0.0);
        const StationarySwitching sw = stationary_switching(c, lambda, s.economics.bounds.u_max, eps);

        csv::Table costate{{"a", "lambda", "c", "eta"}, {}};
        csv::Table switching{{"a", "sigma_u", "u_star"}, {}};
        for (std::size_t i = 0; i < g.size(); ++i) {
            costate.add({g.node(i), lambda[i], c[i], eta[i]});
            switching.add({g.node(i), sw.sigma_u[i], sw.synthesized_u[i]});
        }
        outs.write("costate.csv", costate);
        outs.write("switching.csv", switching);

        std::vector<bool> harvest(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) harvest[i] = sw.synthesized_u[i] > 0.0;
        const Profile x = unharvested_profile(s.mortality, g, s.inflow(0.0));
        double slack = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) slack = std::max(slack, std::abs(eta[i] * x[i]));

        diag["threshold"] = eps;
        diag["lambda_at_0"] = lambda[0];
        diag["lambda_at_A"] = lambda[g.last()];
        diag["sigma_p"] = lambda[0] - k0;
        diag["p_star"] = lambda[0] - k0 > eps ? s.economics.bounds.p_max : 0.0;
        diag["harvest_intervals"] = intervals(g, harvest);
        diag["sigma_u_roots"] = roots(sw.sigma_u);
        diag["slackness_residual_unharvested"] = slack;
        diag["slackness_note"] = "eta is prescribed, not derived; a nonzero residual is expected";
        out << "adjoint: lambda(0)=" << lambda[0] << " sigma_p=" << lambda[0] - k0 << '\n';
        return Exit::ok;
    }
    if (opt.mode != "pde") throw SchemaError("mode", "expected 'stationary' or 'pde'");

    // Time-dependent solve; far from T it should approach the stationary costate.
    Scenario ts = with_horizon(s, opt.horizon);
    ts.multiplier = eta;
    const AdjointReport rep = solve_rate_adjoint(ts, broadcast(ts, eta));

    const Scenario fine_base = reparse(refine_document(src.document, 2));
    Scenario fine = with_horizon(fine_base, opt.horizon);
    Profile eta_fine = scaled_multiplier(fine_base, opt.eta0);
    const AdjointReport rep_fine = solve_rate_adjoint(fine, broadcast(fine, eta_fine));

    csv::Table initial{{"a", "lambda_pde", "lambda_stationary", "lambda_extrapolated"}, {}};
    double diff = 0.0, diff_extrapolated = 0.0;
    const double scale = std::max(max_abs(lambda.values()), 1e-300);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double extrapolated = 2.0 * rep_fine.costate(0, 2 * i) - rep.costate(0, i);
        initial.add({g.node(i), rep.costate(0, i), lambda[i], extrapolated});
        diff = std::max(diff, std::abs(rep.costate(0, i) - lambda[i]));
        diff_extrapolated = std::max(diff_extrapolated, std::abs(extrapolated - lambda[i]));
    }
    outs.write("costate_initial.csv", initial);
    TimeSeries boundary{ts.time_grid.times(), std::vector<double>(ts.time_grid.size())};
    for (std::size_t n = 0; n < ts.time_grid.size(); ++n) boundary.values[n] = rep.costate(n, 0);
    outs.write("boundary_costate.csv", csv::series(boundary, "lambda0"));

    diag["mode"] = "pde";
    diag["horizon"] = rep.horizon;
    diag["discount_at_horizon"] = rep.discount_at_horizon;
    diag["terminal_time_condition"] = rep.terminal_time_condition;
    diag["max_abs_diff_vs_stationary"] = diff;
    diag["max_rel_diff_vs_stationary"] = diff / scale;
    diag["max_abs_diff_extrapolated"] = diff_extrapolated;
    diag["max_rel_diff_extrapolated"] = diff_extrapolated / scale;
    out << "adjoint (pde): max |lambda(0,.) - stationary| = " << diff << ", extrapolated " << diff_extrapolated
        << '\n';
    return Exit::ok;
}

// --------------------------------------------------------------------- sweep

struct SweepCliOptions {
    double h_max = 0.5;
    int points = 51;
    std::string mechanism = "both";
    unsigned jobs = 0;
};

int cmd_sweep(const Source& src, const SweepCliOptions& opt, Outputs& outs, json& diag, std::ostream& out) {
    Mechanisms m;
    if (opt.mechanism == "rate") m.effort = false;
    else if (opt.mechanism == "effort") m.rate = false;
    else if (opt.mechanism != "both") throw SchemaError("mechanism", "expected rate, effort or both");
    const unsigned jobs = opt.jobs ? opt.jobs : std::max(1u, std::min(8u, std::thread::hardware_concurrency()));

    const std::vector<double> hs = uniform_points(0.0, opt.h_max, opt.points);
    const std::vector<YieldRow> rows = yield_sweep(src.scenario, hs, m, jobs);

    csv::Table t;
    t.header = {"h"};
    if (m.rate) t.header.insert(t.header.end(), {"Y_rate"});
    if (m.effort) t.header.insert(t.header.end(), {"Y_effort"});
    if (m.rate) t.header.insert(t.header.end(), {"E_rate"});
    if (m.effort) t.header.insert(t.header.end(), {"E_effort"});
    for (const auto& r : rows) {
        std::vector<double> v{r.h};
        if (m.rate) v.push_back(r.y_rate);
        if (m.effort) v.push_back(r.y_effort);
        if (m.rate) v.push_back(r.e_rate);
        if (m.effort) v.push_back(r.e_effort);
        t.add(v);
    }
    outs.write("sweep.csv", t);

    diag["points"] = opt.points;
    diag["h_max"] = opt.h_max;
    diag["jobs"] = jobs;
    diag["yield_note"] = "instantaneous stationary yield, not a discounted objective";
    if (m.effort && rows.size() >= 3) {
        double worst = -INFINITY;
        for (std::size_t k = 1; k + 1 < rows.size(); ++k)
            worst = std::max(worst, rows[k + 1].y_effort - 2.0 * rows[k].y_effort + rows[k - 1].y_effort);
        diag["y_effort_max_second_difference"] = worst;
        diag["y_effort_concave"] = worst <= 1e-8;
    }
    if (m.rate && m.effort) {
        bool ordered = true;
        for (const auto& r : rows)
            if (r.h > 0.0 && r.e_rate > r.e_effort) ordered = false;
        diag["rate_depletes_more"] = ordered;
    }
    if (m.rate && rows.size() >= 2) {
        double peak = 0.0, after = 0.0;
        std::optional<double> onset;
        for (std::size_t k = 1; k < rows.size(); ++k) {
            const double inc = rows[k].y_rate - rows[k - 1].y_rate;
            peak = std::max(peak, inc);
            if (onset) after = std::max(after, inc);
            if (!onset && rows[k].rate_truncated) onset = rows[k].h;
        }
        diag["truncation_onset_h"] = onset ? json(*onset) : json();
        diag["y_rate_peak_increment"] = peak;
        diag["y_rate_max_increment_after_onset"] = after;
        diag["y_rate_increment_ratio_after_onset"] = peak > 0.0 ? after / peak : 0.0;
    }
    out << "sweep: " << rows.size() << " points on " << jobs << " worker(s)\n";
    return Exit::ok;
}

// ----------------------------------------------------------------- gradcheck

struct GradOptions {
    bool all = false;
    std::string channel;
    bool ablate = false;
    std::string grid = "coarse";
};

constexpr double kGradientTolerance = 1e-3;

int cmd_gradcheck(const Common& common, const GradOptions& opt, Outputs& outs, json& diag, std::ostream& out,
                  Source& manifest_source) {
    if (opt.grid != "coarse" && opt.grid != "fine") throw SchemaError("grid", "expected coarse or fine");
    const int factor = opt.grid == "fine" ? 2 : 1;

    std::vector<Channel> channels;
    if (!opt.channel.empty() && !opt.all) channels.push_back(parse_channel(opt.channel));
    else channels = {Channel::rate_u, Channel::rate_p, Channel::effort_w};
    const bool ablation_row = opt.all || opt.channel.empty();

    auto scenario_for = [&](Channel ch) {
        if (!common.scenario.empty() || !common.preset.empty()) {
            Source s = load_source(common, "");
            return reparse(refine_document(s.document, factor));
        }
        return reparse(refine_document(preset(ch == Channel::effort_w ? "gradcheck-effort" : "gradcheck").document,
                                       factor));
    };
    auto probe_for = [](Channel ch) {
        switch (ch) {
            case Channel::rate_u: return Probe{4.0, 5.0, 2.0, 6.0, 1e-4};
            case Channel::rate_p: return Probe{1.0, 2.0, 0.0, 0.0, 1e-4};
            case Channel::effort_w: return Probe{4.0, 5.0, 4.0, 6.0, 1e-4};
        }
        return Probe{};
    };

    csv::Table t{{"channel", "nonlocal", "adjoint_gradient", "fd_gradient", "rel_err", "pass"}, {}};
    bool all_pass = true;
    json checks = json::array();
    auto record = [&](const std::string& name, const GradientCheck& g, bool pass) {
        t.rows.push_back({name, g.nonlocal ? "1" : "0", csv::format(g.adjoint_gradient), csv::format(g.fd_gradient),
                          csv::format(g.rel_err), pass ? "1" : "0"});
        checks.push_back({{"check", name},
                          {"adjoint_gradient", g.adjoint_gradient},
                          {"fd_gradient", g.fd_gradient},
                          {"rel_err", g.rel_err},
                          {"pass", pass}});
        out << std::left << std::setw(22) << name << " rel_err " << std::scientific << std::setprecision(3) << g.rel_err
            << std::defaultfloat << (pass ? "  PASS" : "  FAIL") << '\n';
        all_pass = all_pass && pass;
    };

    std::optional<double> effort_err;
    for (Channel ch : channels) {
        const bool nonlocal = !(ch == Channel::effort_w && opt.ablate && !ablation_row);
        const GradientCheck g = gradient_check(scenario_for(ch), ch, probe_for(ch), nonlocal);
        if (ch == Channel::effort_w && nonlocal) effort_err = g.rel_err;
        record(std::string(to_string(ch)) + (nonlocal ? "" : " (ablated)"), g, g.rel_err <= kGradientTolerance);
    }
    if (ablation_row && effort_err) {
        const GradientCheck g = gradient_check(scenario_for(Channel::effort_w), Channel::effort_w,
                                               probe_for(Channel::effort_w), false);
        // The ablated adjoint must miss by at least ten times the full error.
        const bool pass = g.rel_err > kGradientTolerance && g.rel_err >= 10.0 * *effort_err;
        record("effort-w ablation", g, pass);
        diag["ablation_error_ratio"] = g.rel_err / std::max(*effort_err, 1e-300);
    }
    outs.write("gradcheck.csv", t);
    diag["tolerance"] = kGradientTolerance;
    diag["grid"] = opt.grid;
    diag["checks"] = checks;
    manifest_source.scenario = scenario_for(channels.front());
    return all_pass ? Exit::ok : Exit::check_failed;
}

// ----------------------------------------------------------------------- fbs

struct FbsOptions {
    double relaxation = 1.0;
    int max_iter = 100;
    double tolerance = 1e-12;
    double threshold = 0.0;
};

int cmd_fbs(const Source& src, const FbsOptions& opt, Outputs& outs, json& diag, std::ostream& out) {
    const Scenario& s = src.scenario;
    const SweepResult res = forward_backward_sweep(
        s, {.relaxation = opt.relaxation, .max_iter = opt.max_iter, .tolerance = opt.tolerance, .threshold = opt.threshold});

    outs.write("control_u.csv", csv::field(res.controls.intensity));
    outs.write("control_p.csv", csv::series({s.time_grid.times(), res.controls.inflow}));
    csv::Table history{{"iteration", "objective", "change"}, {}};
    for (std::size_t k = 0; k < res.history.size(); ++k)
        history.add({static_cast<double>(k + 1), res.history[k].value, k < res.changes.size() ? res.changes[k] : NAN});
    outs.write("objective.csv", history);
    csv::Table sw{{"t", "a", "sigma_u", "u_star"}, {}};
    for (std::size_t n = 0; n < s.time_grid.size(); ++n)
        for (std::size_t i = 0; i < s.age_grid.size(); ++i)
            sw.add({s.time_grid.time(n), s.age_grid.node(i), res.switching.sigma_u(n, i), res.controls.intensity(n, i)});
    outs.write("switching.csv", sw);
    const Field2D& eta = *res.costate.multiplier_estimate;
    outs.write("multiplier_estimate.csv", csv::field(eta));

    const SwitchingConsistency cons = check_switching(s, res.switching, res.controls);
    const SlacknessResidual slack = complementary_slackness_residual(res.forward.state, eta);
    const ObjectiveValue J = objective_rate(s, res.forward);
    diag["converged"] = res.converged;
    diag["iterations"] = res.iterations;
    diag["warning"] = res.warning ? json(*res.warning) : json();
    diag["objective"] = {{"value", J.value}, {"horizon", J.horizon}, {"tail_bound", J.tail_bound}};
    diag["switching_nodes_checked"] = cons.checked;
    diag["switching_violations"] = cons.violations;
    diag["slackness_residual"] = slack.max_abs;
    diag["negative_multiplier_estimates"] = res.costate.negative_multiplier_nodes;
    diag["multiplier_note"] = "eta on the active set is a heuristic consistency estimate";
    if (res.warning) out << "fbs: warning: " << *res.warning << '\n';
    out << "fbs: " << res.iterations << " iterations, J=" << J.value << ", violations " << cons.violations
        << ", slackness " << slack.max_abs << '\n';
    return (cons.violations == 0 && slack.max_abs <= 1e-8) ? Exit::ok : Exit::check_failed;
}

// ------------------------------------------------------------------ validate

int cmd_validate(const std::vector<int>& ids, const std::vector<std::string>& only, std::ostream& out) {
    bool pass = true;
    for (int id : ids.empty() ? acceptance::criteria() : ids) {
        const acceptance::Result r = acceptance::run(id, only);
        out << acceptance::format_line(r) << std::endl;
        pass = pass && r.pass();
    }
    return pass ? Exit::ok : Exit::check_failed;
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--preset", c.preset, "Named scenario preset");
    app->add_option("--scenario", c.scenario, "Scenario JSON file");
    app->add_option("--out", c.out, std::string("Output directory (default $") + kOutputDirEnv + " or ./out)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Age-structured harvesting: solvers, adjoints and presets", "agestruct"};
    app.require_subcommand(1);

    Common common;
    DynamicsOptions dyn;
    AdjointOptions adj;
    SweepCliOptions swp;
    GradOptions grad;
    FbsOptions fbs;
    std::vector<int> criteria;
    std::vector<std::string> checks;

    auto* stationary = app.add_subcommand("stationary", "Stationary profiles for both mechanisms");
    auto* dynamics = app.add_subcommand("dynamics", "Time-dependent forward solve");
    auto* adjoint = app.add_subcommand("adjoint", "Adjoint and switching structure");
    auto* sweep = app.add_subcommand("sweep", "Yield and depletion sweep over a common intensity");
    auto* gradcheck = app.add_subcommand("gradcheck", "Adjoint gradients against finite differences");
    auto* fbs_cmd = app.add_subcommand("fbs", "Forward-backward sweep");
    auto* validate = app.add_subcommand("validate", "Run the acceptance suite");
    for (auto* c : {stationary, dynamics, adjoint, sweep, gradcheck, fbs_cmd}) add_common(c, common);

    dynamics->add_option("--refine", dyn.refine, "Also run on a grid refined N times")->check(CLI::PositiveNumber);
    adjoint->add_option("--eta0", adj.eta0, "Peak multiplier level");
    adjoint->add_option("--mode", adj.mode, "stationary | pde");
    adjoint->add_option("--horizon", adj.horizon, "Truncation horizon for --mode pde")->check(CLI::PositiveNumber);
    adjoint->add_option("--threshold", adj.threshold, "Dead zone for the bang-bang proxy");
    sweep->add_option("--h-max", swp.h_max, "Largest intensity");
    sweep->add_option("--points", swp.points, "Number of intensities")->check(CLI::PositiveNumber);
    sweep->add_option("--mechanism", swp.mechanism, "rate | effort | both");
    sweep->add_option("--jobs", swp.jobs, "Worker threads (0 = automatic)");
    gradcheck->add_flag("--all", grad.all, "All channels plus the ablation check");
    gradcheck->add_option("--channel", grad.channel, "rate-u | rate-p | effort-w");
    gradcheck->add_flag("--ablate-nonlocal", grad.ablate, "Drop the nonlocal adjoint term");
    gradcheck->add_option("--grid", grad.grid, "coarse | fine");
    fbs_cmd->add_option("--relaxation", fbs.relaxation, "Relaxation weight in (0, 1]");
    fbs_cmd->add_option("--max-iter", fbs.max_iter, "Iteration cap");
    fbs_cmd->add_option("--tol", fbs.tolerance, "Stop when the control change is at most this");
    fbs_cmd->add_option("--threshold", fbs.threshold, "Dead zone for the switching synthesis");
    validate->add_option("--criterion", criteria, "Criterion number (repeatable)");
    validate->add_option("--check", checks, "Restrict to named checks (repeatable)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Exit::ok : Exit::io_error;
    }

    try {
        if (validate->parsed()) return cmd_validate(criteria, checks, out);

        const fs::path dir = common.out.empty() ? default_output_dir() : fs::path(common.out);
        Outputs outs(dir);
        json diag = json::object();
        const auto start = std::chrono::steady_clock::now();
        int code = Exit::ok;
        std::string name;
        std::optional<Source> src;

        if (stationary->parsed()) {
            name = "stationary";
            src = load_source(common, "profiles");
            code = cmd_stationary(*src, outs, diag, out);
        } else if (dynamics->parsed()) {
            name = "dynamics";
            src = load_source(common, "dynamics");
            code = cmd_dynamics(*src, dyn, outs, diag, out);
        } else if (adjoint->parsed()) {
            name = "adjoint";
            src = load_source(common, "switching");
            code = cmd_adjoint(*src, adj, outs, diag, out);
        } else if (sweep->parsed()) {
            name = "sweep";
            src = load_source(common, "comparison");
            code = cmd_sweep(*src, swp, outs, diag, out);
        } else if (gradcheck->parsed()) {
            name = "gradcheck";
            src = load_source(common, "gradcheck");
            code = cmd_gradcheck(common, grad, outs, diag, out, *src);
        } else if (fbs_cmd->parsed()) {
            name = "fbs";
            src = load_source(common, "fbs");
            code = cmd_fbs(*src, fbs, outs, diag, out);
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        outs.manifest(name, *src, std::move(diag), seconds);
        return code;
    } catch (const SolverError& e) {
        err << "error: solver failure: " << e.what() << '\n';
        return Exit::check_failed;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::io_error;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return Exit::io_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return Exit::io_error;
    }
}

}  // namespace agestruct::cli
