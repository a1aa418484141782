#include "agestruct/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "agestruct/errors.hpp"

namespace agestruct {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json& require(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(join(path, key), "missing field");
    return *it;
}

double number(const json& obj, const std::string& path, const std::string& key) {
    const json& v = require(obj, path, key);
    if (!v.is_number()) throw SchemaError(join(path, key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw DomainError(join(path, key), "must be finite");
    return x;
}

std::optional<double> optional_number(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return number(obj, path, key);
}

std::size_t count(const json& obj, const std::string& path, const std::string& key) {
    const json& v = require(obj, path, key);
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw SchemaError(join(path, key), "expected an integer");
    const auto n = v.get<long long>();
    if (n <= 0) throw DomainError(join(path, key), "must be positive");
    return static_cast<std::size_t>(n);
}

std::string type_tag(const json& obj, const std::string& path) {
    const json& v = require(obj, path, "type");
    if (!v.is_string()) throw SchemaError(join(path, "type"), "expected a string");
    return v.get<std::string>();
}

std::vector<double> number_array(const json& obj, const std::string& path, const std::string& key) {
    const json& v = require(obj, path, key);
    if (!v.is_array()) throw SchemaError(join(path, key), "expected an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) throw SchemaError(join(path, key), "expected numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

Tabulated parse_table(const json& obj, const std::string& path, const std::string& axis) {
    Tabulated t{number_array(obj, path, axis), number_array(obj, path, "values")};
    if (t.xs.empty() || t.xs.size() != t.values.size())
        throw SchemaError(path, "'" + axis + "' and 'values' must be non-empty and of equal length");
    for (std::size_t i = 1; i < t.xs.size(); ++i)
        if (!(t.xs[i] > t.xs[i - 1])) throw DomainError(join(path, axis), "must be strictly increasing");
    for (double x : t.xs)
        if (!std::isfinite(x)) throw DomainError(join(path, axis), "must be finite");
    for (double x : t.values)
        if (!std::isfinite(x)) throw DomainError(join(path, "values"), "must be finite");
    return t;
}

json table_json(const Tabulated& t, const std::string& axis) {
    return json{{"type", "tabulated"}, {axis, t.xs}, {"values", t.values}};
}

WindowIntensity parse_window(const json& obj, const std::string& path) {
    WindowIntensity w;
    w.a_lo = number(obj, path, "a_lo");
    w.a_hi = number(obj, path, "a_hi");
    w.level = number(obj, path, "level");
    w.ramp_time = optional_number(obj, path, "ramp_time");
    return w;
}

json window_json(const WindowIntensity& w) {
    json j{{"type", "window"}, {"a_lo", w.a_lo}, {"a_hi", w.a_hi}, {"level", w.level}};
    if (w.ramp_time) j["ramp_time"] = *w.ramp_time;
    return j;
}

MortalitySpec parse_mortality(const json& obj) {
    const std::string path = "mortality";
    MortalitySpec m;
    const json& b = require(obj, path, "baseline");
    const std::string bpath = "mortality.baseline";
    const std::string tag = type_tag(b, bpath);
    if (tag == "linear") {
        m.baseline = LinearAgeLaw{number(b, bpath, "m0"), number(b, bpath, "m1")};
    } else if (tag == "tabulated") {
        m.baseline = parse_table(b, bpath, "ages");
    } else {
        throw SchemaError(join(bpath, "type"), "unknown mortality family '" + tag + "'");
    }
    m.density_coefficient = optional_number(obj, path, "density_coefficient").value_or(0.0);
    return m;
}

UnitValue parse_unit_value(const json& obj, const std::string& path) {
    const std::string tag = type_tag(obj, path);
    if (tag == "constant") return ConstantValue{number(obj, path, "value")};
    if (tag == "windowed_sinusoid") {
        WindowedSinusoid s;
        s.base = number(obj, path, "base");
        s.amp = number(obj, path, "amp");
        s.offset = number(obj, path, "offset");
        s.a_lo = number(obj, path, "a_lo");
        s.a_hi = number(obj, path, "a_hi");
        s.width = number(obj, path, "width");
        if (!(s.width > 0.0)) throw DomainError(join(path, "width"), "must be positive");
        return s;
    }
    if (tag == "tabulated") return parse_table(obj, path, "ages");
    throw SchemaError(join(path, "type"), "unknown family '" + tag + "'");
}

CostFunction parse_cost(const json& obj, const std::string& path) {
    const std::string tag = type_tag(obj, path);
    if (tag == "constant") return ConstantValue{number(obj, path, "value")};
    if (tag == "tabulated") return parse_table(obj, path, "times");
    throw SchemaError(join(path, "type"), "unknown family '" + tag + "'");
}

EconomicSpec parse_economics(const json& obj) {
    const std::string path = "economics";
    EconomicSpec e;
    e.discount_rate = number(obj, path, "discount_rate");
    e.unit_value = parse_unit_value(require(obj, path, "unit_value"), "economics.unit_value");
    e.inflow_cost = parse_cost(require(obj, path, "inflow_cost"), "economics.inflow_cost");
    const json& b = require(obj, path, "bounds");
    e.bounds.u_max = number(b, "economics.bounds", "u_max");
    e.bounds.w_max = number(b, "economics.bounds", "w_max");
    e.bounds.p_max = number(b, "economics.bounds", "p_max");
    return e;
}

ControlSpec parse_control(const json& obj) {
    const std::string path = "control";
    ControlSpec c;
    const json& k = require(obj, path, "kind");
    if (!k.is_string()) throw SchemaError("control.kind", "expected a string");
    const auto kind = k.get<std::string>();
    if (kind == "rate") c.kind = ControlKind::rate;
    else if (kind == "effort") c.kind = ControlKind::effort;
    else throw SchemaError("control.kind", "expected 'rate' or 'effort'");

    const json& in = require(obj, path, "intensity");
    const std::string ipath = "control.intensity";
    const std::string tag = type_tag(in, ipath);
    if (tag == "window") c.intensity = parse_window(in, ipath);
    else if (tag == "tabulated") c.intensity = parse_table(in, ipath, "ages");
    else throw SchemaError(join(ipath, "type"), "unknown family '" + tag + "'");
    return c;
}

InflowSpec parse_inflow(const json& obj) {
    const std::string path = "inflow";
    const std::string tag = type_tag(obj, path);
    InflowSpec s;
    if (tag == "constant") s.form = ConstantInflow{number(obj, path, "value")};
    else if (tag == "sinusoid") {
        SinusoidInflow f{number(obj, path, "p0"), number(obj, path, "p1"), number(obj, path, "period")};
        if (!(f.period > 0.0)) throw DomainError("inflow.period", "must be positive");
        s.form = f;
    } else if (tag == "tabulated") s.form = parse_table(obj, path, "times");
    else throw SchemaError("inflow.type", "unknown family '" + tag + "'");
    return s;
}

Profile parse_age_profile(const json& obj, const std::string& path, const AgeGrid& grid) {
    const std::string tag = type_tag(obj, path);
    if (tag == "tabulated") {
        const Tabulated t = parse_table(obj, path, "ages");
        return Profile::from_function(grid, [&](double a) { return t(a); });
    }
    if (tag == "window") {
        const WindowIntensity w = parse_window(obj, path);
        return Profile::from_function(grid, [&](double a) { return w(0.0, a); });
    }
    throw SchemaError(join(path, "type"), "unknown family '" + tag + "'");
}

json profile_json(const Profile& p) {
    Tabulated t{p.grid().nodes(), std::vector<double>(p.values().begin(), p.values().end())};
    return table_json(t, "ages");
}

void check_nonnegative(std::span<const double> v, const std::string& field) {
    for (double x : v)
        if (!(x >= 0.0)) throw DomainError(field, "must be nonnegative at every grid node");
}

}  // namespace

double MortalitySpec::base(double a) const {
    return std::visit(Overloaded{[&](const LinearAgeLaw& l) { return l.m0 + l.m1 * a; },
                                 [&](const Tabulated& t) { return t(a); }},
                      baseline);
}

Profile MortalitySpec::baseline_profile(const AgeGrid& grid) const {
    return Profile::from_function(grid, [&](double a) { return base(a); });
}

double evaluate(const UnitValue& c, double a) {
    return std::visit(Overloaded{[](const ConstantValue& v) { return v.value; },
                                 [&](const WindowedSinusoid& s) {
                                     if (a >= s.a_lo && a <= s.a_hi)
                                         return s.offset + s.amp * std::sin(std::numbers::pi * (a - s.a_lo) / s.width);
                                     return s.base;
                                 },
                                 [&](const Tabulated& t) { return t(a); }},
                      c);
}

double evaluate(const CostFunction& k, double t) {
    return std::visit(Overloaded{[](const ConstantValue& v) { return v.value; },
                                 [&](const Tabulated& tab) { return tab(t); }},
                      k);
}

Profile EconomicSpec::unit_value_profile(const AgeGrid& grid) const {
    return Profile::from_function(grid, [&](double a) { return evaluate(unit_value, a); });
}

std::string_view to_string(ControlKind kind) { return kind == ControlKind::rate ? "rate" : "effort"; }

double WindowIntensity::operator()(double t, double a) const {
    if (a < a_lo || a > a_hi) return 0.0;
    double scale = 1.0;
    if (ramp_time && *ramp_time > 0.0) scale = std::min(t / *ramp_time, 1.0);
    return level * scale;
}

double ControlSpec::operator()(double t, double a) const {
    return std::visit(Overloaded{[&](const WindowIntensity& w) { return w(t, a); },
                                 [&](const Tabulated& tab) { return tab(a); }},
                      intensity);
}

double InflowSpec::operator()(double t) const {
    return std::visit(
        Overloaded{[](const ConstantInflow& c) { return c.value; },
                   [&](const SinusoidInflow& s) { return s.p0 + s.p1 * std::sin(2.0 * std::numbers::pi * t / s.period); },
                   [&](const Tabulated& tab) { return tab(t); }},
        form);
}

Profile Scenario::multiplier_or_zero() const { return multiplier ? *multiplier : Profile(age_grid); }

Profile unharvested_profile(const MortalitySpec& mortality, const AgeGrid& grid, double inflow, double aggregate) {
    const Profile mu = Profile::from_function(grid, [&](double a) { return mortality.rate(aggregate, a); });
    const Profile cum = cumulative_integral(mu);
    Profile out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = inflow * std::exp(-cum[i]);
    return out;
}

void validate(const Scenario& s) {
    const AgeGrid& ages = s.age_grid;
    const TimeGrid& times = s.time_grid;

    if (!(s.mortality.density_coefficient >= 0.0))
        throw DomainError("mortality.density_coefficient", "must be nonnegative");
    check_nonnegative(s.mortality.baseline_profile(ages).values(), "mortality.baseline");

    const EconomicSpec& e = s.economics;
    if (!(e.discount_rate > 0.0)) throw DomainError("economics.discount_rate", "must be positive");
    if (!(e.bounds.u_max > 0.0)) throw DomainError("economics.bounds.u_max", "must be positive");
    if (!(e.bounds.w_max > 0.0)) throw DomainError("economics.bounds.w_max", "must be positive");
    if (!(e.bounds.p_max > 0.0)) throw DomainError("economics.bounds.p_max", "must be positive");
    check_nonnegative(e.unit_value_profile(ages).values(), "economics.unit_value");
    for (std::size_t n = 0; n < times.size(); ++n)
        if (!(evaluate(e.inflow_cost, times.time(n)) >= 0.0))
            throw DomainError("economics.inflow_cost", "must be nonnegative at every time node");

    if (const auto* w = std::get_if<WindowIntensity>(&s.control.intensity)) {
        if (!(w->a_lo < w->a_hi) || w->a_lo < 0.0 || w->a_hi > ages.max_age())
            throw DomainError("control.intensity", "window must satisfy 0 <= a_lo < a_hi <= max_age");
        if (w->ramp_time && !(*w->ramp_time > 0.0))
            throw DomainError("control.intensity.ramp_time", "must be positive");
    }
    const double bound = s.control.kind == ControlKind::rate ? e.bounds.u_max : e.bounds.w_max;
    for (std::size_t n = 0; n < times.size(); ++n) {
        for (std::size_t i = 0; i < ages.size(); ++i) {
            const double v = s.control(times.time(n), ages.node(i));
            if (!(v >= 0.0) || v > bound)
                throw DomainError("control.intensity", "intensity outside [0, " + std::to_string(bound) + "]");
        }
    }
    for (std::size_t n = 0; n < times.size(); ++n) {
        const double p = s.inflow(times.time(n));
        if (!(p >= 0.0) || p > e.bounds.p_max) throw DomainError("inflow", "inflow outside [0, p_max]");
    }

    if (!(s.initial_profile.grid() == ages)) throw DomainError("initial_profile", "grid mismatch");
    check_nonnegative(s.initial_profile.values(), "initial_profile");
    if (s.multiplier) {
        if (!(s.multiplier->grid() == ages)) throw DomainError("multiplier", "grid mismatch");
        check_nonnegative(s.multiplier->values(), "multiplier");
    }
}

Scenario parse_scenario(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SchemaError("document", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("document", "expected a JSON object");
    if (doc.contains("schema")) {
        const json& v = doc.at("schema");
        if (!v.is_number_integer() || v.get<int>() != kSchemaVersion)
            throw SchemaError("schema", "unsupported schema version (expected 1)");
    }

    const json& ag = require(doc, "", "age_grid");
    AgeGrid ages(number(ag, "age_grid", "max_age"), count(ag, "age_grid", "n_nodes"));

    // Default: dt = spacing over one age span.
    double horizon = ages.max_age();
    std::size_t steps = ages.size() - 1;
    if (doc.contains("time_grid")) {
        const json& tg = doc.at("time_grid");
        horizon = number(tg, "time_grid", "horizon");
        steps = count(tg, "time_grid", "n_steps");
    }
    TimeGrid times(horizon, steps, ages);

    Scenario s{.age_grid = ages,
               .time_grid = times,
               .mortality = parse_mortality(require(doc, "", "mortality")),
               .economics = parse_economics(require(doc, "", "economics")),
               .control = parse_control(require(doc, "", "control")),
               .inflow = parse_inflow(require(doc, "", "inflow")),
               .initial_profile = Profile(ages),
               .multiplier = std::nullopt};

    if (doc.contains("initial_profile") && !doc.at("initial_profile").is_null()) {
        s.initial_profile = parse_age_profile(doc.at("initial_profile"), "initial_profile", ages);
    } else {
        s.initial_profile = unharvested_profile(s.mortality, ages, s.inflow(0.0));
    }
    if (doc.contains("multiplier") && !doc.at("multiplier").is_null())
        s.multiplier = parse_age_profile(doc.at("multiplier"), "multiplier", ages);

    validate(s);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
    json doc;
    doc["schema"] = kSchemaVersion;
    doc["age_grid"] = {{"max_age", s.age_grid.max_age()}, {"n_nodes", s.age_grid.size()}};
    doc["time_grid"] = {{"horizon", s.time_grid.horizon()}, {"n_steps", s.time_grid.steps()}};

    json base = std::visit(Overloaded{[](const LinearAgeLaw& l) {
                                          return json{{"type", "linear"}, {"m0", l.m0}, {"m1", l.m1}};
                                      },
                                      [](const Tabulated& t) { return table_json(t, "ages"); }},
                           s.mortality.baseline);
    doc["mortality"] = {{"baseline", base}, {"density_coefficient", s.mortality.density_coefficient}};

    json c = std::visit(Overloaded{[](const ConstantValue& v) { return json{{"type", "constant"}, {"value", v.value}}; },
                                   [](const WindowedSinusoid& w) {
                                       return json{{"type", "windowed_sinusoid"}, {"base", w.base}, {"amp", w.amp},
                                                   {"offset", w.offset}, {"a_lo", w.a_lo}, {"a_hi", w.a_hi},
                                                   {"width", w.width}};
                                   },
                                   [](const Tabulated& t) { return table_json(t, "ages"); }},
                        s.economics.unit_value);
    json k = std::visit(Overloaded{[](const ConstantValue& v) { return json{{"type", "constant"}, {"value", v.value}}; },
                                   [](const Tabulated& t) { return table_json(t, "times"); }},
                        s.economics.inflow_cost);
    doc["economics"] = {{"discount_rate", s.economics.discount_rate},
                        {"unit_value", c},
                        {"inflow_cost", k},
                        {"bounds",
                         {{"u_max", s.economics.bounds.u_max},
                          {"w_max", s.economics.bounds.w_max},
                          {"p_max", s.economics.bounds.p_max}}}};

    json intensity = std::visit(Overloaded{[](const WindowIntensity& w) { return window_json(w); },
                                           [](const Tabulated& t) { return table_json(t, "ages"); }},
                                s.control.intensity);
    doc["control"] = {{"kind", std::string(to_string(s.control.kind))}, {"intensity", intensity}};

    doc["inflow"] = std::visit(
        Overloaded{[](const ConstantInflow& c) { return json{{"type", "constant"}, {"value", c.value}}; },
                   [](const SinusoidInflow& f) {
                       return json{{"type", "sinusoid"}, {"p0", f.p0}, {"p1", f.p1}, {"period", f.period}};
                   },
                   [](const Tabulated& t) { return table_json(t, "times"); }},
        s.inflow.form);

    doc["initial_profile"] = profile_json(s.initial_profile);
    if (s.multiplier) doc["multiplier"] = profile_json(*s.multiplier);
    return doc.dump(2);
}

ControlTables evaluate_controls(const Scenario& s, const TimeGrid& times) {
    ControlTables out{Field2D(times, s.age_grid), std::vector<double>(times.size())};
    for (std::size_t n = 0; n < times.size(); ++n) {
        const double t = times.time(n);
        out.inflow[n] = s.inflow(t);
        for (std::size_t i = 0; i < s.age_grid.size(); ++i) out.intensity(n, i) = s.control(t, s.age_grid.node(i));
    }
    return out;
}

std::vector<double> inflow_cost_series(const Scenario& s) {
    std::vector<double> k(s.time_grid.size());
    for (std::size_t n = 0; n < k.size(); ++n) k[n] = evaluate(s.economics.inflow_cost, s.time_grid.time(n));
    return k;
}

}  // namespace agestruct
