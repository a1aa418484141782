#include "agestruct/presets.hpp"

#include "agestruct/errors.hpp"

namespace agestruct {

namespace {

using nlohmann::json;

// A = 10, r = 0.05, mu(a) = 0.01 + 0.005 a
json base_document(int nodes, double alpha) {
    return json{{"schema", kSchemaVersion},
                {"age_grid", {{"max_age", 10.0}, {"n_nodes", nodes}}},
                {"mortality",
                 {{"baseline", {{"type", "linear"}, {"m0", 0.01}, {"m1", 0.005}}}, {"density_coefficient", alpha}}},
                {"economics",
                 {{"discount_rate", 0.05},
                  {"unit_value", {{"type", "constant"}, {"value", 1.0}}},
                  {"inflow_cost", {{"type", "constant"}, {"value", 0.0}}},
                  {"bounds", {{"u_max", 0.5}, {"w_max", 0.5}, {"p_max", 1.0}}}}},
                {"inflow", {{"type", "constant"}, {"value", 1.0}}}};
}

json window(double lo, double hi, double level) {
    return json{{"type", "window"}, {"a_lo", lo}, {"a_hi", hi}, {"level", level}};
}

// c(a) = 1 + 0.5 sin(pi (a - 2) / 6) on [2, 8], 0.2 elsewhere
json windowed_unit_value() {
    return json{{"type", "windowed_sinusoid"}, {"base", 0.2}, {"amp", 0.5}, {"offset", 1.0},
                {"a_lo", 2.0},                 {"a_hi", 8.0},  {"width", 6.0}};
}

Preset make(std::string_view name) {
    if (name == "profiles") {
        json d = base_document(500, 0.002);
        d["control"] = {{"kind", "effort"}, {"intensity", window(3.0, 7.0, 0.08)}};
        return {"profiles", d, {"economics (unused by stationary profiles)", "time_grid"}};
    }
    if (name == "dynamics") {
        json d = base_document(200, 0.0);
        d["time_grid"] = {{"horizon", 20.0}, {"n_steps", 400}};
        json w = window(3.0, 7.0, 0.06);
        w["ramp_time"] = 5.0;
        d["control"] = {{"kind", "rate"}, {"intensity", w}};
        d["inflow"] = {{"type", "sinusoid"}, {"p0", 0.5}, {"p1", 0.3}, {"period", 8.0}};
        return {"dynamics", d, {"initial_profile (unharvested profile at p(0))", "economics"}};
    }
    if (name == "switching") {
        json d = base_document(500, 0.0);
        d["economics"]["unit_value"] = windowed_unit_value();
        d["economics"]["inflow_cost"] = {{"type", "constant"}, {"value", 0.6}};
        d["economics"]["bounds"]["u_max"] = 0.15;
        d["control"] = {{"kind", "rate"}, {"intensity", window(0.0, 10.0, 0.0)}};
        d["multiplier"] = window(8.5, 10.0, 1.0);
        return {"switching", d, {"multiplier level eta0 = 1", "time_grid", "dead-zone threshold 0.05"}};
    }
    if (name == "comparison") {
        json d = base_document(500, 0.002);
        d["control"] = {{"kind", "rate"}, {"intensity", window(2.0, 8.0, 0.0)}};
        return {"comparison", d, {"51 sweep points", "time_grid"}};
    }
    if (name == "gradcheck" || name == "gradcheck-effort") {
        // dt = spacing = 0.2 on a 51-node grid.
        const bool effort = name == "gradcheck-effort";
        json d = base_document(51, effort ? 0.002 : 0.0);
        d["time_grid"] = {{"horizon", 40.0}, {"n_steps", 200}};
        d["economics"]["unit_value"] = windowed_unit_value();
        d["economics"]["inflow_cost"] = {{"type", "constant"}, {"value", 0.6}};
        d["economics"]["bounds"]["p_max"] = 2.0;
        if (effort) {
            d["control"] = {{"kind", "effort"}, {"intensity", window(3.0, 7.0, 0.08)}};
        } else {
            d["control"] = {{"kind", "rate"}, {"intensity", window(1.0, 9.0, 0.05)}};
            d["multiplier"] = window(6.0, 9.0, 0.5);
        }
        return {std::string(name), d, {"grid 51 x 200, T = 40", "p_max = 2", "rate multiplier 0.5 on [6, 9]"}};
    }
    if (name == "fbs") {
        json d = base_document(101, 0.0);
        d["time_grid"] = {{"horizon", 40.0}, {"n_steps", 400}};
        d["economics"]["unit_value"] = windowed_unit_value();
        d["economics"]["inflow_cost"] = {{"type", "constant"}, {"value", 0.6}};
        d["economics"]["bounds"]["u_max"] = 0.15;
        d["control"] = {{"kind", "rate"}, {"intensity", window(3.0, 7.0, 0.06)}};
        return {"fbs", d, {"grid 101 x 400, T = 40", "initial controls", "p_max = 1"}};
    }
    throw DomainError("preset", "unknown preset '" + std::string(name) + "'");
}

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"profiles",  "dynamics",         "switching", "comparison",
                                                "gradcheck", "gradcheck-effort", "fbs"};
    return names;
}

Preset preset(std::string_view name) { return make(name); }

Scenario preset_scenario(std::string_view name) { return parse_scenario(make(name).document.dump()); }

nlohmann::json refine_document(nlohmann::json d, int factor) {
    if (factor < 1) throw DomainError("refine", "factor must be at least 1");
    auto& ag = d.at("age_grid");
    ag["n_nodes"] = (ag.at("n_nodes").get<long>() - 1) * factor + 1;
    if (d.contains("time_grid")) d["time_grid"]["n_steps"] = d["time_grid"].at("n_steps").get<long>() * factor;
    return d;
}

}  // namespace agestruct
