#pragma once

#include <string>

#include "json.hpp"

#include "agestruct/scenario.hpp"

namespace testing {

// Small rate-model scenario: A = 10, mu = 0.01 + 0.005 a, dt = spacing.
inline nlohmann::json small_document(int nodes = 51, double horizon = 10.0, int steps = 50) {
    return nlohmann::json{
        {"age_grid", {{"max_age", 10.0}, {"n_nodes", nodes}}},
        {"time_grid", {{"horizon", horizon}, {"n_steps", steps}}},
        {"mortality", {{"baseline", {{"type", "linear"}, {"m0", 0.01}, {"m1", 0.005}}}, {"density_coefficient", 0.0}}},
        {"economics",
         {{"discount_rate", 0.05},
          {"unit_value", {{"type", "constant"}, {"value", 1.0}}},
          {"inflow_cost", {{"type", "constant"}, {"value", 0.0}}},
          {"bounds", {{"u_max", 1.0}, {"w_max", 1.0}, {"p_max", 2.0}}}}},
        {"control", {{"kind", "rate"}, {"intensity", {{"type", "window"}, {"a_lo", 3.0}, {"a_hi", 7.0}, {"level", 0.05}}}}},
        {"inflow", {{"type", "constant"}, {"value", 1.0}}}};
}

inline agestruct::Scenario scenario(const nlohmann::json& d) { return agestruct::parse_scenario(d.dump()); }

}  // namespace testing
