#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agestruct/grid.hpp"

namespace agestruct {

inline constexpr int kSchemaVersion = 1;

// Piecewise-linear table over one coordinate (age or time).
struct Tabulated {
    std::vector<double> xs;
    std::vector<double> values;

    double operator()(double x) const { return interpolate(xs, values, x); }
    bool operator==(const Tabulated&) const = default;
};

// m0 + m1 * a
struct LinearAgeLaw {
    double m0 = 0.0;
    double m1 = 0.0;
    bool operator==(const LinearAgeLaw&) const = default;
};

// mu(E, a) = baseline(a) + density_coefficient * E, so mu_E = density_coefficient.
struct MortalitySpec {
    std::variant<LinearAgeLaw, Tabulated> baseline = LinearAgeLaw{};
    double density_coefficient = 0.0;

    double base(double a) const;
    double rate(double aggregate, double a) const { return base(a) + density_coefficient * aggregate; }
    double derivative(double /*aggregate*/, double /*a*/) const { return density_coefficient; }
    Profile baseline_profile(const AgeGrid& grid) const;

    bool operator==(const MortalitySpec&) const = default;
};

struct ConstantValue {
    double value = 0.0;
    bool operator==(const ConstantValue&) const = default;
};

// offset + amp * sin(pi (a - a_lo) / width) on [a_lo, a_hi], base elsewhere.
struct WindowedSinusoid {
    double base = 0.0;
    double amp = 0.0;
    double offset = 0.0;
    double a_lo = 0.0;
    double a_hi = 0.0;
    double width = 1.0;
    bool operator==(const WindowedSinusoid&) const = default;
};

using UnitValue = std::variant<ConstantValue, WindowedSinusoid, Tabulated>;
using CostFunction = std::variant<ConstantValue, Tabulated>;

double evaluate(const UnitValue& c, double a);
double evaluate(const CostFunction& k, double t);

struct ControlBounds {
    double u_max = 1.0;
    double w_max = 1.0;
    double p_max = 1.0;
    bool operator==(const ControlBounds&) const = default;
};

struct EconomicSpec {
    double discount_rate = 0.05;
    UnitValue unit_value = ConstantValue{1.0};   // c(a)
    CostFunction inflow_cost = ConstantValue{0.0};  // k(t)
    ControlBounds bounds;

    Profile unit_value_profile(const AgeGrid& grid) const;
    bool operator==(const EconomicSpec&) const = default;
};

enum class ControlKind { rate, effort };

std::string_view to_string(ControlKind kind);

// level * 1_[a_lo, a_hi](a), closed interval, scaled by min(t / ramp_time, 1)
// when ramp_time is set.
struct WindowIntensity {
    double a_lo = 0.0;
    double a_hi = 0.0;
    double level = 0.0;
    std::optional<double> ramp_time;

    double operator()(double t, double a) const;
    bool operator==(const WindowIntensity&) const = default;
};

struct ControlSpec {
    ControlKind kind = ControlKind::rate;
    std::variant<WindowIntensity, Tabulated> intensity = WindowIntensity{};

    double operator()(double t, double a) const;
    bool operator==(const ControlSpec&) const = default;
};

struct ConstantInflow {
    double value = 0.0;
    bool operator==(const ConstantInflow&) const = default;
};

// p0 + p1 sin(2 pi t / period)
struct SinusoidInflow {
    double p0 = 0.0;
    double p1 = 0.0;
    double period = 1.0;
    bool operator==(const SinusoidInflow&) const = default;
};

struct InflowSpec {
    std::variant<ConstantInflow, SinusoidInflow, Tabulated> form = ConstantInflow{};

    double operator()(double t) const;
    bool operator==(const InflowSpec&) const = default;
};

struct Scenario {
    AgeGrid age_grid{10.0, 2};
    TimeGrid time_grid{10.0, 1, AgeGrid{10.0, 2}};
    MortalitySpec mortality;
    EconomicSpec economics;
    ControlSpec control;
    InflowSpec inflow;
    Profile initial_profile{AgeGrid{10.0, 2}};
    std::optional<Profile> multiplier;

    // eta, defaulting to zero.
    Profile multiplier_or_zero() const;

    bool operator==(const Scenario&) const = default;
};

// Parses and fully validates a scenario document (schema version 1).
// Throws SchemaError or DomainError naming the offending field.
Scenario parse_scenario(std::string_view document);
Scenario load_scenario(const std::string& path);

// Inverse of parse_scenario; profiles are written as tables on the grid nodes.
std::string serialize_scenario(const Scenario& scenario);

// Re-runs every invariant check on an in-memory scenario.
void validate(const Scenario& scenario);

// p * exp(-int_0^a mu), the unharvested stationary survival profile.
Profile unharvested_profile(const MortalitySpec& mortality, const AgeGrid& grid, double inflow,
                            double aggregate = 0.0);

struct ControlTables {
    Field2D intensity;          // u(t_n, a_i) or w(t_n, a_i)
    std::vector<double> inflow;  // p(t_n)
};

ControlTables evaluate_controls(const Scenario& scenario, const TimeGrid& time_grid);
inline ControlTables evaluate_controls(const Scenario& scenario) {
    return evaluate_controls(scenario, scenario.time_grid);
}

// k(t_n) on the time grid.
std::vector<double> inflow_cost_series(const Scenario& scenario);

}  // namespace agestruct
