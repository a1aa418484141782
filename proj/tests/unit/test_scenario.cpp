#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"

#include "agestruct/errors.hpp"
#include "agestruct/presets.hpp"
#include "agestruct/scenario.hpp"

using namespace agestruct;
using nlohmann::json;

namespace {

template <class E>
std::string field_of(const json& d) {
    try {
        parse_scenario(d.dump());
    } catch (const E& e) {
        return e.field();
    }
    return "<no error>";
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("every preset round-trips through serialization") {
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        const Scenario s = preset_scenario(name);
        const Scenario back = parse_scenario(serialize_scenario(s));
        CHECK(back == s);
        CHECK(serialize_scenario(back) == serialize_scenario(s));
    }
}

TEST_CASE("schema errors name the offending field") {
    json d = testing::small_document();
    d.erase("mortality");
    CHECK(field_of<SchemaError>(d) == "mortality");

    d = testing::small_document();
    d["economics"]["discount_rate"] = "fast";
    CHECK(field_of<SchemaError>(d) == "economics.discount_rate");

    d = testing::small_document();
    d["control"]["intensity"]["type"] = "spline";
    CHECK(field_of<SchemaError>(d) == "control.intensity.type");

    d = testing::small_document();
    d["schema"] = 2;
    CHECK(field_of<SchemaError>(d) == "schema");

    CHECK_THROWS_AS(parse_scenario("{not json"), SchemaError);
}

TEST_CASE("domain errors name the offending field") {
    json d = testing::small_document();
    d["control"]["intensity"]["level"] = 5.0;
    CHECK(field_of<DomainError>(d) == "control.intensity");

    d = testing::small_document();
    d["inflow"]["value"] = -1.0;
    CHECK(field_of<DomainError>(d) == "inflow");

    d = testing::small_document();
    d["time_grid"]["n_steps"] = 10;
    CHECK(field_of<DomainError>(d) == "time_grid");

    d = testing::small_document();
    d["economics"]["discount_rate"] = 0.0;
    CHECK(field_of<DomainError>(d) == "economics.discount_rate");

    d = testing::small_document();
    d["mortality"]["density_coefficient"] = -0.1;
    CHECK(field_of<DomainError>(d) == "mortality.density_coefficient");
}

TEST_CASE("time grid defaults to one age span at dt = spacing") {
    json d = testing::small_document();
    d.erase("time_grid");
    const Scenario s = testing::scenario(d);
    CHECK(s.time_grid.horizon() == 10.0);
    CHECK(s.time_grid.dt() == doctest::Approx(s.age_grid.spacing()));
}

TEST_CASE("window intensity is a closed interval with an optional ramp") {
    const WindowIntensity w{3.0, 7.0, 0.06, 5.0};
    CHECK(w(10.0, 3.0) == doctest::Approx(0.06));
    CHECK(w(10.0, 7.0) == doctest::Approx(0.06));
    CHECK(w(10.0, 7.0001) == 0.0);
    CHECK(w(2.5, 5.0) == doctest::Approx(0.03));
    CHECK(w(0.0, 5.0) == 0.0);
}

TEST_CASE("windowed sinusoidal unit value") {
    const UnitValue c = WindowedSinusoid{0.2, 0.5, 1.0, 2.0, 8.0, 6.0};
    CHECK(evaluate(c, 5.0) == doctest::Approx(1.5));
    CHECK(evaluate(c, 2.0) == doctest::Approx(1.0));
    CHECK(evaluate(c, 1.0) == doctest::Approx(0.2));
    CHECK(evaluate(c, 9.0) == doctest::Approx(0.2));
}

TEST_CASE("unharvested profile is the survival closed form") {
    const MortalitySpec m{LinearAgeLaw{0.01, 0.005}, 0.0};
    const AgeGrid g(10.0, 101);
    const Profile x = unharvested_profile(m, g, 2.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = g.node(i);
        CHECK(x[i] == doctest::Approx(2.0 * std::exp(-(0.01 * a + 0.0025 * a * a))).epsilon(1e-13));
    }
}

TEST_CASE("default initial profile is unharvested at p(0)") {
    const Scenario s = preset_scenario("dynamics");
    const Profile expected = unharvested_profile(s.mortality, s.age_grid, 0.5);
    CHECK(s.initial_profile == expected);
}

TEST_CASE("controls and inflow tabulate on the grids") {
    const Scenario s = preset_scenario("dynamics");
    const ControlTables c = evaluate_controls(s);
    const TimeGrid& tg = s.time_grid;
    for (std::size_t n = 0; n < tg.size(); n += 37) {
        const double t = tg.time(n);
        CHECK(c.inflow[n] == doctest::Approx(0.5 + 0.3 * std::sin(2.0 * std::numbers::pi * t / 8.0)));
    }
    CHECK(c.intensity(tg.steps(), 100) == doctest::Approx(0.06));
    CHECK(c.intensity(tg.steps(), 10) == 0.0);
}

}
