#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "agestruct/cli.hpp"
#include "agestruct/csv.hpp"
#include "agestruct/presets.hpp"
#include "agestruct/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace agestruct;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("agestruct_cli_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(p));
    for (std::string line; std::getline(in, line);) {
        std::vector<std::string> row;
        std::istringstream ls(line);
        for (std::string f; std::getline(ls, f, ',');) row.push_back(f);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("missing output directory is an I/O error naming the path") {
    const Run r = run({"stationary", "--preset", "profiles", "--out", "/nonexistent/agestruct/dir"});
    CHECK(r.code == cli::io_error);
    CHECK(r.err.find("/nonexistent/agestruct/dir") != std::string::npos);
}

TEST_CASE("unknown preset and bad scenario files exit 2") {
    TempDir d;
    CHECK(run({"stationary", "--preset", "nope", "--out", d.path.string()}).code == cli::io_error);
    std::ofstream(d.path / "bad.json") << "{\"age_grid\": 3}";
    CHECK(run({"stationary", "--scenario", (d.path / "bad.json").string(), "--out", d.path.string()}).code ==
          cli::io_error);
}

TEST_CASE("stationary writes profiles and a manifest that reparses") {
    TempDir d;
    const Run r = run({"stationary", "--preset", "profiles", "--out", d.path.string()});
    REQUIRE(r.code == cli::ok);
    for (const char* f : {"rate_profile.csv", "rate_baseline.csv", "effort_profile.csv", "effort_baseline.csv",
                          "manifest.json"})
        CHECK(fs::exists(d.path / f));
    const auto rows = read_csv(d.path / "effort_profile.csv");
    CHECK(rows[0] == std::vector<std::string>{"a", "value"});
    CHECK(rows.size() == 501);

    const json m = json::parse(slurp(d.path / "manifest.json"));
    CHECK(m["command"] == "stationary");
    CHECK(m.contains("wall_time_s"));
    CHECK(m.contains("diagnostics"));
    const Scenario back = parse_scenario(m["parameters"].dump());
    CHECK(back == preset_scenario("profiles"));
}

TEST_CASE("scenario files are accepted") {
    TempDir d;
    std::ofstream(d.path / "s.json") << preset("gradcheck-effort").document.dump();
    CHECK(run({"stationary", "--scenario", (d.path / "s.json").string(), "--out", d.path.string()}).code == cli::ok);
    CHECK(fs::exists(d.path / "effort_profile.csv"));
}

TEST_CASE("dynamics refinement writes both grids") {
    TempDir d;
    const Run r = run({"dynamics", "--preset", "dynamics", "--refine", "2", "--out", d.path.string()});
    REQUIRE(r.code == cli::ok);
    CHECK(fs::exists(d.path / "state.csv"));
    CHECK(fs::exists(d.path / "state_refined.csv"));
    CHECK(fs::exists(d.path / "balance_residual_refined.csv"));
    CHECK(read_csv(d.path / "aggregate.csv").size() == 402);
    CHECK(read_csv(d.path / "aggregate_refined.csv").size() == 802);
}

TEST_CASE("adjoint costate scales with the multiplier level") {
    TempDir one, two;
    REQUIRE(run({"adjoint", "--preset", "switching", "--out", one.path.string()}).code == cli::ok);
    REQUIRE(run({"adjoint", "--preset", "switching", "--eta0", "2", "--out", two.path.string()}).code == cli::ok);
    const auto a = read_csv(one.path / "costate.csv");
    const auto b = read_csv(two.path / "costate.csv");
    REQUIRE(a.size() == b.size());
    CHECK(a[0][1] == "lambda");
    bool nonzero = false;
    for (std::size_t k = 1; k < a.size(); ++k) {
        const double la = std::stod(a[k][1]), lb = std::stod(b[k][1]);
        CHECK(lb == doctest::Approx(2.0 * la).epsilon(1e-12).scale(1e-300));
        nonzero = nonzero || la != 0.0;
    }
    CHECK(nonzero);
    CHECK(fs::exists(one.path / "switching.csv"));
}

TEST_CASE("adjoint pde mode") {
    TempDir d;
    REQUIRE(run({"adjoint", "--preset", "switching", "--mode", "pde", "--horizon", "30", "--out", d.path.string()})
                .code == cli::ok);
    CHECK(fs::exists(d.path / "costate_initial.csv"));
    CHECK(fs::exists(d.path / "boundary_costate.csv"));
}

TEST_CASE("sweep point count and mechanism selection") {
    TempDir d;
    REQUIRE(run({"sweep", "--preset", "comparison", "--points", "11", "--h-max", "0.2", "--mechanism", "rate",
                 "--out", d.path.string()})
                .code == cli::ok);
    const auto rows = read_csv(d.path / "sweep.csv");
    CHECK(rows.size() == 12);
    CHECK(rows[0][0] == "h");
    const std::string header = slurp(d.path / "sweep.csv").substr(0, slurp(d.path / "sweep.csv").find('\n'));
    CHECK(header.find("Y_rate") != std::string::npos);
    CHECK(header.find("Y_effort") == std::string::npos);
}

TEST_CASE("gradcheck exit codes") {
    TempDir d;
    CHECK(run({"gradcheck", "--all", "--out", d.path.string()}).code == cli::ok);
    CHECK(read_csv(d.path / "gradcheck.csv").size() == 5);
    CHECK(run({"gradcheck", "--channel", "effort-w", "--ablate-nonlocal", "--out", d.path.string()}).code ==
          cli::check_failed);
    CHECK(run({"gradcheck", "--channel", "rate-u", "--grid", "coarse", "--out", d.path.string()}).code == cli::ok);
}

TEST_CASE("output directory defaults to the environment variable") {
    TempDir d;
    ::setenv(cli::kOutputDirEnv, d.path.c_str(), 1);
    CHECK(cli::default_output_dir() == d.path);
    CHECK(run({"stationary", "--preset", "profiles"}).code == cli::ok);
    ::unsetenv(cli::kOutputDirEnv);
    CHECK(fs::exists(d.path / "rate_profile.csv"));
    CHECK(cli::default_output_dir() == fs::path("out"));
}

TEST_CASE("csv numbers round-trip exactly") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.0}) CHECK(std::stod(csv::format(v)) == v);
}

}
