#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "microball/errors.hpp"
#include "microball/io.hpp"

using namespace microball;

namespace {
const char* kMinimal = R"({
  "model": {"dimension": 2, "window": {"lo": [0, 0], "hi": [1, 2]},
            "index": {"kind": "constant", "value": 0.3}, "r_min": 0.001},
  "sampling": {"seed": 42, "replicas": 7, "mode": "lines"},
  "probes": {"base_points": [[0.5, 0.5]], "lags": {"direction": [0, 1], "exponents": [-4, -2]},
             "directions": [[0, 1]], "window": {"kind": "hann", "L": 0.5}},
  "analysis": {"lag_range": [0.01, 0.5], "target": "xray"},
  "outputs": {"directory": "x", "formats": ["csv", "pgm"]}
})";

std::string with(std::string text, const std::string& from, const std::string& to) {
    text.replace(text.find(from), from.size(), to);
    return text;
}
}  // namespace

TEST_CASE("config parses every section") {
    ExperimentConfig c = parse_experiment_config(kMinimal);
    CHECK(c.dim == 2);
    CHECK(c.window.hi[1] == 2.0);
    CHECK(c.index_value == 0.3);
    CHECK(c.r_min == 0.001);
    CHECK(c.r_max == 1.0);
    CHECK(c.seed == 42);
    CHECK(c.replicas == 7);
    CHECK(c.mode == "lines");
    REQUIRE(c.lags.size() == 3);
    CHECK(c.lags[0][1] == 0.0625);
    CHECK(c.lags[2][1] == 0.25);
    REQUIRE(c.directions.size() == 1);
    CHECK(c.directions[0].v[1] == 1.0);
    REQUIRE(c.rho.has_value());
    CHECK(c.target == "xray");
    CHECK(c.wants("pgm"));
    CHECK_FALSE(c.wants("svg"));
    SimulationConfig s = c.simulation();
    CHECK(s.seed == 42);
    CHECK(s.replicas == 7);
}

TEST_CASE("config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "\"r_min\"", "\"rmin\"")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "\"sampling\"", "\"sampler\"")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "\"L\": 0.5", "\"L\": 0.5, \"sigma\": 1")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "\"lines\"", "\"grid\"")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "[[0.5, 0.5]]", "[[0.5]]")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "[-4, -2]", "[-2, -4]")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "\"pgm\"", "\"png\"")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "\"value\": 0.3", "\"value\": 0.6")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config(with(kMinimal, "[[0, 1]]", "[[0, 2]]")), ConfigError);
    CHECK_THROWS_AS(parse_experiment_config("{not json"), ConfigError);
}

TEST_CASE("config hash is a pure function of the canonical document") {
    ExperimentConfig a = parse_experiment_config(kMinimal);
    ExperimentConfig b = parse_experiment_config(with(kMinimal, "\n", "\n\n   "));
    CHECK(a.hash == b.hash);
    CHECK(a.hash.size() == 16);
    CHECK(a.hash == hex64(fnv1a64(a.canonical)));
    CHECK(parse_experiment_config(a.canonical).hash == a.hash);
    CHECK(parse_experiment_config(with(kMinimal, "42", "43")).hash != a.hash);
    // published FNV-1a test vectors
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("MICROBALL_SEED overrides the seed and is recorded") {
    auto path = std::filesystem::temp_directory_path() / "microball_io_test.json";
    std::ofstream(path) << kMinimal;
    ::unsetenv("MICROBALL_SEED");
    ExperimentConfig plain = load_experiment_config(path.string());
    CHECK(plain.seed == 42);
    CHECK(output_header(plain).find("seed_source=config") != std::string::npos);
    ::setenv("MICROBALL_SEED", "9001", 1);
    ExperimentConfig env = load_experiment_config(path.string());
    CHECK(env.seed == 9001);
    CHECK(env.seed_from_env);
    CHECK(output_header(env).find("seed=9001 seed_source=MICROBALL_SEED") != std::string::npos);
    ::setenv("MICROBALL_SEED", "12x", 1);
    CHECK_THROWS_AS(load_experiment_config(path.string()), UsageError);
    ::unsetenv("MICROBALL_SEED");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_experiment_config(path.string()), UsageError);
}

TEST_CASE("window spec") {
    CHECK(parse_window_spec(R"({"kind": "gaussian", "sigma": 2})")(0.0) ==
          doctest::Approx(WindowFunction::gaussian(2)(0.0)));
    CHECK(parse_window_spec(R"({"kind": "rectangular", "L": 1})")(0.4) == WindowFunction::rectangular(1)(0.4));
    CHECK_THROWS_AS(parse_window_spec(R"({"kind": "triangle", "L": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_window_spec(R"({"kind": "hann"})"), ConfigError);
}

TEST_CASE("svg plots are deterministic and validated") {
    PlotSeries s{"v", {1e-3, 1e-2, 1e-1}, {1e-2, 3e-2, 1e-1}};
    PlotFit f{0.5, std::log(0.3), {0.45, 0.55}};
    std::string a = plot_svg({s}, f, "t"), b = plot_svg({s}, f, "t");
    CHECK(a == b);
    CHECK(a.rfind("<svg", 0) == 0);
    CHECK(a.find("class=\"fit\"") != std::string::npos);
    CHECK(a.find("class=\"band\"") != std::string::npos);
    CHECK(plot_svg({s}).find("class=\"fit\"") == std::string::npos);
    CHECK_THROWS_AS(plot_svg({}), UsageError);
    CHECK_THROWS_AS(plot_svg({PlotSeries{"z", {1, 2}, {0, 1}}}), UsageError);
    CHECK_THROWS_AS(plot_svg({PlotSeries{"one", {1}, {1}}}), UsageError);
}
