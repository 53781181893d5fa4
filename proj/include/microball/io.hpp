#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "microball/geometry.hpp"
#include "microball/sampler.hpp"
#include "microball/xray.hpp"

namespace microball {

// Parsed experiment configuration. The JSON layout is documented in README.md;
// every section rejects keys it does not know.
struct ExperimentConfig {
    // model
    int dim = 1;
    Box window;
    std::string index_kind = "constant";
    double index_value = 0.25;    // constant kind
    std::string index_expression;  // smooth / star kinds
    double lipschitz_c = 0, beta = 1;
    double r_min = std::ldexp(1.0, -20);
    double r_max = 1.0;
    // sampling
    std::uint64_t seed = 1;
    int replicas = 100;
    std::string mode = "window";  // window | probes | lines
    // probes
    std::vector<Point> base_points;
    std::vector<Point> lags;
    std::vector<Direction> directions;
    std::optional<WindowFunction> rho;
    std::vector<int> grid;  // points per axis for coverage / projection grids
    // analysis
    std::pair<double, double> lag_range{0, 0};
    std::vector<double> epsilons;
    std::string target = "field";  // field | xray
    // outputs
    std::string out_dir = "out";
    std::vector<std::string> formats{"csv"};

    std::string canonical;  // canonical JSON dump, input of the hash
    std::string hash;       // 16 hex digits
    bool seed_from_env = false;

    SimulationConfig simulation() const;
    bool wants(const std::string& format) const;
};

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

// FNV-1a, 64 bit.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

// First line of every CSV written by the tools.
std::string output_header(const ExperimentConfig& cfg);

// Window spec: {"kind": "gaussian", "sigma": s} or {"kind": "rectangular" | "hann", "L": l}.
WindowFunction parse_window_spec(const std::string& json_text);

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
};

struct PlotFit {
    double slope = 0, intercept = 0;  // log y = intercept + slope log x
    std::pair<double, double> ci95{0, 0};
};

// Log-log scatter (markers joined by a polyline per series) with an optional
// fitted line and its slope band, pivoting at the mean log abscissa. Output is a
// pure function of the input.
std::string plot_svg(const std::vector<PlotSeries>& series, const std::optional<PlotFit>& fit = std::nullopt,
                     const std::string& title = "");
void emit_plot(const std::vector<PlotSeries>& series, const std::string& path,
               const std::optional<PlotFit>& fit = std::nullopt, const std::string& title = "");

}  // namespace microball
