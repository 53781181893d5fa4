#pragma once

#include <string>
#include <vector>

#include "microball/geometry.hpp"
#include "microball/sampler.hpp"
#include "microball/stats.hpp"
#include "microball/xray.hpp"

namespace microball {

// table[lag][replica] holds that replica's samples at the lag.
using IncrementTable = std::vector<std::vector<std::vector<double>>>;

enum class DrawMode { Window, Probes, Lines };

// Field increments X(x0 + lag) - X(x0), one table per base point. Probes mode
// draws only the balls hitting {x0, x0 + lag}; Window mode samples the window.
std::vector<IncrementTable> field_increment_tables(const SimulationConfig& config, const std::vector<Point>& base,
                                                   const std::vector<Point>& lags, DrawMode mode, int jobs);

// Projection increments P X(y0 + lag) - P X(y0) for feet y0 on the hyperplane
// orthogonal to alpha. Lines mode draws only balls meeting the segments that
// carry the mass of rho; Window mode samples the window.
std::vector<IncrementTable> xray_increment_tables(const SimulationConfig& config, const Direction& alpha,
                                                  const WindowFunction& rho, const std::vector<Point>& feet,
                                                  const std::vector<Point>& lags, DrawMode mode, int jobs);

// Concatenates the per-replica samples of several tables.
IncrementTable pool_tables(const std::vector<IncrementTable>& tables);

std::vector<double> lag_norms(const std::vector<Point>& lags);

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentOptions {
    int jobs = 1;
    std::string out_dir;  // CSV / SVG outputs when non-empty
};

std::vector<std::string> preset_names();

// Runs one named preset; a preset may settle more than one criterion.
std::vector<CriterionResult> run_preset(const std::string& name, const ExperimentOptions& options);

// All criteria 1..10 in order.
std::vector<CriterionResult> run_acceptance(const ExperimentOptions& options);

std::string format_result(const CriterionResult& r);

}  // namespace microball
