#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "microball/geometry.hpp"
#include "microball/index_model.hpp"

namespace microball {

struct SimulationConfig {
    int dim = 1;
    Box window;
    IndexField index = IndexField::constant(0.25);
    double r_min = std::ldexp(1.0, -20);
    double r_max = 1.0;
    std::uint64_t seed = 1;
    int replicas = 1;
    double grid_spacing = 0.0;  // index_bounds lattice spacing, 0 = default

    void validate() const;
};

struct Shell {
    int id = 0;
    double r_lo = 0, r_hi = 0;  // radii in (r_lo, r_hi]
    double margin = 0;          // equals r_hi
    Box region;                 // window dilated by margin
    double exponent = 0;        // envelope density r^exponent
    double expected = 0;        // envelope count over region
};

struct ShellPlan {
    std::vector<Shell> shells;
    double h_env = 0;            // envelope index used for proposals
    double h_lo = 0, h_hi = 0;   // certified bracket over the sampled region
    double epsilon = 1.0;
    double r_top = 1.0;
    double total_expected = 0;
};

struct BallEvent {
    Point center;
    double radius = 0;
    int shell = 0;
};

struct Realization {
    int dim = 0;
    Box window;
    double r_min = 0, r_top = 1, epsilon = 1;
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
    double truncation_bound = 0;
    std::string config_hash;
    std::vector<Shell> shells;
    std::vector<BallEvent> balls;  // shell-major, index-minor
    // Non-empty for probe-restricted draws: coverage is exact only at these points.
    std::vector<Point> probes;
    // Non-empty for line-restricted draws: the segments y_j + p alpha, |p| <= half
    // length, see every ball that meets them.
    std::vector<Point> line_feet;
    Point line_alpha;
    double line_half_length = 0;
};

constexpr double kMaxExpectedBalls = 1e9;

ShellPlan plan_shells(const SimulationConfig& config, double epsilon = 1.0);

Realization sample_realization(const SimulationConfig& config, std::uint64_t replica);

Realization sample_homogenized(const SimulationConfig& config, double epsilon, std::uint64_t replica);

// Draws only the balls that contain at least one probe point. For each probe p_j
// and shell, centers are proposed in the cube around p_j and a ball is kept iff it
// covers p_j and no earlier probe, so the union is an exact draw of the Poisson
// measure restricted to balls hitting the probe set. The expected count stays
// bounded as r_min -> 0, which makes very small truncation radii affordable.
// epsilon < 1 draws from the homogenized intensity instead.
Realization sample_at_probes(const SimulationConfig& config, const std::vector<Point>& probes,
                             std::uint64_t replica, double epsilon = 1.0);

// Same construction for the segments y_j + p alpha, |p| <= half_length: centers
// are proposed in the oriented box around each segment and a ball is kept iff it
// meets segment j and no earlier one. Feeds the X-ray transform on those lines.
Realization sample_along_lines(const SimulationConfig& config, const Direction& alpha,
                               const std::vector<Point>& feet, double half_length, std::uint64_t replica);

// (omega_d / h_lo) r_min^{2 h_lo}, scaled by eps^{-d + 2 h_lo} for homogenized draws.
double truncation_bound(int dim, double h_lo, double r_min, double epsilon = 1.0);

void write_realization(std::ostream& os, const Realization& r);
Realization read_realization(std::istream& is);

}  // namespace microball
