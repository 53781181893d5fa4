#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "microball/sampler.hpp"

namespace microball {

// Per-shell uniform grids with cell side equal to the shell's upper radius.
// Balls are stored structure-of-arrays and sorted by cell key within a shell, so
// a one-ring query is (3^{d-1}) contiguous key ranges found by binary search.
class SpatialIndex {
public:
    SpatialIndex() = default;
    explicit SpatialIndex(const Realization& real);

    int dim() const { return dim_; }
    std::size_t size() const { return r2_.size(); }
    const Box& window() const { return window_; }
    const std::vector<Point>& probes() const { return probes_; }
    // Whether x is a point where the counts are exact for this realization:
    // inside the window, or on the probe set / segments of a restricted draw.
    bool valid_query(const Point& x) const;

    // Number of balls strictly containing x.
    long count(const Point& x) const;

    // Balls containing x1 but not x0 (n_plus) and x0 but not x1 (n_minus).
    void increment(const Point& x0, const Point& x1, long& n_plus, long& n_minus) const;

    // Calls f(ball id) for every candidate ball that may cover x. Ball ids refer
    // to the realization order.
    template <class F>
    void for_each_candidate(const Point& x, F&& f) const;

    bool covers(std::uint32_t slot, const Point& x) const {
        double s = 0;
        for (int k = 0; k < dim_; ++k) {
            double t = x[k] - c_[k][slot];
            s += t * t;
        }
        return s < r2_[slot];
    }

private:
    struct Grid {
        double cell = 0;
        double inv = 0;
        std::array<double, kMaxDim> origin{};
        std::array<std::int64_t, kMaxDim> n{};
        std::size_t begin = 0, end = 0;  // slot range in the SoA arrays
    };

    template <class F>
    void scan_grid(const Grid& g, const Point& x, F&& f) const;

    int dim_ = 0;
    Box window_;
    std::vector<Point> probes_;
    std::vector<Point> line_feet_;
    Point line_alpha_;
    double line_half_length_ = 0;
    std::vector<Grid> grids_;
    std::vector<std::uint64_t> keys_;
    std::array<std::vector<double>, kMaxDim> c_;
    std::vector<double> r2_;
    std::vector<std::uint32_t> id_;
};

SpatialIndex build_spatial_index(const Realization& real);

struct CoverageField {
    std::vector<Point> points;
    std::vector<long> counts;
    // Queries outside the window (or, for probe-restricted draws, away from the
    // probes) are answered but may miss balls; they are flagged here.
    std::vector<char> outside;
    bool flagged = false;
};

CoverageField evaluate_coverage(const SpatialIndex& index, const std::vector<Point>& points);

struct IncrementSample {
    long delta = 0;
    long n_plus = 0;
    long n_minus = 0;
};

// Delta X(lag) = X(x0 + lag) - X(x0). Both points must be valid query points.
std::vector<IncrementSample> increment_samples(const SpatialIndex& index, const Point& x0,
                                               const std::vector<Point>& lags);

// Brute-force linear scan, used as a test oracle.
long brute_force_count(const Realization& real, const Point& x);

void write_coverage_csv(std::ostream& os, const CoverageField& field, const std::string& header = "");

// ------------------------------------------------------------------ inline

template <class F>
void SpatialIndex::scan_grid(const Grid& g, const Point& x, F&& f) const {
    std::array<std::int64_t, kMaxDim> ix{};
    for (int k = 0; k < dim_; ++k) {
        double t = std::floor((x[k] - g.origin[k]) * g.inv);
        if (!(t >= -1.0 && t <= static_cast<double>(g.n[k]))) return;  // no ball of this shell reaches x
        ix[k] = static_cast<std::int64_t>(t);
    }
    std::int64_t x0 = std::max<std::int64_t>(ix[0] - 1, 0), x1 = std::min<std::int64_t>(ix[0] + 1, g.n[0] - 1);
    if (x0 > x1) return;
    auto row = [&](std::int64_t rowkey) {
        std::uint64_t lo = static_cast<std::uint64_t>(rowkey + x0), hi = static_cast<std::uint64_t>(rowkey + x1);
        auto first = keys_.begin() + static_cast<std::ptrdiff_t>(g.begin);
        auto last = keys_.begin() + static_cast<std::ptrdiff_t>(g.end);
        auto a = std::lower_bound(first, last, lo);
        for (; a != last && *a <= hi; ++a) f(static_cast<std::uint32_t>(a - keys_.begin()));
    };
    if (dim_ == 1) {
        row(0);
        return;
    }
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
        std::int64_t y = ix[1] + dy;
        if (y < 0 || y >= g.n[1]) continue;
        if (dim_ == 2) {
            row(y * g.n[0]);
            continue;
        }
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
            std::int64_t z = ix[2] + dz;
            if (z < 0 || z >= g.n[2]) continue;
            row((z * g.n[1] + y) * g.n[0]);
        }
    }
}

template <class F>
void SpatialIndex::for_each_candidate(const Point& x, F&& f) const {
    for (const Grid& g : grids_) scan_grid(g, x, [&](std::uint32_t slot) { f(id_[slot]); });
}

}  // namespace microball
