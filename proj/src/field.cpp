#include "microball/field.hpp"

#include <map>
#include <numeric>
#include <ostream>

#include "microball/errors.hpp"

namespace microball {

SpatialIndex::SpatialIndex(const Realization& real)
    : dim_(real.dim),
      window_(real.window),
      probes_(real.probes),
      line_feet_(real.line_feet),
      line_alpha_(real.line_alpha),
      line_half_length_(real.line_half_length) {
    std::map<int, std::vector<std::uint32_t>> by_shell;
    for (std::size_t i = 0; i < real.balls.size(); ++i) by_shell[real.balls[i].shell].push_back(static_cast<std::uint32_t>(i));
    std::map<int, double> shell_hi;
    for (const Shell& s : real.shells) shell_hi[s.id] = s.r_hi;

    std::size_t total = real.balls.size();
    keys_.reserve(total);
    for (auto& c : c_) c.reserve(dim_ > 0 ? total : 0);
    r2_.reserve(total);
    id_.reserve(total);

    for (auto& [shell, ids] : by_shell) {
        Grid g;
        double rmax = 0;
        std::array<double, kMaxDim> lo{}, hi{};
        lo.fill(std::numeric_limits<double>::infinity());
        hi.fill(-std::numeric_limits<double>::infinity());
        for (std::uint32_t i : ids) {
            const BallEvent& b = real.balls[i];
            rmax = std::max(rmax, b.radius);
            for (int k = 0; k < dim_; ++k) {
                lo[k] = std::min(lo[k], b.center[k]);
                hi[k] = std::max(hi[k], b.center[k]);
            }
        }
        auto it = shell_hi.find(shell);
        g.cell = std::max(rmax, it == shell_hi.end() ? 0.0 : it->second);
        // Keep the key space within 62 bits; larger cells remain exact for one-ring queries.
        for (;;) {
            double cells = 1;
            for (int k = 0; k < dim_; ++k) cells *= (hi[k] - lo[k]) / g.cell + 3;
            if (cells < 0x1.0p62) break;
            g.cell *= 2;
        }
        g.inv = 1.0 / g.cell;
        for (int k = 0; k < dim_; ++k) {
            g.origin[k] = lo[k] - g.cell;
            g.n[k] = static_cast<std::int64_t>(std::floor((hi[k] - g.origin[k]) * g.inv)) + 2;
        }
        std::vector<std::pair<std::uint64_t, std::uint32_t>> keyed;
        keyed.reserve(ids.size());
        for (std::uint32_t i : ids) {
            const BallEvent& b = real.balls[i];
            std::uint64_t key = 0;
            for (int k = dim_ - 1; k >= 0; --k) {
                auto ix = static_cast<std::int64_t>(std::floor((b.center[k] - g.origin[k]) * g.inv));
                key = key * static_cast<std::uint64_t>(g.n[k]) + static_cast<std::uint64_t>(ix);
            }
            keyed.emplace_back(key, i);
        }
        std::stable_sort(keyed.begin(), keyed.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        g.begin = keys_.size();
        for (auto& [key, i] : keyed) {
            const BallEvent& b = real.balls[i];
            keys_.push_back(key);
            for (int k = 0; k < dim_; ++k) c_[k].push_back(b.center[k]);
            r2_.push_back(b.radius * b.radius);
            id_.push_back(i);
        }
        g.end = keys_.size();
        grids_.push_back(g);
    }
}

long SpatialIndex::count(const Point& x) const {
    if (x.dim != dim_) throw UsageError("query dimension does not match the realization");
    long n = 0;
    for (const Grid& g : grids_)
        scan_grid(g, x, [&](std::uint32_t slot) { n += covers(slot, x); });
    return n;
}

void SpatialIndex::increment(const Point& x0, const Point& x1, long& n_plus, long& n_minus) const {
    if (x0.dim != dim_ || x1.dim != dim_) throw UsageError("query dimension does not match the realization");
    n_plus = n_minus = 0;
    for (const Grid& g : grids_) {
        scan_grid(g, x1, [&](std::uint32_t slot) { n_plus += covers(slot, x1) && !covers(slot, x0); });
        scan_grid(g, x0, [&](std::uint32_t slot) { n_minus += covers(slot, x0) && !covers(slot, x1); });
    }
}

SpatialIndex build_spatial_index(const Realization& real) { return SpatialIndex(real); }

bool SpatialIndex::valid_query(const Point& x) const {
    if (!probes_.empty()) {
        for (const Point& p : probes_)
            if (p == x) return true;
        return false;
    }
    if (!line_feet_.empty()) {
        for (const Point& y : line_feet_) {
            double t = dot(x - y, line_alpha_);
            if (std::abs(t) <= line_half_length_ && dist2(x, y + t * line_alpha_) <= 1e-24 * std::max(1.0, norm2(x)))
                return true;
        }
        return false;
    }
    return window_.contains(x);
}

CoverageField evaluate_coverage(const SpatialIndex& index, const std::vector<Point>& points) {
    CoverageField out;
    out.points = points;
    out.counts.reserve(points.size());
    out.outside.reserve(points.size());
    for (const Point& x : points) {
        out.counts.push_back(index.count(x));
        bool bad = !index.valid_query(x);
        out.outside.push_back(bad);
        out.flagged |= bad;
    }
    return out;
}

std::vector<IncrementSample> increment_samples(const SpatialIndex& index, const Point& x0,
                                               const std::vector<Point>& lags) {
    if (!index.valid_query(x0)) throw UsageError("base point " + x0.str() + " is not a valid query point");
    std::vector<IncrementSample> out;
    out.reserve(lags.size());
    for (const Point& lag : lags) {
        Point x1 = x0 + lag;
        if (!index.valid_query(x1)) throw UsageError("increment endpoint " + x1.str() + " is not a valid query point");
        IncrementSample s;
        index.increment(x0, x1, s.n_plus, s.n_minus);
        s.delta = s.n_plus - s.n_minus;
        out.push_back(s);
    }
    return out;
}

long brute_force_count(const Realization& real, const Point& x) {
    long n = 0;
    for (const BallEvent& b : real.balls) n += dist2(b.center, x) < b.radius * b.radius;
    return n;
}

void write_coverage_csv(std::ostream& os, const CoverageField& field, const std::string& header) {
    if (!header.empty()) os << header << (header.back() == '\n' ? "" : "\n");
    int d = field.points.empty() ? 0 : field.points.front().dim;
    for (int k = 0; k < d; ++k) os << 'x' << (k + 1) << ',';
    os << "count\n";
    char buf[40];
    for (std::size_t i = 0; i < field.points.size(); ++i) {
        for (int k = 0; k < d; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,", field.points[i][k]);
            os << buf;
        }
        os << field.counts[i] << '\n';
    }
}

}  // namespace microball
