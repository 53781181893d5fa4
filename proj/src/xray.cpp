#include "microball/xray.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <ostream>

#include "microball/errors.hpp"
#include "microball/numeric.hpp"

namespace microball {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Fixed 10-point Gauss-Legendre for short intervals, where differencing the
// antiderivative would cancel.
template <class F>
double short_interval(F&& f, double a, double b) {
    return boost::math::quadrature::gauss<double, 10>::integrate(f, a, b);
}

double clipped(double a, double b, double L, double& lo, double& hi) {
    lo = std::clamp(std::min(a, b), -L, L);
    hi = std::clamp(std::max(a, b), -L, L);
    return b >= a ? 1.0 : -1.0;
}

}  // namespace

WindowFunction WindowFunction::rectangular(double L) {
    if (!(L > 0) || !std::isfinite(L)) throw ConfigError("rectangular window needs L > 0");
    WindowFunction w;
    w.kind_ = Kind::Rectangular;
    w.param_ = L;
    return w;
}

WindowFunction WindowFunction::gaussian(double sigma) {
    if (!(sigma > 0) || !std::isfinite(sigma)) throw ConfigError("gaussian window needs sigma > 0");
    WindowFunction w;
    w.kind_ = Kind::Gaussian;
    w.param_ = sigma;
    return w;
}

WindowFunction WindowFunction::hann(double L) {
    if (!(L > 0) || !std::isfinite(L)) throw ConfigError("hann window needs L > 0");
    WindowFunction w;
    w.kind_ = Kind::Hann;
    w.param_ = L;
    return w;
}

std::string WindowFunction::str() const {
    char buf[64];
    const char* name = kind_ == Kind::Rectangular ? "rectangular" : kind_ == Kind::Gaussian ? "gaussian" : "hann";
    std::snprintf(buf, sizeof buf, "%s(%.17g)", name, param_);
    return buf;
}

double WindowFunction::operator()(double p) const {
    switch (kind_) {
        case Kind::Rectangular:
            return std::abs(p) <= param_ ? 1.0 : 0.0;
        case Kind::Gaussian:
            return std::exp(-p * p / (2 * param_ * param_));
        case Kind::Hann: {
            if (std::abs(p) >= param_) return 0.0;
            double c = std::cos(kPi * p / (2 * param_));
            return c * c;
        }
    }
    return 0.0;
}

double window_value(const WindowFunction& w, double p) { return w(p); }

double WindowFunction::integral(double a, double b) const {
    if (a == b) return 0.0;
    double lo, hi;
    switch (kind_) {
        case Kind::Rectangular: {
            double sgn = clipped(a, b, param_, lo, hi);
            return sgn * (hi - lo);
        }
        case Kind::Gaussian: {
            const double s = param_;
            if (std::abs(b - a) < 0.25 * s) return short_interval([&](double p) { return (*this)(p); }, a, b);
            const double k = s * std::sqrt(kPi / 2);
            const double ua = a / (s * std::sqrt(2.0)), ub = b / (s * std::sqrt(2.0));
            if (ua > 0 && ub > 0) return k * (std::erfc(ua) - std::erfc(ub));
            if (ua < 0 && ub < 0) return k * (std::erfc(-ub) - std::erfc(-ua));
            return k * (std::erf(ub) - std::erf(ua));
        }
        case Kind::Hann: {
            double sgn = clipped(a, b, param_, lo, hi);
            if (hi <= lo) return 0.0;
            if (hi - lo < 0.125 * param_)
                return sgn * short_interval([&](double p) { return (*this)(p); }, lo, hi);
            const double L = param_;
            auto F = [L](double p) { return 0.5 * p + L / (2 * kPi) * std::sin(kPi * p / L); };
            return sgn * (F(hi) - F(lo));
        }
    }
    return 0.0;
}

double WindowFunction::decay_constant(int n) const {
    if (n < 0) throw UsageError("decay order must be non-negative");
    if (kind_ == Kind::Gaussian) {
        double s2 = param_ * param_;
        double p = (-1.0 + std::sqrt(1.0 + 4.0 * n * s2)) / 2.0;
        return std::pow(1.0 + p, n) * std::exp(-p * p / (2 * s2));
    }
    return std::pow(1.0 + param_, n);
}

double WindowFunction::l2_norm2() const {
    switch (kind_) {
        case Kind::Rectangular: return 2 * param_;
        case Kind::Gaussian: return param_ * std::sqrt(kPi);
        case Kind::Hann: return 0.75 * param_;  // integral of cos^4 over [-L, L]
    }
    return 0.0;
}

double WindowFunction::total_mass() const {
    switch (kind_) {
        case Kind::Rectangular: return 2 * param_;
        case Kind::Gaussian: return param_ * std::sqrt(2 * kPi);
        case Kind::Hann: return param_;
    }
    return 0.0;
}

double WindowFunction::mass_radius(double tol) const {
    if (kind_ != Kind::Gaussian) return param_;
    return param_ * std::sqrt(2.0) * boost::math::erfc_inv(tol);
}

// ---------------------------------------------------------------- XrayIndex

static Realization project(const Realization& real, const Hyperplane& plane) {
    Realization pr;
    pr.dim = real.dim - 1;
    pr.shells = real.shells;
    pr.balls.reserve(real.balls.size());
    for (const BallEvent& b : real.balls) pr.balls.push_back({plane.coords(b.center), b.radius, b.shell});
    return pr;
}

XrayIndex::XrayIndex(const Realization& real, const Direction& alpha)
    : dim_(real.dim), window_(real.window), plane_(alpha) {
    if (real.dim < 2) throw UsageError("the X-ray transform needs d >= 2");
    if (alpha.dim() != real.dim) throw UsageError("direction dimension does not match the realization");
    if (!real.probes.empty()) throw UsageError("probe-restricted realizations do not support X-ray transforms");
    if (!real.line_feet.empty()) {
        if (std::abs(dot(real.line_alpha, alpha.v) - 1.0) > 1e-12)
            throw UsageError("realization was drawn along a different direction");
        feet_ = real.line_feet;
        half_length_ = real.line_half_length;
    }
    projected_ = SpatialIndex(project(real, plane_));
    q_.reserve(real.balls.size());
    along_.reserve(real.balls.size());
    r2_.reserve(real.balls.size());
    for (const BallEvent& b : real.balls) {
        q_.push_back(plane_.coords(b.center));
        along_.push_back(plane_.along(b.center));
        r2_.push_back(b.radius * b.radius);
    }
}

void XrayIndex::check_line(const WindowFunction& w, const Point& y) const {
    if (y.dim != dim_) throw UsageError("query dimension does not match the realization");
    if (std::abs(plane_.along(y)) > 1e-10 * std::max(1.0, norm(y)))
        throw UsageError("query point " + y.str() + " is not on the hyperplane orthogonal to alpha");
    double t = w.mass_radius();
    if (!feet_.empty()) {
        bool on = false;
        for (const Point& f : feet_) on = on || dist2(f, y) <= 1e-24 * std::max(1.0, norm2(y));
        if (!on) throw UsageError("query point " + y.str() + " is not one of the sampled lines");
        if (half_length_ < t) throw UsageError("sampled segments are shorter than the effective support of rho");
        return;
    }
    Box tol = window_.dilated(1e-9 * std::max(1.0, t));
    if (!tol.contains(y + t * plane_.alpha().v) || !tol.contains(y - t * plane_.alpha().v))
        throw UsageError("line through " + y.str() + " leaves the window within the effective support of rho");
}

template <class F>
double XrayIndex::sum_over(const Point& y0, const Point& y1, bool pair, F&& contribution) const {
    std::vector<std::uint32_t> ids;
    Point a = plane_.coords(y0), b = plane_.coords(y1);
    projected_.for_each_candidate(a, [&](std::uint32_t id) { ids.push_back(id); });
    if (pair) projected_.for_each_candidate(b, [&](std::uint32_t id) { ids.push_back(id); });
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    NeumaierSum acc;
    for (std::uint32_t id : ids) {
        double s0 = r2_[id] - dist2(q_[id], a);
        double s1 = pair ? r2_[id] - dist2(q_[id], b) : 0.0;
        s0 = s0 > 0 ? std::sqrt(s0) : 0.0;
        s1 = s1 > 0 ? std::sqrt(s1) : 0.0;
        if (s0 == 0 && s1 == 0) continue;
        acc.add(contribution(along_[id], s0, s1));
    }
    return acc.value();
}

double XrayIndex::transform(const WindowFunction& w, const Point& y) const {
    check_line(w, y);
    return sum_over(y, y, false, [&](double c, double s0, double) { return w.integral(c - s0, c + s0); });
}

double XrayIndex::increment(const WindowFunction& w, const Point& y0, const Point& y1) const {
    check_line(w, y0);
    check_line(w, y1);
    if (y0 == y1) return 0.0;
    return sum_over(y0, y1, true, [&](double c, double s0, double s1) {
        return w.integral(c + s0, c + s1) + w.integral(c - s1, c - s0);
    });
}

std::vector<double> xray_transform(const Realization& real, const Direction& alpha, const WindowFunction& w,
                                   const std::vector<Point>& ys) {
    XrayIndex index(real, alpha);
    std::vector<double> out;
    out.reserve(ys.size());
    for (const Point& y : ys) out.push_back(index.transform(w, y));
    return out;
}

std::vector<double> xray_increment_samples(const Realization& real, const Direction& alpha,
                                           const WindowFunction& w, const Point& y0,
                                           const std::vector<Point>& lags) {
    XrayIndex index(real, alpha);
    std::vector<double> out;
    out.reserve(lags.size());
    for (const Point& lag : lags) out.push_back(index.increment(w, y0, y0 + lag));
    return out;
}

void write_projection_csv(std::ostream& os, const Hyperplane& plane, const std::vector<Point>& ys,
                          const std::vector<double>& values, const std::string& header) {
    if (ys.size() != values.size()) throw UsageError("projection points and values differ in length");
    if (!header.empty()) os << header << (header.back() == '\n' ? "" : "\n");
    int d1 = plane.dim() - 1;
    for (int k = 0; k < d1; ++k) os << 'y' << (k + 1) << ',';
    os << "value\n";
    char buf[40];
    for (std::size_t i = 0; i < ys.size(); ++i) {
        Point q = plane.coords(ys[i]);
        for (int k = 0; k < d1; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,", q[k]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", values[i]);
        os << buf << '\n';
    }
}

void write_projection_pgm(std::ostream& os, const std::vector<double>& values, int width, int height,
                          const std::string& comment) {
    if (width <= 0 || height <= 0 || values.size() != static_cast<std::size_t>(width) * height)
        throw UsageError("PGM raster size does not match the value count");
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn, hi = *mx;
    char buf[256];
    os << "P5\n";
    if (!comment.empty()) os << "# " << comment << '\n';
    std::snprintf(buf, sizeof buf, "# linear scaling: pixel = round(65535 * (value - %.17g) / (%.17g - %.17g))\n", lo,
                  hi, lo);
    os << buf << width << ' ' << height << "\n65535\n";
    double span = hi > lo ? hi - lo : 1.0;
    for (double v : values) {
        auto px = static_cast<unsigned>(std::lround(65535.0 * (v - lo) / span));
        os.put(static_cast<char>((px >> 8) & 0xff));
        os.put(static_cast<char>(px & 0xff));
    }
}

}  // namespace microball
