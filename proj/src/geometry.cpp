#include "microball/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "microball/errors.hpp"

namespace microball {

Point::Point(int d) : dim(d) {
    if (d < 0 || d > kMaxDim) throw UsageError("dimension must be in 0..3");
}

Point::Point(std::initializer_list<double> xs) {
    if (xs.size() > kMaxDim) throw UsageError("dimension must be in 0..3");
    dim = static_cast<int>(xs.size());
    std::copy(xs.begin(), xs.end(), c.begin());
}

bool Point::finite() const {
    for (int i = 0; i < dim; ++i)
        if (!std::isfinite(c[i])) return false;
    return true;
}

std::string Point::str() const {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (int i = 0; i < dim; ++i) os << (i ? "," : "") << c[i];
    os << ')';
    return os.str();
}

static void same_dim(const Point& a, const Point& b) {
    if (a.dim != b.dim) throw UsageError("dimension mismatch: " + a.str() + " vs " + b.str());
}

Point operator+(const Point& a, const Point& b) {
    same_dim(a, b);
    Point r(a.dim);
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
}

Point operator-(const Point& a, const Point& b) {
    same_dim(a, b);
    Point r(a.dim);
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
}

Point operator*(double s, const Point& a) {
    Point r(a.dim);
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = s * a.c[i];
    return r;
}

bool operator==(const Point& a, const Point& b) { return a.dim == b.dim && a.c == b.c; }

double dot(const Point& a, const Point& b) {
    same_dim(a, b);
    return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2];
}

double norm2(const Point& a) { return a.c[0] * a.c[0] + a.c[1] * a.c[1] + a.c[2] * a.c[2]; }

double norm(const Point& a) { return std::sqrt(norm2(a)); }

double dist2(const Point& a, const Point& b) {
    same_dim(a, b);
    double dx = a.c[0] - b.c[0], dy = a.c[1] - b.c[1], dz = a.c[2] - b.c[2];
    return dx * dx + dy * dy + dz * dz;
}

Direction::Direction(const Point& unit) : v(unit) {
    if (unit.dim < 1) throw UsageError("direction needs d >= 1");
    if (std::abs(norm(unit) - 1.0) > 1e-12) throw UsageError("direction is not a unit vector");
}

Direction Direction::normalized(const Point& p) {
    double n = norm(p);
    if (!(n > 0) || !std::isfinite(n)) throw UsageError("cannot normalize " + p.str());
    Direction d;
    d.v = (1.0 / n) * p;
    return d;
}

Direction Direction::axis(int d, int k) {
    Point p(d);
    p[k] = 1.0;
    return Direction(p);
}

Box::Box(Point lo_, Point hi_) : lo(lo_), hi(hi_) {
    same_dim(lo, hi);
    for (int k = 0; k < lo.dim; ++k)
        if (!(hi[k] >= lo[k])) throw UsageError("box has hi < lo");
}

double Box::volume() const {
    double v = 1.0;
    for (int k = 0; k < dim(); ++k) v *= extent(k);
    return v;
}

bool Box::contains(const Point& p) const {
    same_dim(lo, p);
    for (int k = 0; k < dim(); ++k)
        if (p[k] < lo[k] || p[k] > hi[k]) return false;
    return true;
}

Box Box::dilated(double margin) const {
    Box b = *this;
    for (int k = 0; k < dim(); ++k) {
        b.lo[k] -= margin;
        b.hi[k] += margin;
    }
    return b;
}

bool ball_contains(const Ball& b, const Point& x) {
    return dist2(b.center, x) < b.radius * b.radius;
}

std::optional<std::pair<double, double>> chord_interval(const Ball& b, const Point& y,
                                                        const Direction& alpha) {
    same_dim(b.center, y);
    same_dim(y, alpha.v);
    if (std::abs(dot(y, alpha.v)) > 1e-10) throw UsageError("y is not on the hyperplane <alpha>^perp");
    Point rel = b.center - y;
    double c = dot(rel, alpha.v);
    Point perp = rel - c * alpha.v;
    double h2 = b.radius * b.radius - norm2(perp);
    if (!(h2 > 0.0)) return std::nullopt;
    double s = std::sqrt(h2);
    return std::make_pair(c - s, c + s);
}

int psi_indicator(const Point& x, const Point& xi, double r) {
    same_dim(x, xi);
    double r2 = r * r;
    double a = dist2(x, xi);  // |x - xi|^2
    double b = norm2(xi);     // |xi|^2
    if (a < r2 && r2 <= b) return 1;
    if (b < r2 && r2 <= a) return -1;
    return 0;
}

double g_profile(const Point& y, const Point& gamma, double r) {
    same_dim(y, gamma);
    double r2 = r * r;
    double a = r2 - dist2(y, gamma);
    double b = r2 - norm2(gamma);
    if (a > 0 && b > 0) {
        // rationalized, with a - b = 2 y.gamma - |y|^2 formed directly, so the
        // relative accuracy survives r >> |y|
        return (2 * dot(y, gamma) - norm2(y)) / (std::sqrt(a) + std::sqrt(b));
    }
    return (a > 0 ? std::sqrt(a) : 0.0) - (b > 0 ? std::sqrt(b) : 0.0);
}

Hyperplane::Hyperplane(const Direction& alpha) : alpha_(alpha) {
    int d = alpha.dim();
    int skip = 0;
    for (int k = 1; k < d; ++k)
        if (std::abs(alpha.v[k]) > std::abs(alpha.v[skip])) skip = k;
    int n = 0;
    for (int k = 0; k < d; ++k) {
        if (k == skip) continue;
        Point e(d);
        e[k] = 1.0;
        e = e - dot(e, alpha.v) * alpha.v;
        for (int j = 0; j < n; ++j) e = e - dot(e, basis_[j]) * basis_[j];
        basis_[n++] = (1.0 / norm(e)) * e;
    }
}

Point Hyperplane::embed(const Point& intrinsic) const {
    int d = dim();
    if (intrinsic.dim != d - 1) throw UsageError("hyperplane coordinates must have d-1 entries");
    Point y(d);
    for (int k = 0; k < d - 1; ++k) y = y + intrinsic[k] * basis_[k];
    return y;
}

Point Hyperplane::coords(const Point& ambient) const {
    int d = dim();
    if (ambient.dim != d) throw UsageError("dimension mismatch in hyperplane projection");
    Point c(d - 1);
    for (int k = 0; k < d - 1; ++k) c[k] = dot(ambient, basis_[k]);
    return c;
}

double unit_ball_volume(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi / 3.0;
        case 0: return 1.0;
        default: throw UsageError("dimension must be in 0..3");
    }
}

}  // namespace microball
