#include "microball/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "microball/errors.hpp"
#include "microball/quadrature.hpp"
#include "microball/special.hpp"

namespace microball {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_m(double m) {
    if (!(m > 0 && m < 0.5)) throw DomainError("m must lie in (0, 1/2)");
}

void check_d(int d) {
    if (d < 1 || d > 3) throw UsageError("dimension must be 1, 2 or 3");
}

OracleResult result(const Quad& q, const char* method = "quadrature") {
    return {q.value, std::abs(q.error), method};
}

// |xi|^{2m-d} - |e - xi|^{2m-d} at xi = rho * omega with omega . e = c, |e| = 1.
double radial_difference(double rho, double c, double p) {
    if (rho > 2) {
        double t = -2 * c / rho + 1 / (rho * rho);
        return -std::pow(rho, p) * std::expm1(0.5 * p * std::log1p(t));
    }
    return std::pow(rho, p) - std::pow(1 - 2 * rho * c + rho * rho, 0.5 * p);
}

// int_lo^hi f(rho) d rho for f ~ rho^gamma near 0, via rho = hi w^{1/(gamma+1)}.
Quad radial_power(const Integrand& f, double lo, double hi, double gamma, double tol) {
    if (hi <= lo) return {};
    const double k = 1.0 / (gamma + 1.0);
    const double w0 = lo > 0 ? std::pow(lo / hi, gamma + 1.0) : 0.0;
    auto g = [&](double w) {
        if (w <= 0) return 0.0;
        double rho = hi * std::pow(w, k);
        return f(rho) * hi * k * std::pow(w, k - 1.0);
    };
    return integrate(g, w0, 1.0, tol);
}

// Integral over directions of the unit sphere in R^d of f(omega).
Quad sphere_integral(int d, const std::function<double(const Point&)>& f, double tol) {
    if (d == 1) {
        return {f(Point{1.0}) + f(Point{-1.0}), 0.0};
    }
    if (d == 2) {
        return integrate([&](double t) { return f(Point{std::cos(t), std::sin(t)}); }, 0.0, 2 * kPi, tol);
    }
    double inner_err = 0;
    auto outer = [&](double c) {
        double s = std::sqrt(std::max(0.0, 1 - c * c));
        Quad q = integrate([&](double ph) { return f(Point{c, s * std::cos(ph), s * std::sin(ph)}); }, 0.0,
                           2 * kPi, tol);
        inner_err = std::max(inner_err, std::abs(q.error));
        return q.value;
    };
    Quad q = integrate(outer, -1.0, 1.0, tol);
    q.error += inner_err * 4 * kPi;
    return q;
}

// Symmetric-difference volume of B(0, r) and B(D e, r).
double symdiff_volume(int d, double r, double D) {
    if (2 * r <= D) return 2 * unit_ball_volume(d) * std::pow(r, d);
    switch (d) {
        case 1: return 2 * D;
        case 2: return 4 * r * r * std::asin(D / (2 * r)) + D * std::sqrt(4 * r * r - D * D);
        default: return 2 * kPi * r * r * D - kPi * D * D * D / 6;
    }
}

}  // namespace

// ---------------------------------------------------------------- C(m)

OracleResult psi_moment_constant(int d, double m, double rel_tol) {
    check_d(d);
    check_m(m);
    const double p = 2 * m - d;
    if (d == 1) {
        // int_{xi < 1/2} (|xi|^{2m-1} - |1-xi|^{2m-1}) dxi, split at 0 and at 1 on the negative side
        Quad q = integrate_singular_left([&](double x) { return radial_difference(x, 1.0, p); }, 0.0, 0.5, 2 * m - 1,
                                         rel_tol);
        q += integrate_singular_left([&](double t) { return radial_difference(t, -1.0, p); }, 0.0, 1.0, 2 * m - 1,
                                     rel_tol);
        q += integrate_tail([&](double t) { return radial_difference(t, -1.0, p); }, 1.0, 2 - 2 * m, rel_tol);
        double f = 2 / (1 - 2 * m);
        return {f * q.value, f * std::abs(q.error), "quadrature"};
    }
    double inner_err = 0;
    auto I = [&](double c) {
        double R = c > 0 ? 0.5 / c : kInf;
        auto f = [&](double rho) { return radial_difference(rho, c, p) * std::pow(rho, d - 1); };
        Quad q = integrate_singular_left(f, 0.0, std::min(1.0, R), 2 * m - 1, rel_tol);
        if (R > 1) q += integrate_tail(f, 1.0, 2 - 2 * m, rel_tol, R);
        inner_err = std::max(inner_err, std::abs(q.error));
        return q.value;
    };
    Quad outer;
    double measure;
    if (d == 2) {
        outer = integrate([&](double t) { return I(std::cos(t)); }, 0.0, kPi / 2, rel_tol);
        outer += integrate([&](double t) { return I(std::cos(t)); }, kPi / 2, kPi, rel_tol);
        outer.value *= 2;
        outer.error *= 2;
        measure = 2 * kPi;
    } else {
        outer = integrate(I, -1.0, 0.0, rel_tol);
        outer += integrate(I, 0.0, 1.0, rel_tol);
        outer.value *= 2 * kPi;
        outer.error *= 2 * kPi;
        measure = 4 * kPi;
    }
    double f = 2 / (d - 2 * m);
    return {f * outer.value, f * (std::abs(outer.error) + inner_err * measure), "quadrature"};
}

OracleResult psi_moment_direct(double m, double p, double lag, double rel_tol) {
    check_m(m);
    if (!(p > 0)) throw DomainError("p must be positive");
    if (!(lag > 0)) throw DomainError("lag must be positive");
    const Point x{lag};
    const double g = 2 * m - 1;
    // inner: int over r of |psi|^p r^a between the two breakpoints. With
    // u = r^g the weight is absorbed (r^a dr = du / g) and only |psi|^p is left.
    // inner(lo, gap): int over r in (lo, lo + gap] of |psi|^p r^a for the
    // centre xi. With u = r^g the weight is absorbed (r^a dr = du / g) and only
    // |psi|^p is left; the u-width goes through expm1 to survive lo >> gap.
    auto inner_at = [&](double xi, double lo, double gap) {
        if (!(lo > 0) || !(gap > 0)) return 0.0;
        const double hi = lo + gap;
        Point c{xi};
        const double u_hi = std::pow(lo, g), w = -u_hi * std::expm1(g * std::log1p(gap / lo));
        const double u_lo = u_hi - w;
        auto at = [&](double s) {
            // keep rounding from stepping outside (lo, hi]
            double r = std::clamp(std::pow(u_lo + w * s, 1 / g), std::nextafter(lo, hi), hi);
            return std::pow(std::abs(static_cast<double>(psi_indicator(x, c, r))), p) * w;
        };
        return integrate(at, 0.0, 1.0, rel_tol * 0.1).value / -g;
    };
    // beyond far the indicator is no longer resolvable in double precision; the
    // remainder int_far^inf (t^g - (t + lag)^g) / -g dt is closed form, weighted by
    // |psi|^p sampled at far
    const double far = std::ldexp(lag, 20);
    const double rest = -std::pow(far, g + 1) * std::expm1((g + 1) * std::log1p(lag / far)) / (g * (g + 1));
    const double q = 2 - 2 * m;
    Quad total = integrate_singular_left([&](double t) { return inner_at(-t, t, lag); }, 0.0, lag, g, rel_tol);
    total += integrate_tail([&](double t) { return inner_at(-t, t, lag); }, lag, q, rel_tol, far);
    // lo and gap are passed directly: recovering them from xi near lag cancels
    total += integrate_singular_left([&](double t) { return inner_at(t, t, lag - 2 * t); }, 0.0, lag / 2, g, rel_tol);
    total += integrate_singular_left([&](double t) { return inner_at(lag - t, t, lag - 2 * t); }, 0.0, lag / 2, g,
                                     rel_tol);
    total += integrate_singular_left([&](double t) { return inner_at(lag + t, t, lag); }, 0.0, lag, g, rel_tol);
    total += integrate_tail([&](double t) { return inner_at(lag + t, t, lag); }, lag, q, rel_tol, far);
    const double closed = std::pow(far, g) * std::expm1(g * std::log1p(lag / far)) / g;
    total.value += rest * (inner_at(-far, far, lag) / closed + inner_at(lag + far, far, lag) / closed);
    return result(total);
}

// ---------------------------------------------------------------- variogram

double small_radius_deficit(int d, double m, double r_min) {
    return unit_ball_volume(d) / m * std::pow(r_min, 2 * m);
}

OracleResult truncated_increment_variance(int d, double m, const Point& x, double r_min, double r_max,
                                          double rel_tol) {
    check_d(d);
    check_m(m);
    if (x.dim != d) throw UsageError("lag dimension does not match d");
    if (!(r_min >= 0) || !(r_max > r_min)) throw DomainError("need 0 <= r_min < r_max");
    const double D = norm(x);
    if (D == 0) return {0.0, 0.0, "closed-form"};
    const double a = -d - 1 + 2 * m;
    const double w = unit_ball_volume(d);
    // below D/2 the two balls are disjoint
    double split = std::min(D / 2, r_max);
    double closed = 0;
    if (split > r_min) closed = 2 * w * (std::pow(split, 2 * m) - std::pow(r_min, 2 * m)) / (2 * m);
    if (r_max <= D / 2) return {closed, 0.0, "closed-form"};
    auto f = [&](double r) { return symdiff_volume(d, r, D) * std::pow(r, a); };
    double lo = std::max(r_min, D / 2);
    Quad q;
    if (d == 1) {
        // S = 2D beyond D/2
        double hi_term = std::isinf(r_max) ? 0.0 : std::pow(r_max, 2 * m - 1);
        q.value = 2 * D * (hi_term - std::pow(lo, 2 * m - 1)) / (2 * m - 1);
        return {closed + q.value, 0.0, "closed-form"};
    }
    double mid = std::min(r_max, std::max(lo, 2 * D));
    q += integrate_endpoints(f, lo, mid, rel_tol);
    if (r_max > mid) {
        if (std::isinf(r_max)) q += integrate_tail(f, mid, 2 - 2 * m, rel_tol);
        else q += integrate_tail(f, mid, 2 - 2 * m, rel_tol, r_max);
    }
    return {closed + q.value, std::abs(q.error), "quadrature"};
}

OracleResult large_radius_tail(int d, double m, const Point& x, double r_max) {
    OracleResult all = truncated_increment_variance(d, m, x, r_max, kInf);
    return all;
}

// ---------------------------------------------------------------- means

OracleResult mean_coverage(int d, const IndexField& h, double r_min, double r_max, const Point& x_in) {
    check_d(d);
    if (!(r_min >= 0) || !(r_max >= r_min)) throw DomainError("need 0 <= r_min <= r_max");
    if (r_min == r_max) return {0.0, 0.0, "closed-form"};
    if (h.is_constant()) {
        double m = h.constant_value();
        return {unit_ball_volume(d) * (std::pow(r_max, 2 * m) - std::pow(r_min, 2 * m)) / (2 * m), 0.0,
                "closed-form"};
    }
    Point x = x_in.dim == 0 ? Point(d) : x_in;
    if (x.dim != d) throw UsageError("point dimension does not match d");
    const double gamma = 2 * h.h_lo() - 1;
    double inner_err = 0;
    auto on_ray = [&](const Point& omega) {
        auto f = [&](double rho) {
            Point xi = x + rho * omega;
            if (h.kind() == IndexKind::Star && norm2(xi) == 0) return 0.0;
            double p = 2 * h(xi) - d;
            return std::pow(rho, d - 1) * (std::pow(r_max, p) - std::pow(std::max(rho, r_min), p)) / p;
        };
        Quad q = radial_power(f, 0.0, r_max, gamma, 1e-11);
        inner_err = std::max(inner_err, std::abs(q.error));
        return q.value;
    };
    Quad q = sphere_integral(d, on_ray, 1e-10);
    return {q.value, std::abs(q.error) + inner_err * 4 * kPi, "quadrature"};
}

OracleResult mean_increment(int d, const IndexField& h, const Point& x0, const Point& lag, double r_min,
                            double r_max, double rel_tol) {
    check_d(d);
    if (x0.dim != d || lag.dim != d) throw UsageError("point dimension does not match d");
    if (!(r_min >= 0) || !(r_max > r_min)) throw DomainError("need 0 <= r_min < r_max");
    if (norm2(lag) == 0) return {0.0, 0.0, "closed-form"};
    const double gamma = 2 * h.h_lo() - 1;
    double inner_err = 0;
    // I(c) = int_{B(c, r_max)} (max(|xi-c|, r_min)^p - r_max^p) / p dxi, p = 2h(xi) - d
    auto ball = [&](const Point& c) {
        auto on_ray = [&](const Point& omega) {
            auto f = [&](double rho) {
                Point xi = c + rho * omega;
                if (h.kind() == IndexKind::Star && norm2(xi) == 0) return 0.0;
                double p = 2 * h(xi) - d;
                return std::pow(rho, d - 1) * (std::pow(std::max(rho, r_min), p) - std::pow(r_max, p)) / p;
            };
            Quad q = radial_power(f, 0.0, r_max, gamma, rel_tol * 0.1);
            inner_err = std::max(inner_err, std::abs(q.error));
            return q.value;
        };
        return sphere_integral(d, on_ray, rel_tol);
    };
    Quad a = ball(x0), b = ball(x0 + lag);
    return {a.value - b.value, std::abs(a.error) + std::abs(b.error) + 2 * inner_err * 4 * kPi, "quadrature"};
}

// ---------------------------------------------------------------- star tangent field

namespace {

using P2 = std::array<double, 2>;

double cross(const P2& a, const P2& b) { return a[0] * b[1] - a[1] * b[0]; }
double dot2(const P2& a, const P2& b) { return a[0] * b[0] + a[1] * b[1]; }

// Signed area of triangle (0, a, b) intersected with the disk of radius r at 0.
double tri_disk(const P2& a, const P2& b, double r) {
    const double r2 = r * r;
    auto sector = [&](const P2& u, const P2& v) { return 0.5 * r2 * std::atan2(cross(u, v), dot2(u, v)); };
    P2 dv{b[0] - a[0], b[1] - a[1]};
    double qa = dot2(dv, dv), qb = dot2(a, dv), qc = dot2(a, a) - r2;
    if (qa == 0) return 0.0;
    double disc = qb * qb - qa * qc;
    if (disc <= 0) return sector(a, b);
    double s = std::sqrt(disc);
    double t1 = (-qb - s) / qa, t2 = (-qb + s) / qa;
    if (t2 <= 0 || t1 >= 1) return sector(a, b);
    t1 = std::max(t1, 0.0);
    t2 = std::min(t2, 1.0);
    P2 p1{a[0] + t1 * dv[0], a[1] + t1 * dv[1]};
    P2 p2{a[0] + t2 * dv[0], a[1] + t2 * dv[1]};
    return sector(a, p1) + 0.5 * cross(p1, p2) + sector(p2, b);
}

// Area of the wedge {angle in [ta, tb]} inside B(c, r); the wedge is cut into
// pieces of at most pi/2 so a triangle of side 4 covers it inside B(0, 2).
double wedge_disk(double ta, double tb, const P2& c, double r) {
    int n = std::max(1, static_cast<int>(std::ceil((tb - ta) / (kPi / 2))));
    double area = 0;
    const double F = 4.0;
    for (int i = 0; i < n; ++i) {
        double a0 = ta + (tb - ta) * i / n, a1 = ta + (tb - ta) * (i + 1) / n;
        P2 v0{-c[0], -c[1]};
        P2 v1{F * std::cos(a0) - c[0], F * std::sin(a0) - c[1]};
        P2 v2{F * std::cos(a1) - c[0], F * std::sin(a1) - c[1]};
        area += tri_disk(v0, v1, r) + tri_disk(v1, v2, r) + tri_disk(v2, v0, r);
    }
    return area;
}

}  // namespace

std::vector<std::pair<double, double>> minimizer_sectors(const IndexField& h, double m, int scan) {
    if (!h.is_constant() && h.dim() != 2) throw UsageError("minimizer sectors are defined for d = 2");
    auto member = [&](double t) {
        if (h.is_constant()) return h.constant_value() <= m + 1e-9;
        return h(Point{std::cos(t), std::sin(t)}) <= m + 1e-9;
    };
    const double step = 2 * kPi / scan;
    std::vector<char> in(scan);
    bool all = true, none = true;
    for (int i = 0; i < scan; ++i) {
        in[i] = member(i * step);
        all &= in[i] != 0;
        none &= in[i] == 0;
    }
    if (all) return {{0.0, 2 * kPi}};
    if (none) return {};
    auto refine = [&](double lo, double hi, bool lo_in) {
        for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
            double mid = 0.5 * (lo + hi);
            if ((member(mid) != 0) == lo_in) lo = mid;
            else hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    // start scanning from a non-member so that every sector closes
    int start = 0;
    while (in[start]) ++start;
    std::vector<std::pair<double, double>> out;
    double open_at = 0;
    for (int k = 1; k <= scan; ++k) {
        int i = (start + k) % scan, prev = (start + k - 1) % scan;
        double t1 = (start + k) * step, t0 = t1 - step;
        if (in[i] && !in[prev]) open_at = refine(t0, t1, false);
        if (!in[i] && in[prev]) out.emplace_back(open_at, refine(t0, t1, true));
    }
    return out;
}

OracleResult tangent_field_zm(const Point& x, const IndexField& h, double m) {
    check_m(m);
    if (x.dim != 2) throw UsageError("the star tangent field is implemented for d = 2");
    if (!h.is_constant() && h.kind() != IndexKind::Star) throw UsageError("tangent field needs a star index");
    const double nx = norm(x);
    if (nx == 0) throw DomainError("x must be non-zero");
    auto arcs = minimizer_sectors(h, m);
    double width = 0;
    for (auto& [a, b] : arcs) width += b - a;
    if (width < 1e-9 * 2 * kPi)
        throw DomainError("minimizer cone has numerically zero measure; the tangent field is degenerate");
    if (width >= 2 * kPi * (1 - 1e-15)) return {0.0, 0.0, "closed-form"};
    const double frac = width / (2 * kPi);
    const double tx = std::atan2(x[1], x[0]);
    const P2 c{std::cos(tx), std::sin(tx)};

    auto D = [&](double r) {
        double v = 0;
        for (auto& [a, b] : arcs) v += wedge_disk(a, b, c, r);
        return v - frac * kPi * r * r;
    };
    // breakpoints: distances from x/|x| to the boundary rays
    std::vector<double> br{1.0};
    for (auto& [a, b] : arcs)
        for (double t : {a, b}) {
            double along = std::cos(t - tx);
            double dist = along > 0 ? std::abs(std::sin(t - tx)) : 1.0;
            if (dist > 0 && dist < 1) br.push_back(dist);
        }
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end(), [](double u, double v) { return std::abs(u - v) < 1e-14; }), br.end());

    const double a = -3 + 2 * m;
    // below the first breakpoint the disk sits entirely inside or outside the cone
    bool inside = false;
    for (auto& [s, e] : arcs) {
        double t = tx;
        while (t < s) t += 2 * kPi;
        while (t > s + 2 * kPi) t -= 2 * kPi;
        inside |= t <= e;
    }
    const double b1 = br.front();
    double value = ((inside ? 1.0 : 0.0) - frac) * kPi * std::pow(b1, 2 * m) / (2 * m);
    Quad q;
    for (std::size_t i = 0; i + 1 < br.size(); ++i)
        q += integrate_endpoints([&](double r) { return D(r) * std::pow(r, a); }, br[i], br[i + 1], 1e-12);
    // r > |x|: the cone's area difference is int_cone (cos^2(t - tx) - 1/2) dt
    double K = 0;
    for (auto& [s, e] : arcs) K += (std::sin(2 * (e - tx)) - std::sin(2 * (s - tx))) / 4;
    value += q.value + K / (2 - 2 * m);
    double scale = -std::pow(nx, 2 * m);
    return {scale * value, std::abs(scale) * std::abs(q.error), "quadrature"};
}

// ---------------------------------------------------------------- X-ray covariance

namespace {

// int over R of G(a, u, 1) G(b, u, 1) du. Each half line is integrated in a
// coordinate measured from the nearer unit-circle edge (t = 1 + u on the left,
// t = 1 - u on the right), where 1 - (u - c)^2 factors exactly as
// (t - c')(2 - t + c'). Strips of width |a| next to the edges then keep full
// relative accuracy however small a is.
double unit_overlap_line(double a, double b, double tol) {
    double total = 0;
    for (int side = 0; side < 2; ++side) {
        const double sa = side == 0 ? a : -a, sb = side == 0 ? b : -b;
        auto G = [&](double t, double c) {
            double p = (2 - t + c) * (t - c);  // 1 - (u - c)^2
            double q = (2 - t) * t;            // 1 - u^2
            if (p > 0 && q > 0) return (2 * (t - 1) * c - c * c) / (std::sqrt(p) + std::sqrt(q));
            return (p > 0 ? std::sqrt(p) : 0.0) - (q > 0 ? std::sqrt(q) : 0.0);
        };
        std::vector<double> bp{0.0, 1.0};
        for (double v : {sa, sa + 2, sb, sb + 2, 2.0})
            if (v < 1) bp.push_back(v);
        std::sort(bp.begin(), bp.end());
        for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
            if (bp[i + 1] <= bp[i]) continue;
            double mid = 0.5 * (bp[i] + bp[i + 1]);
            // G vanishes on the bisector, so test support rather than the value
            auto inside = [&](double c) { return (2 - mid + c) * (mid - c) > 0 || (2 - mid) * mid > 0; };
            if (!inside(sa) || !inside(sb)) continue;
            total += integrate_endpoints([&](double t) { return G(t, sa) * G(t, sb); }, bp[i], bp[i + 1], tol).value;
        }
    }
    return total;
}

// int over R^{n} of G(a, u, 1) G(b, u, 1) du, n = 1 or 2.
double unit_overlap(const Point& a, const Point& b, double tol) {
    const int n = a.dim;
    auto G = [](const Point& y, const Point& u) { return g_profile(y, u, 1.0); };
    if (n == 1) return unit_overlap_line(a[0], b[0], tol);
    const Point centers[3] = {Point{0.0, 0.0}, a, b};
    auto row = [&](double u2) {
        std::vector<double> bp;
        for (const Point& c : centers) {
            double t = 1 - (u2 - c[1]) * (u2 - c[1]);
            if (t > 0) {
                bp.push_back(c[0] - std::sqrt(t));
                bp.push_back(c[0] + std::sqrt(t));
            }
        }
        std::sort(bp.begin(), bp.end());
        double s = 0;
        for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
            if (bp[i + 1] <= bp[i]) continue;
            Point mid{0.5 * (bp[i] + bp[i + 1]), u2};
            auto inside = [&](const Point& c) { return dist2(mid, c) < 1 || norm2(mid) < 1; };
            if (!inside(a) || !inside(b)) continue;
            s += integrate_endpoints(
                     [&](double u1) {
                         Point u{u1, u2};
                         return G(a, u) * G(b, u);
                     },
                     bp[i], bp[i + 1], tol)
                     .value;
        }
        return s;
    };
    std::vector<double> bp;
    for (const Point& c : centers) {
        bp.push_back(c[1] - 1);
        bp.push_back(c[1] + 1);
    }
    std::sort(bp.begin(), bp.end());
    double s = 0;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i)
        if (bp[i + 1] > bp[i]) s += integrate_endpoints(row, bp[i], bp[i + 1], tol * 10).value;
    return s;
}

double overlap_constant(int d) { return d == 2 ? 4.0 / 3.0 : kPi / 2; }

}  // namespace

OracleResult xray_tangent_covariance(const Point& y, const Point& yp, int d, double H, double rel_tol) {
    if (d != 2 && d != 3) throw UsageError("the X-ray covariance needs d = 2 or 3");
    if (!(H > 0.5 && H < 1)) throw DomainError("H must lie in (1/2, 1)");
    if (y.dim != d - 1 || yp.dim != d - 1) throw UsageError("hyperplane points need d - 1 coordinates");
    const double m = H - 0.5;
    if (norm2(y) == 0 || norm2(yp) == 0) return {0.0, 0.0, "closed-form"};
    std::vector<double> br;
    for (double delta : {norm(y), norm(yp), std::sqrt(dist2(y, yp))})
        if (delta > 0) br.push_back(2 / delta);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    const double s0 = br.back();
    const double tol = d == 2 ? 1e-13 : std::clamp(0.01 * rel_tol, 1e-12, 1e-8);
    // every disk pair is separated beyond s0
    double count = y == yp ? 2.0 : 1.0;
    double value = count * overlap_constant(d) * std::pow(s0, -2 * m - 1) / (2 * m + 1);
    auto f = [&](double s) { return std::pow(s, -2 * m - 2) * unit_overlap(s * y, s * yp, tol); };
    // f(s) = s^{-2m} (alpha - beta ln s) + O(s^{2-2m} ln s) near 0. Dyadic panels
    // run until the correction is below tolerance; the remainder is then fitted
    // to the leading form from the last two panels.
    const double kappa = 1 - 2 * m;
    const double ymax = std::max(norm(y), norm(yp));
    const double cut = std::sqrt(0.1 * rel_tol) / ymax;
    Quad q, prev, last;
    double hi = br.front();
    while (hi > cut || prev.value == 0) {
        prev = last;
        last = integrate(f, 0.5 * hi, hi, rel_tol, 10);
        q += last;
        hi *= 0.5;
    }
    {
        // R(S) = S^kappa (A - B ln S) is the integral over (0, S); a panel is R(2S) - R(S)
        const double S1 = 2 * hi, S2 = hi;  // prev covers (S1, 2 S1), last covers (S2, S1)
        const double c = std::pow(2.0, kappa) - 1, l2 = std::log(2.0);
        // panel(S) = S^kappa (c (A - B ln S) - 2^kappa B ln 2)
        const double u1 = prev.value / std::pow(S1, kappa), u2 = last.value / std::pow(S2, kappa);
        const double B = (u2 - u1) / (c * (std::log(S1) - std::log(S2)));
        const double A = (u2 + std::pow(2.0, kappa) * B * l2) / c + B * std::log(S2);
        const double rest = std::pow(S2, kappa) * (A - B * std::log(S2));
        q.value += rest;
        q.error += std::abs(rest) * (S2 * ymax) * (S2 * ymax) * 10;
    }
    for (std::size_t i = 0; i + 1 < br.size(); ++i) q += integrate(f, br[i], br[i + 1], rel_tol);
    return {value + q.value, std::abs(q.error), "quadrature"};
}

GBoundCheck g_l2_bound_check(const Point& y, double r, int d) {
    if (d != 2 && d != 3) throw UsageError("the G bound check needs d = 2 or 3");
    if (y.dim != d - 1) throw UsageError("hyperplane points need d - 1 coordinates");
    if (!(r > 0)) throw DomainError("r must be positive");
    const double ny = norm(y);
    if (ny == 0) throw DomainError("y must be non-zero");
    GBoundCheck out;
    double v;
    if (2 * r <= ny) {
        v = 2 * overlap_constant(d) * std::pow(r, d + 1);
        out.integral = {v, 0.0, "closed-form"};
    } else {
        Point u = (1.0 / r) * y;
        v = std::pow(r, d + 1) * unit_overlap(u, u, d == 2 ? 1e-13 : 1e-11);
        out.integral = {v, v * (d == 2 ? 1e-12 : 1e-9), "quadrature"};
    }
    out.ratio_log = v / (ny * ny * std::pow(r, d - 1) * std::log(2 + 2 * r / ny));
    out.ratio_small = v / std::pow(r, d + 1);
    return out;
}

// ---------------------------------------------------------------- spectral density

OracleResult spectral_density(double k, int d, double m) {
    check_d(d);
    check_m(m);
    if (!(k > 0)) throw DomainError("|xi| must be positive");
    const double nu = d / 2.0;
    auto f = [&](double s) {
        double j = bessel_j(nu, s);
        return j * j * std::pow(s, 2 * m - 1);
    };
    std::vector<double> bp{0.0, std::min(k, 12.0)};
    for (double s = 12.0 + kPi; s < k; s += kPi) bp.push_back(s);
    bp.push_back(k);
    // near 0 the integrand is s^{d + 2m - 1}; smooth enough for Gauss-Kronrod
    Quad q = integrate_pieces(f, bp, 1e-13);
    double pre = std::pow(2 * kPi, nu) * std::pow(k, -2 * m - d);
    return {pre * q.value, pre * std::abs(q.error), "quadrature"};
}

}  // namespace microball
