#include "microball/quadrature.hpp"

// Boost 1.74's tanh_sinh asserts when a rounded abscissa lands exactly on an
// endpoint; the integrands passed here are finite there.
#define BOOST_DISABLE_ASSERTS
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "microball/errors.hpp"

namespace microball {

Quad integrate(const Integrand& f, double a, double b, double rel_tol, int max_depth) {
    if (a == b) return {};
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, max_depth, rel_tol, &err);
    if (!std::isfinite(v)) throw EstimationError("quadrature produced a non-finite value");
    return {v, err};
}

Quad integrate_pieces(const Integrand& f, std::vector<double> points, double rel_tol) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    Quad total;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) total += integrate(f, points[i], points[i + 1], rel_tol);
    return total;
}

Quad integrate_endpoints(const Integrand& f, double a, double b, double rel_tol) {
    if (a == b) return {};
    // abscissas collapse onto the endpoints for intervals this narrow
    if (std::abs(b - a) < 1e-7 * std::max(std::abs(a), std::abs(b))) return integrate(f, a, b, rel_tol, 3);
    static thread_local boost::math::quadrature::tanh_sinh<double> ts(15);
    double err = 0.0, l1 = 0.0;
    double v = ts.integrate(f, a, b, rel_tol, &err, &l1);
    if (!std::isfinite(v)) throw EstimationError("quadrature produced a non-finite value");
    // tanh_sinh reports a relative level-to-level difference
    return {v, err * std::max(std::abs(v), l1 * 1e-3)};
}

Quad integrate_singular_left(const Integrand& f, double a, double b, double gamma, double rel_tol) {
    if (!(gamma > -1)) throw DomainError("endpoint exponent must exceed -1");
    if (a == b) return {};
    const double k = 1.0 / (gamma + 1.0), L = b - a;
    auto g = [&](double w) {
        if (w <= 0) return 0.0;
        double x = a + L * std::pow(w, k);
        return f(x) * L * k * std::pow(w, k - 1.0);
    };
    return integrate(g, 0.0, 1.0, rel_tol);
}

Quad integrate_tail(const Integrand& f, double a, double q, double rel_tol, double b) {
    if (!(a > 0) || !(q > 1)) throw DomainError("tail substitution needs a > 0 and q > 1");
    if (b <= a) return {};
    const double e = -1.0 / (q - 1.0);
    const double w_lo = std::isinf(b) ? 0.0 : std::pow(b / a, -(q - 1.0));
    auto g = [&](double w) {
        if (w <= 0) return 0.0;
        double x = a * std::pow(w, e);
        if (!std::isfinite(x)) return 0.0;
        return f(x) * a / (q - 1.0) * std::pow(w, e - 1.0);
    };
    return integrate(g, w_lo, 1.0, rel_tol);
}

}  // namespace microball
