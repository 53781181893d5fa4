#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace microball {

struct Quad {
    double value = 0.0;
    double error = 0.0;  // Gauss/Kronrod (or level-to-level) difference estimate

    Quad& operator+=(const Quad& o) {
        value += o.value;
        error += o.error;
        return *this;
    }
};

using Integrand = std::function<double(double)>;

// Adaptive Gauss-Kronrod (61 points) on a finite interval.
Quad integrate(const Integrand& f, double a, double b, double rel_tol = 1e-12, int max_depth = 15);

// Same, over consecutive breakpoints (sorted, duplicates dropped).
Quad integrate_pieces(const Integrand& f, std::vector<double> points, double rel_tol = 1e-12);

// Double-exponential rule for integrands with algebraic endpoint singularities.
Quad integrate_endpoints(const Integrand& f, double a, double b, double rel_tol = 1e-12);

// Integrand behaving like (x - a)^gamma near a, gamma > -1. Substitutes
// x = a + (b - a) w^{1/(gamma+1)} so the transformed integrand is bounded.
Quad integrate_singular_left(const Integrand& f, double a, double b, double gamma, double rel_tol = 1e-12);

// Integral over [a, b] (b may be +inf) of an integrand decaying like x^{-q}, q > 1,
// through x = a w^{-1/(q-1)}, w in (0, 1]. Requires a > 0.
Quad integrate_tail(const Integrand& f, double a, double q, double rel_tol = 1e-12,
                    double b = std::numeric_limits<double>::infinity());

}  // namespace microball
