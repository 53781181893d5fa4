#pragma once

#include <string>
#include <utility>
#include <vector>

#include "microball/geometry.hpp"
#include "microball/index_model.hpp"

namespace microball {

struct OracleResult {
    double value = 0.0;
    double error_estimate = 0.0;  // absolute
    std::string method;           // quadrature | monte-carlo | closed-form
};

// C(m) = int |psi(e, xi, r)| r^{-d-1+2m} dr dxi through the radial reduction
// 2/(d-2m) int_{|xi|<|e-xi|} (|xi|^{2m-d} - |e-xi|^{2m-d}) dxi. d = 1 is a 1-d
// quadrature, d = 2, 3 a radial-angular one.
OracleResult psi_moment_constant(int d, double m, double rel_tol = 1e-11);

// d = 1 only: int |psi(lag, xi, r)|^p r^{-2+2m} dr dxi evaluated from the
// pointwise indicator, so that p really enters the integrand.
OracleResult psi_moment_direct(double m, double p, double lag, double rel_tol = 1e-11);

// int_{R^d x (r_min, r_max]} psi(x, xi, r)^2 r^{-d-1+2m} dr dxi via the volume of
// the symmetric difference of two balls. r_min = 0 and r_max = inf are allowed.
OracleResult truncated_increment_variance(int d, double m, const Point& x, double r_min, double r_max,
                                          double rel_tol = 1e-12);

// Closed form of the radii below r_min for |x| >= 2 r_min: (omega_d / m) r_min^{2m}.
double small_radius_deficit(int d, double m, double r_min);

// Contribution of radii above r_max, int_{r_max}^inf S_d(r, |x|) r^{-d-1+2m} dr.
OracleResult large_radius_tail(int d, double m, const Point& x, double r_max);

// E X(x) = int 1_{B(xi,r)}(x) nu_h(dxi, dr).
OracleResult mean_coverage(int d, const IndexField& h, double r_min, double r_max, const Point& x = Point());

// E (X(x0 + lag) - X(x0)) = int psi(lag, xi - x0, r) r^{-d-1+2h(xi)} dr dxi. The
// radial integral is done in closed form; the remaining integral is split into
// two ball integrals centred at x0 and x0 + lag, each handled in polar
// coordinates around its own singular point.
OracleResult mean_increment(int d, const IndexField& h, const Point& x0, const Point& lag, double r_min,
                            double r_max, double rel_tol = 1e-10);

// Star tangent field for d = 2. The minimizer cone {h <= m + 1e-9} is found by
// a circle scan refined with bisection; the radial integrand is the area of the
// cone inside B(x/|x|, r) minus its area inside B(0, r), computed exactly with a
// circle-polygon intersection for r < 1 and reducing to a constant for r > 1.
OracleResult tangent_field_zm(const Point& x, const IndexField& h, double m);

// Angular sectors [a, b] (radians, b > a) of the minimizer cone on the circle.
std::vector<std::pair<double, double>> minimizer_sectors(const IndexField& h, double m, int scan = 1 << 16);

// Gamma(y, y') = int G(y, g, r) G(y', g, r) r^{-d-1+2m} dg dr with m = H - 1/2.
// y, y' are hyperplane points in intrinsic (d-1) coordinates; d in {2, 3}.
OracleResult xray_tangent_covariance(const Point& y, const Point& yp, int d, double H, double rel_tol = 1e-10);

struct GBoundCheck {
    OracleResult integral;     // int G(y, g, r)^2 dg
    double ratio_log = 0.0;    // integral / (|y|^2 r^{d-1} ln(2 + 2r/|y|))
    double ratio_small = 0.0;  // integral / r^{d+1}
};

GBoundCheck g_l2_bound_check(const Point& y, double r, int d);

// (2 pi)^{d/2} |k|^{-2m-d} int_0^{|k|} J_{d/2}(s)^2 s^{2m-1} ds.
OracleResult spectral_density(double k_norm, int d, double m);

}  // namespace microball
