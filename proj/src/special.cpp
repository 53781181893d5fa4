#include "microball/special.hpp"

#include <cmath>

#include "microball/errors.hpp"

namespace microball {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kSwitch = 12.0;
}  // namespace

double bessel_j_series(double nu, double s) {
    if (s == 0) return nu == 0 ? 1.0 : 0.0;
    const double h = s / 2, h2 = h * h;
    double term = std::pow(h, nu) / std::tgamma(nu + 1);
    double sum = term;
    for (int k = 1; k < 200; ++k) {
        term *= -h2 / (k * (k + nu));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

double bessel_j_asymptotic(double nu, double s) {
    const double mu = 4 * nu * nu, z = 8 * s;
    // P = sum (-1)^k a_{2k} / z^{2k}, Q = sum (-1)^k a_{2k+1} / z^{2k+1},
    // a_k = prod_{j=1..k} (mu - (2j-1)^2) / k!
    double P = 0, Q = 0, a = 1, prev = INFINITY;
    for (int k = 0; k < 60; ++k) {
        if (k > 0) a *= (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * z);
        double t = std::abs(a);
        if (t > prev) break;  // asymptotic series started to diverge
        prev = t;
        int sgn = (k / 2) % 2 == 0 ? 1 : -1;
        if (k % 2 == 0) P += sgn * a;
        else Q += sgn * a;
        if (t < 1e-17 || a == 0) break;
    }
    const double chi = s - (2 * nu + 1) * kPi / 4;
    return std::sqrt(2 / (kPi * s)) * (P * std::cos(chi) - Q * std::sin(chi));
}

double bessel_j(double nu, double s) {
    if (nu < 0 || s < 0) throw DomainError("bessel_j needs nu >= 0 and s >= 0");
    return s < kSwitch ? bessel_j_series(nu, s) : bessel_j_asymptotic(nu, s);
}

}  // namespace microball
