#pragma once

namespace microball {

// J_nu(s) for nu >= 0, s >= 0: power series below s = 12, Hankel asymptotic
// expansion above.
double bessel_j(double nu, double s);

// Individual branches, exposed for tests.
double bessel_j_series(double nu, double s);
double bessel_j_asymptotic(double nu, double s);

}  // namespace microball
