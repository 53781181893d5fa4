#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "microball/field.hpp"
#include "microball/geometry.hpp"
#include "microball/sampler.hpp"

namespace microball {

struct VariogramEstimate {
    std::vector<double> lags;
    std::vector<double> values;   // pooled second moment of the increments
    std::vector<double> std_err;  // from the spread of per-replica means
    std::vector<double> means;    // pooled mean increment
    std::vector<long> counts;     // pooled samples
    std::vector<int> replicas;
    // Per-row bound on the second-moment mass lost to r < r_min; empty when unknown.
    std::vector<double> truncation;
    std::vector<std::string> warnings;
};

// increments[i][r] holds the samples at lag i from replica r. With center set
// the pooled squared mean is subtracted (variable h, where E Delta X != 0).
// Lags with fewer than two replicas are dropped with a warning.
VariogramEstimate empirical_variogram(const std::vector<double>& lags,
                                      const std::vector<std::vector<std::vector<double>>>& increments,
                                      bool center = false);

enum class FitTarget { Field, Xray };

struct LassEstimate {
    double slope = 0, intercept = 0;
    double index = 0;  // slope / 2 for fields, (slope - 1) / 2 for X-ray images
    std::pair<double, double> ci95{0, 0};
    double slope_se = 0;
    double r2 = 0;
    std::vector<double> lags;  // abscissas actually used
    std::vector<double> residuals;
    std::vector<std::string> dropped;
};

// Weighted least squares of log value on log lag over lags in [lo, hi], weights
// (value / std_err)^2 (unweighted when every std_err is 0). Rows within two
// standard errors of zero are dropped. The CI uses Student t with n - 2 degrees
// of freedom on the residual-scaled covariance. Throws EstimationError with
// fewer than 4 usable rows, or when a truncation bound exceeds 10% of the
// smallest retained value.
LassEstimate fit_scaling_exponent(const VariogramEstimate& v, std::pair<double, double> lag_range,
                                  FitTarget target = FitTarget::Field);

struct SkellamTest {
    double chi2 = 0;
    int dof = 0;
    double p = 1;
    std::vector<std::pair<long, long>> cells;  // [k_lo, k_hi] pooled ranges
};

// P(N1 - N2 = k) for independent Poisson(mu1), Poisson(mu2).
double skellam_pmf(long k, double mu1, double mu2);

// Chi-square of the increments against Skellam(mu, mu), cells pooled from the
// tails inward until each expects at least 5.
SkellamTest skellam_goodness_of_fit(const std::vector<long>& deltas, double mu);
SkellamTest skellam_goodness_of_fit(const std::vector<IncrementSample>& samples, double mu);

// Per-base-point fits; index = slope / 2. Requires C * lambda_max^beta < 0.02 for
// the largest lag in range, otherwise EstimationError.
std::vector<LassEstimate> local_index_estimate(const std::vector<VariogramEstimate>& per_point,
                                               std::pair<double, double> lag_range, double lipschitz_c,
                                               double beta);

struct HomogenizationResult {
    LassEstimate fit;           // slope of log Var against log epsilon
    VariogramEstimate table;    // "lags" column holds epsilon
};

// Var(X^eps(x0 + x) - X^eps(x0)) over dyadic epsilons from probe draws, fitted
// against log epsilon. Needs at least 4 epsilons.
HomogenizationResult homogenization_scaling_check(const SimulationConfig& config, const std::vector<double>& epsilons,
                                                  const Point& x, const Point& x0, int jobs = 1);

struct PoissonRemark {
    double fraction = 0;   // share of samples with n^{2H}(X_n - E X_n) within 1e-6 of -v
    double threshold = 0;  // 1 - v n^{-2H} - 3 sigma
};

PoissonRemark poisson_remark_check(double v, double n, double H, std::size_t samples, std::uint64_t seed);

void write_variogram_csv(std::ostream& os, const VariogramEstimate& v, const std::string& header = "");

}  // namespace microball
