#include "microball/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <cmath>
#include <limits>
#include <ostream>

#include "microball/errors.hpp"
#include "microball/numeric.hpp"
#include "microball/parallel.hpp"
#include "microball/rng.hpp"

namespace microball {

VariogramEstimate empirical_variogram(const std::vector<double>& lags,
                                      const std::vector<std::vector<std::vector<double>>>& increments, bool center) {
    if (lags.size() != increments.size()) throw UsageError("one increment table per lag is required");
    VariogramEstimate out;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        const auto& reps = increments[i];
        int used = 0;
        long n = 0;
        NeumaierSum s1, s2;
        for (const auto& rep : reps) {
            if (rep.empty()) continue;
            ++used;
            for (double x : rep) {
                s1.add(x);
                s2.add(x * x);
                ++n;
            }
        }
        if (used < 2) {
            out.warnings.push_back("lag " + g17(lags[i]) + " has fewer than two replicas; dropped");
            continue;
        }
        double mean = s1.value() / n;
        double value = s2.value() / n;
        if (center) value = std::max(0.0, value - mean * mean);
        // spread of per-replica second moments about the pooled mean
        NeumaierSum a, b;
        for (const auto& rep : reps) {
            if (rep.empty()) continue;
            NeumaierSum q;
            for (double x : rep) {
                double y = center ? x - mean : x;
                q.add(y * y);
            }
            double m = q.value() / rep.size();
            a.add(m);
            b.add(m * m);
        }
        double am = a.value() / used;
        double var = std::max(0.0, (b.value() - used * am * am) / (used - 1));
        out.lags.push_back(lags[i]);
        out.values.push_back(value);
        out.std_err.push_back(std::sqrt(var / used));
        out.means.push_back(mean);
        out.counts.push_back(n);
        out.replicas.push_back(used);
    }
    return out;
}

LassEstimate fit_scaling_exponent(const VariogramEstimate& v, std::pair<double, double> range, FitTarget target) {
    LassEstimate out;
    std::vector<double> x, y, w, vals;
    bool weighted = false;
    for (std::size_t i = 0; i < v.lags.size(); ++i)
        if (v.std_err[i] > 0) weighted = true;
    for (std::size_t i = 0; i < v.lags.size(); ++i) {
        double lag = v.lags[i];
        if (lag < range.first * (1 - 1e-12) || lag > range.second * (1 + 1e-12)) continue;
        if (!(v.values[i] > 0) || v.values[i] <= 2 * v.std_err[i]) {
            out.dropped.push_back("lag " + g17(lag) + ": value within two standard errors of zero");
            continue;
        }
        x.push_back(std::log(lag));
        y.push_back(std::log(v.values[i]));
        double rel = v.std_err[i] / v.values[i];
        w.push_back(weighted ? (rel > 0 ? 1.0 / (rel * rel) : 0.0) : 1.0);
        vals.push_back(v.values[i]);
        out.lags.push_back(lag);
        if (!v.truncation.empty() && v.truncation[i] >= 0.1 * v.values[i])
            throw EstimationError("truncation bound " + g17(v.truncation[i]) + " exceeds 10% of the variogram value " +
                                  g17(v.values[i]) + " at lag " + g17(lag) + "; decrease r_min");
    }
    const std::size_t n = x.size();
    if (n < 4) throw EstimationError("scaling fit needs at least 4 usable lags, got " + std::to_string(n));
    if (weighted) {
        // a row with zero error would dominate; give it the largest finite weight
        double wmax = 0;
        for (double wi : w) wmax = std::max(wmax, wi);
        for (double& wi : w)
            if (wi == 0) wi = wmax > 0 ? wmax : 1.0;
    }
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    double mx = sx / sw, my = sy / sw, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0)) throw EstimationError("scaling fit needs distinct lags");
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double rss = 0, tss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - out.intercept - out.slope * x[i];
        out.residuals.push_back(r);
        rss += w[i] * r * r;
        tss += w[i] * (y[i] - my) * (y[i] - my);
    }
    out.r2 = tss > 0 ? 1 - rss / tss : 1.0;
    double s2 = rss / static_cast<double>(n - 2);
    out.slope_se = std::sqrt(s2 / sxx);
    boost::math::students_t t(static_cast<double>(n - 2));
    double q = boost::math::quantile(boost::math::complement(t, 0.025));
    out.ci95 = {out.slope - q * out.slope_se, out.slope + q * out.slope_se};
    out.index = target == FitTarget::Field ? out.slope / 2 : (out.slope - 1) / 2;
    return out;
}

double skellam_pmf(long k, double mu1, double mu2) {
    if (mu1 < 0 || mu2 < 0) throw DomainError("Skellam means must be non-negative");
    if (k < 0) return skellam_pmf(-k, mu2, mu1);
    if (mu1 == 0 && mu2 == 0) return k == 0 ? 1.0 : 0.0;
    if (mu1 == 0) return 0.0;  // k > 0 needs N1 > 0
    if (mu2 == 0) return std::exp(k * std::log(mu1) - mu1 - std::lgamma(k + 1.0));
    // sum over N2 = n of P(N1 = n + k) P(N2 = n), terms peak near the product mode
    const double l1 = std::log(mu1), l2 = std::log(mu2);
    auto term = [&](double n) {
        return (n + k) * l1 - std::lgamma(n + k + 1.0) + n * l2 - std::lgamma(n + 1.0) - mu1 - mu2;
    };
    double peak = std::max(0.0, std::floor(0.5 * (-k + std::sqrt(static_cast<double>(k) * k + 4 * mu1 * mu2))));
    double top = term(peak);
    NeumaierSum s;
    for (double n = peak; n >= 0; --n) {
        double t = term(n) - top;
        if (t < -50) break;
        s.add(std::exp(t));
    }
    for (double n = peak + 1;; ++n) {
        double t = term(n) - top;
        if (t < -50) break;
        s.add(std::exp(t));
    }
    return std::exp(top) * s.value();
}

SkellamTest skellam_goodness_of_fit(const std::vector<long>& deltas, double mu) {
    if (deltas.size() < 1000) throw EstimationError("Skellam test needs at least 1000 samples");
    if (!(mu >= 0)) throw DomainError("Skellam mean must be non-negative");
    const double N = static_cast<double>(deltas.size());
    long kmin = 0, kmax = 0;
    for (long k : deltas) {
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }
    // extend the range until the expected count per cell beyond it is negligible
    long K = std::max(-kmin, kmax);
    while (N * skellam_pmf(K + 1, mu, mu) > 1e-9) ++K;
    std::vector<double> expected, observed;
    std::vector<long> ks;
    for (long k = -K; k <= K; ++k) {
        ks.push_back(k);
        expected.push_back(N * skellam_pmf(k, mu, mu));
        observed.push_back(0);
    }
    for (long k : deltas) observed[static_cast<std::size_t>(k + K)] += 1;

    SkellamTest out;
    std::vector<double> ce, co;
    double e = 0, o = 0;
    long start = -K;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        e += expected[i];
        o += observed[i];
        if (e >= 5) {
            ce.push_back(e);
            co.push_back(o);
            out.cells.push_back({start, ks[i]});
            e = o = 0;
            start = ks[i] + 1;
        }
    }
    if (e > 0 || o > 0) {
        if (ce.empty()) {
            ce.push_back(e);
            co.push_back(o);
            out.cells.push_back({start, K});
        } else {
            ce.back() += e;
            co.back() += o;
            out.cells.back().second = K;
        }
    }
    out.cells.front().first = std::numeric_limits<long>::min();
    out.cells.back().second = std::numeric_limits<long>::max();
    double chi2 = 0;
    for (std::size_t i = 0; i < ce.size(); ++i) {
        if (ce[i] <= 0) {
            if (co[i] > 0) chi2 = std::numeric_limits<double>::infinity();
            continue;
        }
        chi2 += (co[i] - ce[i]) * (co[i] - ce[i]) / ce[i];
    }
    out.chi2 = chi2;
    out.dof = static_cast<int>(ce.size()) - 1;
    if (out.dof < 1)
        out.p = std::isinf(chi2) ? 0.0 : 1.0;
    else if (std::isinf(chi2))
        out.p = 0.0;
    else
        out.p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(out.dof), chi2));
    return out;
}

SkellamTest skellam_goodness_of_fit(const std::vector<IncrementSample>& samples, double mu) {
    std::vector<long> d;
    d.reserve(samples.size());
    for (const auto& s : samples) d.push_back(s.delta);
    return skellam_goodness_of_fit(d, mu);
}

std::vector<LassEstimate> local_index_estimate(const std::vector<VariogramEstimate>& per_point,
                                               std::pair<double, double> range, double lipschitz_c, double beta) {
    std::vector<LassEstimate> out;
    for (const auto& v : per_point) {
        double lmax = 0;
        for (double l : v.lags)
            if (l <= range.second * (1 + 1e-12) && l >= range.first * (1 - 1e-12)) lmax = std::max(lmax, l);
        if (lipschitz_c * std::pow(lmax, beta) >= 0.02)
            throw EstimationError("largest lag " + g17(lmax) + " is too coarse for the index modulation: C lambda^beta = " +
                                  g17(lipschitz_c * std::pow(lmax, beta)) + " >= 0.02");
        out.push_back(fit_scaling_exponent(v, range, FitTarget::Field));
    }
    return out;
}

HomogenizationResult homogenization_scaling_check(const SimulationConfig& cfg, const std::vector<double>& eps,
                                                  const Point& x, const Point& x0, int jobs) {
    if (eps.size() < 4) throw EstimationError("homogenization fit needs at least 4 epsilon values");
    for (double e : eps) {
        int ex;
        if (!(e > 0 && e <= 1) || std::frexp(e, &ex) != 0.5) throw UsageError("epsilon values must be dyadic in (0, 1]");
    }
    const std::size_t R = static_cast<std::size_t>(cfg.replicas);
    std::vector<std::vector<std::vector<double>>> inc(eps.size(), std::vector<std::vector<double>>(R));
    std::vector<double> bounds(eps.size());
    const Point x1 = x0 + x;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        parallel_for(R, jobs, [&](std::size_t r) {
            Realization real = sample_at_probes(cfg, {x0, x1}, r, eps[i]);
            SpatialIndex index(real);
            long np, nm;
            index.increment(x0, x1, np, nm);
            inc[i][r] = {static_cast<double>(np - nm)};
            if (r == 0) bounds[i] = real.truncation_bound;
        });
    }
    HomogenizationResult out;
    out.table = empirical_variogram(eps, inc, !cfg.index.is_constant());
    out.table.truncation = bounds;
    out.fit = fit_scaling_exponent(out.table, {*std::min_element(eps.begin(), eps.end()),
                                               *std::max_element(eps.begin(), eps.end())});
    return out;
}

PoissonRemark poisson_remark_check(double v, double n, double H, std::size_t samples, std::uint64_t seed) {
    if (!(v > 0 && n > 0 && H > 0)) throw DomainError("Poisson remark needs v, n, H > 0");
    const double mean = v * std::pow(n, -2 * H);
    const double scale = std::pow(n, 2 * H);
    CounterStream s({seed, 0x706f6973736f6e00ULL}, {0, 0, 0, 0});
    boost::random::poisson_distribution<long long, double> P(mean);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        double z = scale * (static_cast<double>(P(s)) - mean);
        hit += std::abs(z + v) <= 1e-6;
    }
    PoissonRemark out;
    out.fraction = static_cast<double>(hit) / samples;
    double p0 = std::exp(-mean);
    out.threshold = 1 - mean - 3 * std::sqrt(p0 * (1 - p0) / samples);
    return out;
}

void write_variogram_csv(std::ostream& os, const VariogramEstimate& v, const std::string& header) {
    if (!header.empty()) os << header << (header.back() == '\n' ? "" : "\n");
    os << "lag,value,stderr,n\n";
    for (std::size_t i = 0; i < v.lags.size(); ++i)
        os << g17(v.lags[i]) << ',' << g17(v.values[i]) << ',' << g17(v.std_err[i]) << ',' << v.counts[i] << '\n';
}

}  // namespace microball
