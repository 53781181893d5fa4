#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <tuple>

#include "golden.hpp"
#include "microball/errors.hpp"
#include "microball/stats.hpp"

using namespace microball;

namespace {
using Table = std::vector<std::vector<std::vector<double>>>;

VariogramEstimate power_law(double c, double slope, int n, double rel_se) {
    VariogramEstimate v;
    for (int k = 0; k < n; ++k) {
        double lag = std::ldexp(1.0, -12 + k);
        v.lags.push_back(lag);
        v.values.push_back(c * std::pow(lag, slope));
        v.std_err.push_back(rel_se * v.values.back());
        v.means.push_back(0);
        v.counts.push_back(100);
        v.replicas.push_back(10);
    }
    return v;
}

std::vector<long> skellam_sample(double mu, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 g(seed);
    std::poisson_distribution<long> p(mu);
    std::vector<long> out(n);
    for (auto& x : out) x = p(g) - p(g);
    return out;
}
}  // namespace

TEST_CASE("variogram of all-zero increments") {
    Table t(3, std::vector<std::vector<double>>(4, std::vector<double>(5, 0.0)));
    VariogramEstimate v = empirical_variogram({0.1, 0.2, 0.4}, t);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(v.values[i] == 0.0);
        CHECK(v.std_err[i] == 0.0);
        CHECK(v.counts[i] == 20);
    }
}

TEST_CASE("variogram recovers synthetic Gaussian increments") {
    const double H = 0.3;
    std::vector<double> lags{1e-3, 1e-2, 1e-1};
    std::mt19937_64 g(7);
    Table t(lags.size(), std::vector<std::vector<double>>(50));
    for (std::size_t l = 0; l < lags.size(); ++l) {
        std::normal_distribution<double> n(0.0, std::pow(lags[l], H));
        for (auto& rep : t[l])
            for (int i = 0; i < 40; ++i) rep.push_back(n(g));
    }
    VariogramEstimate v = empirical_variogram(lags, t);
    for (std::size_t l = 0; l < lags.size(); ++l)
        CHECK(std::abs(v.values[l] - std::pow(lags[l], 2 * H)) < 4 * v.std_err[l]);
}

TEST_CASE("lags with a single replica are dropped with a warning") {
    Table t{{{1.0, -1.0}, {0.5}}, {{2.0}}};
    VariogramEstimate v = empirical_variogram({0.1, 0.2}, t);
    CHECK(v.lags.size() == 1);
    CHECK(v.warnings.size() == 1);
    CHECK(v.values[0] == doctest::Approx((1 + 1 + 0.25) / 3));
}

TEST_CASE("centered variogram removes the mean increment") {
    Table t{{{1.0, 1.0}, {1.0, 1.0}}};
    CHECK(empirical_variogram({0.1}, t, true).values[0] == doctest::Approx(0.0));
    CHECK(empirical_variogram({0.1}, t, false).values[0] == doctest::Approx(1.0));
}

TEST_CASE("exact power law fits exactly") {
    VariogramEstimate v = power_law(3.0, 0.6, 8, 0.01);
    LassEstimate f = fit_scaling_exponent(v, {v.lags.front(), v.lags.back()});
    CHECK(f.slope == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(f.index == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(f.ci95.second - f.ci95.first < 1e-10);
    CHECK(f.r2 == doctest::Approx(1.0));
    LassEstimate x = fit_scaling_exponent(power_law(1.0, 1.5, 6, 0.0), {1e-9, 1.0}, FitTarget::Xray);
    CHECK(x.slope == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(x.index == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("fit invariance under scaling of the values") {
    VariogramEstimate v = power_law(1.0, 0.5, 8, 0.05);
    for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] *= 1 + 0.03 * std::sin(7.0 * i);
    VariogramEstimate w = v;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
        w.values[i] *= 17.0;
        w.std_err[i] *= 17.0;
    }
    LassEstimate a = fit_scaling_exponent(v, {1e-9, 1.0}), b = fit_scaling_exponent(w, {1e-9, 1.0});
    CHECK(std::abs(a.slope - b.slope) < 1e-12);
    CHECK(b.intercept - a.intercept == doctest::Approx(std::log(17.0)).epsilon(1e-12));
    CHECK(a.ci95.first <= a.slope);
    CHECK(a.ci95.second >= a.slope);
}

TEST_CASE("fit guards") {
    VariogramEstimate v = power_law(1.0, 0.5, 3, 0.01);
    CHECK_THROWS_AS(fit_scaling_exponent(v, {1e-9, 1.0}), EstimationError);
    VariogramEstimate noisy = power_law(1.0, 0.5, 6, 0.01);
    noisy.std_err[0] = noisy.values[0];  // within 2 stderr of zero
    LassEstimate f = fit_scaling_exponent(noisy, {1e-9, 1.0});
    CHECK(f.lags.size() == 5);
    CHECK(f.dropped.size() == 1);
    VariogramEstimate trunc = power_law(1.0, 0.5, 6, 0.01);
    trunc.truncation.assign(6, 0.2 * trunc.values[0]);
    CHECK_THROWS_AS(fit_scaling_exponent(trunc, {1e-9, 1.0}), EstimationError);
    trunc.truncation.assign(6, 0.05 * trunc.values[0]);
    CHECK_NOTHROW(fit_scaling_exponent(trunc, {1e-9, 1.0}));
}

TEST_CASE("skellam pmf against the reference values") {
    const auto& g = golden().at("skellam_pmf");
    for (auto [k, mu, key] : {std::tuple{0L, 0.5, "k0_mu0.5"}, std::tuple{1L, 0.5, "k1_mu0.5"},
                              std::tuple{-3L, 2.0, "k-3_mu2.0"}, std::tuple{10L, 3.0, "k10_mu3.0"},
                              std::tuple{0L, 40.0, "k0_mu40.0"}, std::tuple{25L, 40.0, "k25_mu40.0"}}) {
        CHECK(skellam_pmf(k, mu, mu) == doctest::Approx(g.at(key).at("value").get<double>()).epsilon(1e-12));
    }
    double total = 0;
    for (long k = -60; k <= 60; ++k) total += skellam_pmf(k, 3.0, 1.5);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(skellam_pmf(0, 0, 0) == 1.0);
    CHECK(skellam_pmf(1, 0, 0) == 0.0);
}

TEST_CASE("skellam test: size and power") {
    // p should be uniform under the null: the rejection rates at 1% and 5% over 2000 runs
    // stay within about 3.5 binomial standard deviations
    const int runs = 2000;
    int rej1 = 0, rej5 = 0;
    for (int run = 0; run < runs; ++run) {
        double p = skellam_goodness_of_fit(skellam_sample(0.7, 2000, 100 + run), 0.7).p;
        rej1 += p < 0.01;
        rej5 += p < 0.05;
    }
    CHECK(rej1 >= 8);
    CHECK(rej1 <= 32);
    CHECK(rej5 >= 66);
    CHECK(rej5 <= 134);
    CHECK(skellam_goodness_of_fit(skellam_sample(0.35, 100000, 5), 0.7).p < 0.01);
    CHECK(skellam_goodness_of_fit(std::vector<long>(2000, 0), 0.0).p == doctest::Approx(1.0));
    CHECK_THROWS_AS(skellam_goodness_of_fit(skellam_sample(0.7, 999, 1), 0.7), EstimationError);
}

TEST_CASE("local index guard") {
    std::vector<VariogramEstimate> per{power_law(1.0, 0.5, 6, 0.01)};
    // largest lag 2^-7: C = 10 breaks C lambda^beta < 0.02, C = 1 does not
    CHECK_THROWS_AS(local_index_estimate(per, {1e-9, 1.0}, 10.0, 1.0), EstimationError);
    auto est = local_index_estimate(per, {1e-9, 1.0}, 1.0, 1.0);
    CHECK(est[0].slope == doctest::Approx(0.5));
}

TEST_CASE("homogenization check needs four epsilons and is stationary") {
    SimulationConfig c;
    c.dim = 1;
    c.window = Box(Point{0.0}, Point{2.0});
    c.index = IndexField::constant(0.25);
    c.r_min = 1e-4;
    c.replicas = 400;
    CHECK_THROWS_AS(homogenization_scaling_check(c, {0.25}, Point{1.0}, Point{0.5}), EstimationError);
    std::vector<double> eps{0.5, 0.25, 0.125, 0.0625};
    HomogenizationResult a = homogenization_scaling_check(c, eps, Point{1.0}, Point{0.5});
    c.window = Box(Point{10.0}, Point{12.0});
    c.seed = 99;
    HomogenizationResult b = homogenization_scaling_check(c, eps, Point{1.0}, Point{10.5});
    for (std::size_t i = 0; i < eps.size(); ++i) {
        double se = std::hypot(a.table.std_err[i], b.table.std_err[i]);
        CHECK(std::abs(a.table.values[i] - b.table.values[i]) < 4 * se);
    }
}

TEST_CASE("Poisson remark: rescaled centered counts concentrate at -v") {
    for (auto [v, n, H] : {std::tuple{1.0, 10.0, 0.75}, std::tuple{2.0, 30.0, 0.6}, std::tuple{0.5, 100.0, 0.9}}) {
        PoissonRemark r = poisson_remark_check(v, n, H, 200000, 3);
        CHECK(r.fraction >= r.threshold);
        CHECK(r.fraction <= 1.0);
    }
    // far from the limit the mass is not yet concentrated
    PoissonRemark early = poisson_remark_check(4.0, 1.0, 0.75, 20000, 3);
    CHECK(early.fraction < 0.1);
}

TEST_CASE("variogram CSV layout") {
    VariogramEstimate v = power_law(1.0, 0.5, 2, 0.1);
    std::ostringstream os;
    write_variogram_csv(os, v, "# h");
    CHECK(os.str().rfind("# h\nlag,value,stderr,n\n0.000244140625,", 0) == 0);
}
