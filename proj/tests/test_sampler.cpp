#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "microball/errors.hpp"
#include "microball/field.hpp"
#include "microball/oracle.hpp"
#include "microball/sampler.hpp"

using namespace microball;

namespace {

SimulationConfig base_config(int dim, double m, double r_min, std::uint64_t seed = 11) {
    SimulationConfig c;
    c.dim = dim;
    Point lo(dim), hi(dim);
    for (int k = 0; k < dim; ++k) hi[k] = 1.0;
    c.window = Box(lo, hi);
    c.index = IndexField::constant(m);
    c.r_min = r_min;
    c.seed = seed;
    c.replicas = 100000;
    return c;
}

// Kolmogorov-Smirnov statistic times sqrt(n); 1.63 is the asymptotic 1% point.
double ks_scaled(std::vector<double> u) {
    std::sort(u.begin(), u.end());
    const double n = static_cast<double>(u.size());
    double d = 0;
    for (std::size_t i = 0; i < u.size(); ++i)
        d = std::max({d, (i + 1) / n - u[i], u[i] - i / n});
    return d * std::sqrt(n);
}

}  // namespace

TEST_CASE("realizations are a pure function of (seed, replica)") {
    SimulationConfig c = base_config(2, 0.25, 0.01);
    Realization a = sample_realization(c, 3), b = sample_realization(c, 3), other = sample_realization(c, 4);
    REQUIRE(a.balls.size() == b.balls.size());
    for (std::size_t i = 0; i < a.balls.size(); ++i) {
        CHECK(a.balls[i].center == b.balls[i].center);
        CHECK(a.balls[i].radius == b.balls[i].radius);
    }
    CHECK(a.balls.size() != other.balls.size());
    c.seed = 12;
    CHECK(sample_realization(c, 3).balls.size() != a.balls.size());
}

TEST_CASE("ball counts are Poisson with the planned mean") {
    SimulationConfig c = base_config(2, 0.25, 0.02);
    ShellPlan plan = plan_shells(c);
    const int R = 300;
    double total = 0;
    for (int r = 0; r < R; ++r) total += static_cast<double>(sample_realization(c, r).balls.size());
    double expect = R * plan.total_expected;
    CHECK(std::abs(total - expect) / std::sqrt(expect) < 4.0);
}

TEST_CASE("radii follow the truncated power law") {
    // constant m: within a shell the density is r^{-d-1+2m}; shells differ only in their center region
    for (int d : {1, 2}) {
        const double m = 0.3, r_min = d == 1 ? 1e-5 : 0.01;
        SimulationConfig c = base_config(d, m, r_min);
        std::vector<double> u;
        const double e = -d + 2 * m;
        for (int r = 0; r < 400 && u.size() < 20000; ++r) {
            Realization real = sample_realization(c, r);
            for (const auto& b : real.balls) {
                const Shell& s = real.shells.at(b.shell);
                const double lo = std::pow(s.r_lo, e), hi = std::pow(s.r_hi, e);
                u.push_back((std::pow(b.radius, e) - lo) / (hi - lo));
            }
        }
        REQUIRE(u.size() > 2000);
        CHECK(ks_scaled(u) < 1.63);
    }
}

TEST_CASE("centers are uniform in each shell region") {
    SimulationConfig c = base_config(2, 0.25, 0.003);
    Realization real = sample_realization(c, 0);
    std::vector<double> ux, uy;
    for (const auto& b : real.balls) {
        const Shell& s = real.shells.at(b.shell);
        CHECK(s.region.contains(b.center));
        ux.push_back((b.center[0] - s.region.lo[0]) / s.region.extent(0));
        uy.push_back((b.center[1] - s.region.lo[1]) / s.region.extent(1));
    }
    REQUIRE(ux.size() > 1000);
    CHECK(ks_scaled(ux) < 1.63);
    CHECK(ks_scaled(uy) < 1.63);
}

TEST_CASE("coverage mean matches the oracle for window, probe and thinned draws") {
    const double m = 0.25, r_min = 1e-3;
    Point x{0.5, 0.5};
    double expect = mean_coverage(2, IndexField::constant(m), r_min, 1.0, x).value;
    CHECK(expect == doctest::Approx(M_PI * (1 - std::pow(r_min, 2 * m)) / (2 * m)).epsilon(1e-10));
    SimulationConfig c = base_config(2, m, r_min);
    const int R = 2000;
    double sw = 0, sp = 0;
    for (int r = 0; r < R; ++r) {
        if (r < 200) sw += SpatialIndex(sample_realization(c, r)).count(x);
        sp += SpatialIndex(sample_at_probes(c, {x}, r)).count(x);
    }
    // counts are Poisson(expect)
    CHECK(std::abs(sw / 200 - expect) < 4 * std::sqrt(expect / 200));
    CHECK(std::abs(sp / R - expect) < 4 * std::sqrt(expect / R));

    Box region = c.window.dilated(1.0);
    c.index = IndexField::smooth("0.2 + 0.05*x1*x2", 2, 0.5, 1.0, region);
    double e2 = mean_coverage(2, c.index, r_min, 1.0, x).value;
    double s2 = 0;
    for (int r = 0; r < R; ++r) s2 += SpatialIndex(sample_at_probes(c, {x}, r)).count(x);
    CHECK(std::abs(s2 / R - e2) < 4 * std::sqrt(e2 / R));
}

TEST_CASE("probe draws keep exactly the balls hitting the probes") {
    SimulationConfig c = base_config(1, 0.25, 1e-4);
    std::vector<Point> probes{Point{0.2}, Point{0.21}, Point{0.8}};
    for (int r = 0; r < 20; ++r) {
        Realization real = sample_at_probes(c, probes, r);
        for (const auto& b : real.balls) {
            bool hits = false;
            for (const auto& p : probes) hits = hits || ball_contains({b.center, b.radius}, p);
            CHECK(hits);
        }
    }
}

TEST_CASE("line draws keep exactly the balls meeting the segments") {
    SimulationConfig c = base_config(2, 0.25, 1e-3);
    Direction alpha = Direction::axis(2, 1);
    std::vector<Point> feet{Point{0.2, 0.0}, Point{0.7, 0.0}};
    const double P = 0.5;
    for (int r = 0; r < 10; ++r) {
        Realization real = sample_along_lines(c, alpha, feet, P, r);
        CHECK(real.line_feet.size() == 2);
        for (const auto& b : real.balls) {
            bool meets = false;
            for (const auto& f : feet) {
                double t = std::clamp(b.center[1], -P, P);
                meets = meets || dist2(b.center, Point{f[0], t}) < b.radius * b.radius;
            }
            CHECK(meets);
        }
    }
}

TEST_CASE("shell intensities match the closed form") {
    // d=1, window [0,1], m=0.25: shell (1/2, 1] has margin 1, so length 3 times
    // int_{1/2}^{1} r^{-1.5} dr = 2(sqrt 2 - 1)
    SimulationConfig c = base_config(1, 0.25, 0.0625);
    ShellPlan plan = plan_shells(c);
    REQUIRE(plan.shells.size() == 4);
    const Shell* top = nullptr;
    for (const Shell& s : plan.shells) {
        CHECK(s.margin == s.r_hi);
        const double len = 1 + 2 * s.margin;
        CHECK(s.expected == doctest::Approx(len * 2 * (std::pow(s.r_lo, -0.5) - std::pow(s.r_hi, -0.5))).epsilon(1e-12));
        if (s.r_hi == 1.0) top = &s;
    }
    REQUIRE(top != nullptr);
    CHECK(top->expected == doctest::Approx(6 * (std::sqrt(2.0) - 1)).epsilon(1e-12));
    // eps = 1/2 multiplies the same shell by eps^{-1+2m} = sqrt 2
    ShellPlan half = plan_shells(c, 0.5);
    for (const Shell& s : half.shells)
        if (s.r_lo == 0.5 && s.r_hi == 1.0) CHECK(s.expected / top->expected == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS(plan_shells(base_config(1, 0.25, 1.0)));
}

TEST_CASE("per-shell counts match the planned intensities") {
    SimulationConfig c = base_config(2, 0.25, 0.01);
    ShellPlan plan = plan_shells(c);
    const int R = 1000;
    std::vector<double> n(plan.shells.size(), 0.0);
    for (int r = 0; r < R; ++r)
        for (const auto& b : sample_realization(c, r).balls) n[static_cast<std::size_t>(b.shell)] += 1;
    for (const Shell& s : plan.shells)
        CHECK(std::abs(n[static_cast<std::size_t>(s.id)] - R * s.expected) < 4 * std::sqrt(R * s.expected));
}

TEST_CASE("homogenized draws extend the radii to 1/eps") {
    SimulationConfig c = base_config(1, 0.25, 0.01);
    ShellPlan plan = plan_shells(c, 0.25);
    CHECK(plan.r_top == doctest::Approx(4.0));
    double top = 0;
    for (const Shell& s : plan.shells) top = std::max(top, s.r_hi);
    CHECK(top == doctest::Approx(4.0));
    Realization real = sample_homogenized(c, 0.25, 0);
    double rmax = 0;
    for (const auto& b : real.balls) rmax = std::max(rmax, b.radius);
    CHECK(rmax > 1.0);
    CHECK(rmax <= 4.0);
    CHECK_THROWS_AS(plan_shells(c, 1.5), UsageError);
}

TEST_CASE("truncation bound formula and its oracle check") {
    const double m = 0.25, r_min = std::ldexp(1.0, -20);
    CHECK(truncation_bound(1, m, r_min) == doctest::Approx(2.0 / m * std::pow(r_min, 2 * m)));
    CHECK(truncation_bound(2, m, r_min, 0.5) == doctest::Approx(M_PI / m * std::pow(r_min, 2 * m) * std::pow(0.5, -2 + 2 * m)));
    // discarded-radius contribution to the variogram never exceeds the bound
    for (int d : {1, 2, 3})
        for (double lag : {1e-7, 1e-5, 1e-3, 0.5}) {
            Point x(d);
            x[0] = lag;
            double full = truncated_increment_variance(d, m, x, 0, 1, 1e-10).value;
            double cut = truncated_increment_variance(d, m, x, r_min, 1, 1e-10).value;
            CHECK(full - cut <= truncation_bound(d, m, r_min) * (1 + 1e-8));
        }
    SimulationConfig c = base_config(2, m, 0.01);
    CHECK(sample_realization(c, 0).truncation_bound == doctest::Approx(truncation_bound(2, m, 0.01)));
}

TEST_CASE("resource guard rejects absurd window draws") {
    SimulationConfig c = base_config(3, 0.05, 1e-9);
    CHECK_THROWS_AS(sample_realization(c, 0), ResourceError);
}

TEST_CASE("realization persistence round-trips") {
    SimulationConfig c = base_config(2, 0.25, 0.05);
    Realization a = sample_along_lines(c, Direction::axis(2, 1), {Point{0.5, 0.0}}, 0.7, 2);
    a.config_hash = "0123456789abcdef";
    std::stringstream ss;
    write_realization(ss, a);
    Realization b = read_realization(ss);
    CHECK(b.config_hash == a.config_hash);
    CHECK(b.line_half_length == a.line_half_length);
    REQUIRE(b.balls.size() == a.balls.size());
    for (std::size_t i = 0; i < a.balls.size(); ++i) {
        CHECK(b.balls[i].center == a.balls[i].center);
        CHECK(b.balls[i].radius == a.balls[i].radius);
    }
    std::stringstream again;
    write_realization(again, b);
    std::stringstream first;
    write_realization(first, a);
    CHECK(again.str() == first.str());
}
