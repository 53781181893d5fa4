#include <doctest.h>

#include <cmath>
#include <sstream>

#include "microball/errors.hpp"
#include "microball/field.hpp"
#include "microball/oracle.hpp"

using namespace microball;

namespace {
SimulationConfig config(int dim, double r_min, double m = 0.25) {
    SimulationConfig c;
    c.dim = dim;
    Point lo(dim), hi(dim);
    for (int k = 0; k < dim; ++k) hi[k] = 1.0;
    c.window = Box(lo, hi);
    c.index = IndexField::constant(m);
    c.r_min = r_min;
    c.seed = 5;
    c.replicas = 100000;
    return c;
}

Point grid_point(int dim, int i) {
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = std::fmod(0.1234567 * (i + 1) * (k + 1.37), 1.0);
    return p;
}
}  // namespace

TEST_CASE("spatial index agrees with the brute-force scan") {
    for (int d : {1, 2, 3}) {
        SimulationConfig c = config(d, d == 3 ? 0.03 : 0.005);
        for (int r = 0; r < 3; ++r) {
            Realization real = sample_realization(c, r);
            SpatialIndex index(real);
            CHECK(index.size() == real.balls.size());
            for (int i = 0; i < 300; ++i) {
                Point x = grid_point(d, i + 1000 * r);
                CHECK(index.count(x) == brute_force_count(real, x));
            }
        }
    }
}

TEST_CASE("increments split into balls gained and lost") {
    SimulationConfig c = config(2, 0.005);
    Realization real = sample_realization(c, 1);
    SpatialIndex index(real);
    Point x0{0.4, 0.4};
    std::vector<Point> lags{Point{0.01, 0.0}, Point{0.1, -0.2}, Point{0.0, 0.5}};
    auto inc = increment_samples(index, x0, lags);
    for (std::size_t l = 0; l < lags.size(); ++l) {
        Point x1 = x0 + lags[l];
        long plus = 0, minus = 0;
        for (const auto& b : real.balls) {
            bool in0 = dist2(b.center, x0) < b.radius * b.radius, in1 = dist2(b.center, x1) < b.radius * b.radius;
            plus += in1 && !in0;
            minus += in0 && !in1;
        }
        CHECK(inc[l].n_plus == plus);
        CHECK(inc[l].n_minus == minus);
        CHECK(inc[l].delta == brute_force_count(real, x1) - brute_force_count(real, x0));
    }
    CHECK_THROWS_AS(increment_samples(index, x0, {Point{2.0, 0.0}}), UsageError);
}

TEST_CASE("queries outside the exact region are flagged") {
    SimulationConfig c = config(1, 0.01);
    SpatialIndex w(sample_realization(c, 0));
    CoverageField f = evaluate_coverage(w, {Point{0.5}, Point{1.5}});
    CHECK(f.flagged);
    CHECK_FALSE(f.outside[0]);
    CHECK(f.outside[1]);
    SpatialIndex p(sample_at_probes(c, {Point{0.3}}, 0));
    CHECK(p.valid_query(Point{0.3}));
    CHECK_FALSE(p.valid_query(Point{0.31}));
}

TEST_CASE("field variance matches the oracle") {
    // Var X(x) = E X(x) for a Poisson count
    SimulationConfig c = config(1, 1e-4);
    const int R = 4000;
    double s = 0, s2 = 0;
    for (int r = 0; r < R; ++r) {
        double v = static_cast<double>(SpatialIndex(sample_at_probes(c, {Point{0.5}}, r)).count(Point{0.5}));
        s += v;
        s2 += v * v;
    }
    double mean = s / R, var = s2 / R - mean * mean;
    double expect = mean_coverage(1, c.index, c.r_min, 1.0).value;
    CHECK(std::abs(mean - expect) < 4 * std::sqrt(expect / R));
    CHECK(std::abs(var - expect) < 4 * expect * std::sqrt(2.0 / R) + 4 * std::sqrt(expect / R));
}

TEST_CASE("coverage CSV uses 17 significant digits") {
    CoverageField f;
    f.points = {Point{0.1, 1.0 / 3.0}};
    f.counts = {7};
    f.outside = {0};
    std::ostringstream os;
    write_coverage_csv(os, f, "# h");
    CHECK(os.str() == "# h\nx1,x2,count\n0.10000000000000001,0.33333333333333331,7\n");
}
