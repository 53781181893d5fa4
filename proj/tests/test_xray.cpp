#include <doctest.h>

#include <cmath>
#include <sstream>

#include "microball/errors.hpp"
#include "microball/oracle.hpp"
#include "microball/quadrature.hpp"
#include "microball/xray.hpp"

using namespace microball;

namespace {
SimulationConfig config(int dim, double r_min) {
    SimulationConfig c;
    c.dim = dim;
    Point lo(dim), hi(dim);
    for (int k = 0; k < dim; ++k) lo[k] = -3.0, hi[k] = 3.0;
    c.window = Box(lo, hi);
    c.index = IndexField::constant(0.25);
    c.r_min = r_min;
    c.seed = 77;
    c.replicas = 100000;
    return c;
}
}  // namespace

TEST_CASE("window functions") {
    WindowFunction g = WindowFunction::gaussian(0.5), r = WindowFunction::rectangular(1.0),
                   h = WindowFunction::hann(2.0);
    // unnormalized: rho = 1 on the chord for a wide rectangular window
    CHECK(g.total_mass() == doctest::Approx(0.5 * std::sqrt(2 * M_PI)).epsilon(1e-12));
    CHECK(r.total_mass() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(h.total_mass() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r(0.99) == 1.0);
    CHECK(h(0.0) == 1.0);
    for (const WindowFunction* w : {&g, &r, &h}) {
        for (auto [a, b] : {std::pair{-0.3, 0.9}, std::pair{0.2, 5.0}, std::pair{-7.0, 7.0}}) {
            // integrate_pieces spans the breakpoint hull; restrict by hand
            double num = integrate_pieces([&](double p) { return p < a || p > b ? 0.0 : (*w)(p); },
                                   {a, b, -2.0, -1.0, 1.0, 2.0}, 1e-12)
                      .value;
            CHECK(w->integral(a, b) == doctest::Approx(num).epsilon(1e-9));
            CHECK(w->integral(b, a) == doctest::Approx(-num).epsilon(1e-9));
        }
        double t = w->mass_radius(1e-8);
        CHECK(1 - w->integral(-t, t) / w->total_mass() <= 1e-8 * (1 + 1e-6));
        // decay bound |rho(p)| <= C_N (1 + |p|)^-N
        for (int n : {1, 2, 4})
            for (double p = -10; p <= 10; p += 0.37)
                CHECK(std::abs((*w)(p)) <= w->decay_constant(n) * std::pow(1 + std::abs(p), -n) * (1 + 1e-12));
    }
    CHECK(r.mass_radius() == doctest::Approx(1.0));
    CHECK(g.l2_norm2() == doctest::Approx(0.5 * std::sqrt(M_PI)).epsilon(1e-10));
    for (const WindowFunction* w : {&g, &r, &h}) {
        double t = w->mass_radius(1e-14) + 1;
        double num = integrate_pieces([&](double p) { return (*w)(p) * (*w)(p); }, {-t, -1.0, 1.0, t}, 1e-13).value;
        CHECK(w->l2_norm2() == doctest::Approx(num).epsilon(1e-9));
    }
}

TEST_CASE("transform agrees with quadrature of the coverage along the line") {
    for (int d : {2, 3}) {
        SimulationConfig c = config(d, 0.02);
        Realization real = sample_realization(c, 0);
        Direction alpha = d == 2 ? Direction::normalized(Point{0.6, 0.8}) : Direction::normalized(Point{1.0, 2.0, 2.0});
        Hyperplane plane(alpha);
        WindowFunction w = WindowFunction::rectangular(0.7);
        XrayIndex index(real, alpha);
        for (int i = 0; i < 5; ++i) {
            Point q(d - 1);
            for (int k = 0; k < d - 1; ++k) q[k] = 0.3 * i - 0.6 + 0.1 * k;
            Point y = plane.embed(q);
            // coverage is piecewise constant along the line: sum exact chord overlaps
            double exact = 0;
            for (const auto& b : real.balls) {
                auto ch = chord_interval({b.center, b.radius}, y, alpha);
                if (ch) exact += std::max(0.0, std::min(ch->second, 0.7) - std::max(ch->first, -0.7));
            }
            CHECK(index.transform(w, y) == doctest::Approx(exact).epsilon(1e-10));
        }
    }
}

TEST_CASE("increments equal differences of transforms") {
    SimulationConfig c = config(2, 0.01);
    Realization real = sample_realization(c, 3);
    Direction alpha = Direction::axis(2, 1);
    WindowFunction w = WindowFunction::gaussian(0.4);
    XrayIndex index(real, alpha);
    Point y0{0.2, 0.0};
    for (double lag : {1e-3, 0.05, 0.5}) {
        Point y1{0.2 + lag, 0.0};
        double diff = index.transform(w, y1) - index.transform(w, y0);
        CHECK(index.increment(w, y0, y1) == doctest::Approx(diff).epsilon(1e-9).scale(1.0));
    }
    CHECK_THROWS_AS(index.transform(w, Point{0.2, 0.1}), UsageError);
}

TEST_CASE("line draws give the same law as window draws on their segments") {
    // mean projection equals E X times the window mass
    SimulationConfig c = config(2, 0.01);
    Direction alpha = Direction::axis(2, 1);
    WindowFunction w = WindowFunction::hann(0.5);
    Point y{0.0, 0.0};
    const int R = 1500;
    double s = 0, s2 = 0;
    for (int r = 0; r < R; ++r) {
        double v = xray_transform(sample_along_lines(c, alpha, {y}, w.mass_radius(), r), alpha, w, {y})[0];
        s += v;
        s2 += v * v;
    }
    double ex = mean_coverage(2, c.index, c.r_min, 1.0).value * w.total_mass();
    double se = std::sqrt((s2 / R - (s / R) * (s / R)) / R);
    CHECK(std::abs(s / R - ex) < 4 * se);
}

TEST_CASE("projection CSV and PGM") {
    Hyperplane plane(Direction::axis(2, 1));
    std::ostringstream csv;
    write_projection_csv(csv, plane, {Point{0.5, 0.0}, Point{1.0, 0.0}}, {1.5, 0.25}, "# h\n");
    CHECK(csv.str() == "# h\ny1,value\n0.5,1.5\n1,0.25\n");
    std::ostringstream pgm;
    write_projection_pgm(pgm, {0.0, 1.0, 0.5, 0.25}, 2, 2, "c");
    std::string s = pgm.str();
    CHECK(s.rfind("P5\n# c\n# linear scaling", 0) == 0);
    std::string tail = s.substr(s.size() - 8);
    CHECK(static_cast<unsigned char>(tail[0]) == 0);
    CHECK(static_cast<unsigned char>(tail[2]) == 0xff);  // 65535 big-endian
    CHECK(static_cast<unsigned char>(tail[3]) == 0xff);
    CHECK(static_cast<unsigned char>(tail[4]) == 0x80);  // 32768
    CHECK(static_cast<unsigned char>(tail[5]) == 0x00);
    CHECK_THROWS_AS(write_projection_pgm(pgm, {1.0}, 2, 2), UsageError);
}
