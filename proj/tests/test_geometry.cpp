#include <doctest.h>

#include <cmath>

#include "microball/errors.hpp"
#include "microball/geometry.hpp"

using namespace microball;

TEST_CASE("unit ball volumes") {
    CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
    CHECK(unit_ball_volume(2) == doctest::Approx(M_PI));
    CHECK(unit_ball_volume(3) == doctest::Approx(4.0 * M_PI / 3.0));
}

TEST_CASE("balls are open") {
    Ball b{Point{0.0, 0.0}, 1.0};
    CHECK(ball_contains(b, Point{0.5, 0.5}));
    CHECK_FALSE(ball_contains(b, Point{1.0, 0.0}));
    CHECK_FALSE(ball_contains(b, Point{0.0, -1.0}));
}

TEST_CASE("directions must be unit vectors") {
    CHECK_THROWS_AS(Direction(Point{1.0, 1.0}), UsageError);
    Direction d = Direction::normalized(Point{3.0, 4.0});
    CHECK(d.v[0] == doctest::Approx(0.6));
    CHECK(Direction::axis(3, 2).v == Point{0.0, 0.0, 1.0});
}

TEST_CASE("hyperplane frame is orthonormal and round-trips") {
    for (const Point& a : {Point{0.0, 1.0}, Point{0.6, 0.8}, Point{0.0, 0.0, 1.0}, Point{2.0 / 3, -1.0 / 3, 2.0 / 3}}) {
        Direction alpha(a);
        Hyperplane h(alpha);
        const int d = alpha.dim();
        for (int i = 0; i < d - 1; ++i) {
            CHECK(std::abs(dot(h.basis(i), alpha.v)) < 1e-15);
            CHECK(norm(h.basis(i)) == doctest::Approx(1.0).epsilon(1e-15));
            for (int j = 0; j < i; ++j) CHECK(std::abs(dot(h.basis(i), h.basis(j))) < 1e-15);
        }
        Point q(d - 1);
        for (int i = 0; i < d - 1; ++i) q[i] = 0.3 + i;
        Point y = h.embed(q);
        CHECK(std::abs(h.along(y)) < 1e-14);
        Point back = h.coords(y);
        for (int i = 0; i < d - 1; ++i) CHECK(back[i] == doctest::Approx(q[i]).epsilon(1e-14));
    }
}

TEST_CASE("chord interval of a line through a ball") {
    Direction alpha = Direction::axis(2, 1);
    Ball b{Point{0.3, 2.0}, 0.5};
    auto c = chord_interval(b, Point{0.0, 0.0}, alpha);
    REQUIRE(c);
    CHECK(c->first == doctest::Approx(2.0 - 0.4));
    CHECK(c->second == doctest::Approx(2.0 + 0.4));
    CHECK_FALSE(chord_interval(b, Point{1.0, 0.0}, alpha));
    CHECK_THROWS_AS(chord_interval(b, Point{0.0, 1.0}, alpha), UsageError);
}

TEST_CASE("psi indicator") {
    Point x{1.0};
    // ball around 0.9 of radius 0.5 covers x only
    CHECK(psi_indicator(x, Point{0.9}, 0.5) == 1);
    // around 0.1 it covers the origin only
    CHECK(psi_indicator(x, Point{0.1}, 0.5) == -1);
    // both or neither
    CHECK(psi_indicator(x, Point{0.5}, 0.6) == 0);
    CHECK(psi_indicator(x, Point{5.0}, 0.6) == 0);
}

TEST_CASE("psi indicator property: antisymmetry under xi -> x - xi") {
    for (int i = 0; i < 200; ++i) {
        double t = -2 + 0.021 * i;
        Point x{0.7, -0.2}, xi{t, 0.3 * t};
        for (double r : {0.1, 0.5, 1.3}) CHECK(psi_indicator(x, xi, r) == -psi_indicator(x, x - xi, r));
    }
}

TEST_CASE("G profile is the chord half-length difference") {
    Point y{0.3}, g{0.1};
    double r = 0.5;
    double expect = std::sqrt(r * r - 0.04) - std::sqrt(r * r - 0.01);
    CHECK(g_profile(y, g, r) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(g_profile(y, Point{2.0}, r) == 0.0);
    // far ball: accurate despite cancellation
    double R = 1e8;
    double far = g_profile(y, g, R);
    double ref = (2 * 0.03 - 0.09) / (2 * R);
    CHECK(far == doctest::Approx(ref).epsilon(1e-10));
}
