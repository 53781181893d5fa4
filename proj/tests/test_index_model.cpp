#include <doctest.h>

#include <cmath>
#include <string>

#include "microball/errors.hpp"
#include "microball/index_model.hpp"

using namespace microball;

namespace {
double eval(const std::string& src, const Point& x, int dim = 3) {
    return parse_index_expression(src, IndexKind::Smooth, dim).evaluate(x);
}

std::size_t syntax_offset(const std::string& src) {
    try {
        parse_index_expression(src);
    } catch (const SyntaxError& e) {
        return e.offset;
    }
    return 0;
}
}  // namespace

TEST_CASE("expression evaluation") {
    Point x{0.5, -2.0, 3.0};
    CHECK(eval("0.2 + 0.1*x1", x) == doctest::Approx(0.25));
    CHECK(eval("1 - 2 - 3", x) == doctest::Approx(-4.0));  // left associative
    CHECK(eval("8 / 4 / 2", x) == doctest::Approx(1.0));
    CHECK(eval("-x2 * 2", x) == doctest::Approx(4.0));
    CHECK(eval("abs(x2) + min(x1, x3) - max(1, 2)", x) == doctest::Approx(0.5));
    CHECK(eval("clamp(x3, 0, 1)", x) == doctest::Approx(1.0));
    CHECK(eval("tanh(0)", x) == 0.0);
    CHECK(eval("smoothstep(0, 1, 0.5)", x) == doctest::Approx(0.5));
    CHECK(eval("smoothstep(0, 1, 0.25)", x) == doctest::Approx(0.15625));
    CHECK(eval("smoothstep(1, 0, 0.25)", x) == doctest::Approx(1 - 0.15625));  // reversed edges
    CHECK(eval("norm(x)", x) == doctest::Approx(std::sqrt(13.25)));
    CHECK(eval("u1", x) == doctest::Approx(0.5 / std::sqrt(13.25)));
    CHECK(eval("1e-1 + 2.5E+0", x) == doctest::Approx(2.6));
    CHECK(eval("pi", x) == doctest::Approx(M_PI));
}

TEST_CASE("printing round-trips") {
    for (const char* src : {"0.2 + 0.1*x1", "clamp(0.2 + 0.1*x1, 0.2, 0.3)", "-(x1 - x2) / 3",
                            "0.2 + 0.15*smoothstep(0.5, 1.0, abs(x2))", "min(u1, 0.3) * norm(x)"}) {
        auto e = parse_index_expression(src);
        auto again = parse_index_expression(e.to_string());
        CHECK(again.to_string() == e.to_string());
        Point x{0.3, -0.7, 0.2};
        CHECK(again.evaluate(x) == doctest::Approx(e.evaluate(x)).epsilon(1e-15));
    }
}

TEST_CASE("syntax errors carry byte offsets") {
    CHECK(syntax_offset("0.2 + ") == 7);
    CHECK(syntax_offset("0.2 + * x1") == 7);
    CHECK(syntax_offset("(x1") == 4);
    CHECK(syntax_offset("x1 $") == 4);
    CHECK(syntax_offset("1.2.3") == 1);
    CHECK_THROWS_AS(parse_index_expression("foo(1)"), UsageError);
    CHECK_THROWS_AS(parse_index_expression("clamp(1, 2)"), UsageError);
    CHECK_THROWS_AS(parse_index_expression("x3", IndexKind::Smooth, 2), UsageError);
    CHECK_THROWS_AS(parse_index_expression("y1"), UsageError);
}

TEST_CASE("unit coordinates are undefined at the origin") {
    CHECK_THROWS_AS(eval("u1", Point{0.0, 0.0}, 2), DomainError);
}

TEST_CASE("constant index validation") {
    CHECK_THROWS_AS(IndexField::constant(0.0), ConfigError);
    CHECK_THROWS_AS(IndexField::constant(0.5), ConfigError);
    IndexField h = IndexField::constant(0.3);
    CHECK(h(Point{7.0}) == 0.3);
}

TEST_CASE("smooth index bounds are certified") {
    Box region(Point{0.0}, Point{1.0});
    IndexField h = IndexField::smooth("clamp(0.2 + 0.1*x1, 0.2, 0.3)", 1, 0.1, 1.0, region);
    CHECK(h.h_lo() <= 0.2);
    CHECK(h.h_hi() >= 0.3);
    CHECK(h.h_lo() > 0.19);
    CHECK(h(Point{0.5}) == doctest::Approx(0.25));
    // a bracket leaving (0, 1/2) is rejected
    CHECK_THROWS_AS(IndexField::smooth("0.45 + x1", 1, 1.0, 1.0, region), ConfigError);
}

TEST_CASE("star index must be even and is degree-0 homogeneous") {
    const char* star = "0.2 + 0.25*smoothstep(0.8660254037844386, 0.8460254037844386, abs(u1))";
    IndexField h = IndexField::star(star, 2, 10.0, 1.0);
    for (double t : {0.1, 0.7, 2.0, 3.0}) {
        Point u{std::cos(t), std::sin(t)};
        CHECK(h(u) == doctest::Approx(h(-1.0 * u)));
        CHECK(h(u) == doctest::Approx(h(5.0 * u)));
    }
    CHECK(h(Point{1.0, 0.0}) == doctest::Approx(0.2));
    CHECK(h(Point{0.0, 1.0}) == doctest::Approx(0.45));
    CHECK_THROWS_AS(h(Point{0.0, 0.0}), DomainError);
    CHECK_THROWS_AS(IndexField::star("0.2 + 0.1*u1", 2, 1.0, 1.0), ConfigError);
}

TEST_CASE("line infimum over a band") {
    Box region(Point{-2.0, -3.0}, Point{2.0, 3.0});
    IndexField h = IndexField::smooth("0.2 + 0.15*smoothstep(0.5, 1.0, abs(x2))", 2, 0.5, 1.0, region);
    LineMinimum lm = min_along_line(h, Point{0.3, 0.0}, Direction::axis(2, 1), 2.0);
    CHECK(lm.m_line == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(lm.minimizer_measure == doctest::Approx(1.0).epsilon(1e-3));
    // strictly convex profile: single minimizer, zero measure
    IndexField q = IndexField::smooth("0.2 + 0.05*x2*x2", 2, 0.5, 1.0, Box(Point{-2.0, -2.0}, Point{2.0, 2.0}));
    LineMinimum lq = min_along_line(q, Point{0.0, 0.0}, Direction::axis(2, 1), 2.0);
    CHECK(lq.m_line == doctest::Approx(0.2).epsilon(1e-9));
    // cells within 1e-6 of the minimum: |t| < sqrt(1e-6 / 0.05)
    CHECK(lq.minimizer_measure < 2 * std::sqrt(1e-6 / 0.05) + 1e-3);
    CHECK(std::abs(lq.t_at_min) < 1e-3);
}
