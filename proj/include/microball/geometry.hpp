#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <optional>
#include <string>
#include <utility>

namespace microball {

constexpr int kMaxDim = 3;

// Point in R^d, d <= 3. Unused trailing coordinates are kept at zero so that
// distance computations can run over all three slots regardless of d.
struct Point {
    std::array<double, kMaxDim> c{};
    int dim = 0;

    Point() = default;
    explicit Point(int d);
    Point(std::initializer_list<double> xs);

    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }
    bool finite() const;
    std::string str() const;
};

Point operator+(const Point& a, const Point& b);
Point operator-(const Point& a, const Point& b);
Point operator*(double s, const Point& a);
bool operator==(const Point& a, const Point& b);

double dot(const Point& a, const Point& b);
double norm2(const Point& a);
double norm(const Point& a);
double dist2(const Point& a, const Point& b);

struct Direction {
    Point v;

    Direction() = default;
    // Throws UsageError unless |v| = 1 within 1e-12.
    explicit Direction(const Point& unit);
    static Direction normalized(const Point& p);
    static Direction axis(int d, int k);
    int dim() const { return v.dim; }
};

struct Ball {
    Point center;
    double radius = 0.0;
};

struct Box {
    Point lo, hi;

    Box() = default;
    Box(Point lo, Point hi);
    int dim() const { return lo.dim; }
    double volume() const;
    double extent(int k) const { return hi[k] - lo[k]; }
    bool contains(const Point& p) const;  // closed box
    Box dilated(double margin) const;     // componentwise expansion
};

bool ball_contains(const Ball& b, const Point& x);

// Open parameter interval {p : y + p alpha in b}; empty when the line misses.
std::optional<std::pair<double, double>> chord_interval(const Ball& b, const Point& y,
                                                        const Direction& alpha);

// psi(x, xi, r) = 1{|x - xi| < r <= |xi|} - 1{|xi| < r <= |x - xi|}.
int psi_indicator(const Point& x, const Point& xi, double r);

// G(y, gamma, r) on the hyperplane, both points in intrinsic coordinates.
double g_profile(const Point& y, const Point& gamma, double r);

// Orthonormal frame (alpha, b_1 .. b_{d-1}). The b_k come from Gram-Schmidt on
// the standard basis with the axis most parallel to alpha left out.
class Hyperplane {
public:
    explicit Hyperplane(const Direction& alpha);

    int dim() const { return alpha_.dim(); }
    const Direction& alpha() const { return alpha_; }
    const Point& basis(int k) const { return basis_[k]; }

    Point embed(const Point& intrinsic) const;  // (d-1) coords -> ambient
    Point coords(const Point& ambient) const;   // projection, (d-1) coords
    double along(const Point& ambient) const { return dot(ambient, alpha_.v); }

private:
    Direction alpha_;
    std::array<Point, kMaxDim - 1> basis_{};
};

double unit_ball_volume(int d);

}  // namespace microball
