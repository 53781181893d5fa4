#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "microball/field.hpp"
#include "microball/geometry.hpp"
#include "microball/sampler.hpp"

namespace microball {

class WindowFunction {
public:
    enum class Kind { Rectangular, Gaussian, Hann };

    static WindowFunction rectangular(double half_width);
    static WindowFunction gaussian(double sigma);
    static WindowFunction hann(double half_width);

    Kind kind() const { return kind_; }
    double parameter() const { return param_; }  // L or sigma
    std::string str() const;

    double operator()(double p) const;
    // Signed integral of rho over [a, b] (negative when b < a).
    double integral(double a, double b) const;
    // C_N with |rho(p)| <= C_N (1 + |p|)^{-N}.
    double decay_constant(int n) const;
    double l2_norm2() const;
    double total_mass() const;
    // Smallest t with mass outside [-t, t] at most tol times the total mass.
    double mass_radius(double tol = 1e-8) const;

private:
    Kind kind_ = Kind::Gaussian;
    double param_ = 1.0;
};

double window_value(const WindowFunction& w, double p);

// Projects the realization onto the hyperplane orthogonal to alpha and indexes the
// projected centers with per-shell grids, so a line query touches only balls whose
// projected center lies within one cell.
class XrayIndex {
public:
    XrayIndex(const Realization& real, const Direction& alpha);

    const Hyperplane& plane() const { return plane_; }

    // P_alpha X(y) for y on the hyperplane, given in ambient coordinates.
    double transform(const WindowFunction& w, const Point& y) const;
    // P_alpha X(y1) - P_alpha X(y0), per-ball chord differences summed jointly.
    double increment(const WindowFunction& w, const Point& y0, const Point& y1) const;

private:
    void check_line(const WindowFunction& w, const Point& y) const;
    template <class F>
    double sum_over(const Point& y0, const Point& y1, bool pair, F&& contribution) const;

    int dim_;
    Box window_;
    Hyperplane plane_;
    SpatialIndex projected_;
    std::vector<Point> q_;       // projected centers, intrinsic coordinates
    std::vector<double> along_;  // center coordinate along alpha
    std::vector<double> r2_;
    std::vector<Point> feet_;  // line-restricted draws only
    double half_length_ = 0;
};

std::vector<double> xray_transform(const Realization& real, const Direction& alpha, const WindowFunction& w,
                                   const std::vector<Point>& ys);

std::vector<double> xray_increment_samples(const Realization& real, const Direction& alpha,
                                           const WindowFunction& w, const Point& y0,
                                           const std::vector<Point>& lags);

// CSV `y1,..,y(d-1),value` in intrinsic hyperplane coordinates.
void write_projection_csv(std::ostream& os, const Hyperplane& plane, const std::vector<Point>& ys,
                          const std::vector<double>& values, const std::string& header = "");

// Binary PGM (P5, maxval 65535, big-endian). Values map linearly from [min, max]
// to [0, 65535]; the range is written in a header comment.
void write_projection_pgm(std::ostream& os, const std::vector<double>& values, int width, int height,
                          const std::string& comment = "");

}  // namespace microball
