#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "microball/geometry.hpp"

namespace microball {

enum class IndexKind { Constant, Smooth, Star };

IndexKind parse_index_kind(std::string_view name);
std::string to_string(IndexKind kind);

// AST for the index expression language (grammar in README.md).
class IndexExpression {
public:
    enum class Op { Num, Var, Unit, Norm, Neg, Add, Sub, Mul, Div, Min, Max, Abs, Clamp, Tanh, Smoothstep };

    struct Node {
        Op op = Op::Num;
        double value = 0.0;     // Num
        int var = 0;            // Var / Unit: coordinate index
        std::vector<int> args;  // child node ids
    };

    double evaluate(const Point& x) const;
    std::string to_string() const;
    int operator_count() const;
    int max_variable() const { return max_var_; }  // highest coordinate used, 1-based
    bool is_literal() const;
    const std::vector<Node>& nodes() const { return nodes_; }
    int root() const { return root_; }
    const std::string& source() const { return source_; }

private:
    friend class Parser;
    struct Instr {
        Op op;
        double value;
        int var;
        int argc;
    };

    std::string print(int id) const;
    void compile(int id);

    std::vector<Node> nodes_;
    int root_ = -1;
    int max_var_ = 0;
    bool uses_unit_ = false;
    std::vector<Instr> program_;
    std::string source_;
};

// dim bounds the admissible x1..xd / u1..ud names. Star expressions are always
// evaluated on x/|x|, so any expression is degree-0 homogeneous by construction;
// evenness is checked when the IndexField is built.
IndexExpression parse_index_expression(std::string_view source, IndexKind kind = IndexKind::Smooth,
                                       int dim = kMaxDim);

struct IndexBounds {
    double lo = 0, hi = 0;              // certified: grid extrema widened by C * delta^beta
    double grid_min = 0, grid_max = 0;  // raw scan extrema
    double delta = 0;
};

class IndexField {
public:
    static IndexField constant(double m);
    static IndexField smooth(std::string_view source, int dim, double lipschitz_c, double beta,
                             const Box& region, double spacing = 0.0);
    static IndexField star(std::string_view source, int dim, double lipschitz_c, double beta,
                           double spacing = 0.0);

    IndexKind kind() const { return kind_; }
    bool is_constant() const { return kind_ == IndexKind::Constant; }
    double constant_value() const { return m_; }
    int dim() const { return dim_; }
    double lipschitz_c() const { return c_; }
    double beta() const { return beta_; }
    double h_lo() const { return bounds_.lo; }
    double h_hi() const { return bounds_.hi; }
    const IndexBounds& bounds() const { return bounds_; }
    const IndexExpression* expression() const { return expr_.get(); }
    std::string source() const;

    double operator()(const Point& xi) const;

private:
    IndexKind kind_ = IndexKind::Constant;
    double m_ = 0.0;
    int dim_ = 0;
    double c_ = 0.0, beta_ = 1.0;
    std::shared_ptr<const IndexExpression> expr_;
    IndexBounds bounds_;
};

double eval_index(const IndexField& h, const Point& xi);

// Grid scan over the window (Star: over the unit sphere). Throws ConfigError
// when the certified bracket leaves (0, 1/2). spacing <= 0 picks a default.
IndexBounds index_bounds(const IndexField& h, const Box& window, double spacing = 0.0);

struct LineMinimum {
    double m_line = 0.0;
    double minimizer_measure = 0.0;
    double t_at_min = 0.0;
};

LineMinimum min_along_line(const IndexField& h, const Point& y0, const Direction& alpha, double t_max,
                           int cells = 20000);

}  // namespace microball
