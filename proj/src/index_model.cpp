#include "microball/index_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "microball/errors.hpp"

namespace microball {

IndexKind parse_index_kind(std::string_view name) {
    if (name == "constant") return IndexKind::Constant;
    if (name == "smooth") return IndexKind::Smooth;
    if (name == "star") return IndexKind::Star;
    throw ConfigError("unknown index kind '" + std::string(name) + "'");
}

std::string to_string(IndexKind kind) {
    switch (kind) {
        case IndexKind::Constant: return "constant";
        case IndexKind::Smooth: return "smooth";
        case IndexKind::Star: return "star";
    }
    return "?";
}

// ---------------------------------------------------------------- parser

namespace {

enum class Tok { Num, Ident, Plus, Minus, Star, Slash, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::size_t offset;  // 1-based
    std::string text;
    double value = 0.0;
};

std::vector<Token> lex(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char ch = static_cast<unsigned char>(s[i]);
        if (std::isspace(ch)) {
            ++i;
            continue;
        }
        std::size_t at = i + 1;
        if (std::isdigit(ch) || (ch == '.' && i + 1 < s.size() && std::isdigit((unsigned char)s[i + 1]))) {
            std::size_t j = i;
            while (j < s.size() && (std::isdigit((unsigned char)s[j]) || s[j] == '.')) ++j;
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit((unsigned char)s[k])) {
                    while (k < s.size() && std::isdigit((unsigned char)s[k])) ++k;
                    j = k;
                }
            }
            std::string text(s.substr(i, j - i));
            char* end = nullptr;
            double v = std::strtod(text.c_str(), &end);
            if (end != text.c_str() + text.size()) throw SyntaxError("malformed number '" + text + "'", at);
            out.push_back({Tok::Num, at, text, v});
            i = j;
            continue;
        }
        if (std::isalpha(ch) || ch == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum((unsigned char)s[j]) || s[j] == '_')) ++j;
            out.push_back({Tok::Ident, at, std::string(s.substr(i, j - i))});
            i = j;
            continue;
        }
        Tok k;
        switch (ch) {
            case '+': k = Tok::Plus; break;
            case '-': k = Tok::Minus; break;
            case '*': k = Tok::Star; break;
            case '/': k = Tok::Slash; break;
            case '(': k = Tok::LParen; break;
            case ')': k = Tok::RParen; break;
            case ',': k = Tok::Comma; break;
            default: throw SyntaxError(std::string("unexpected character '") + s[i] + "'", at);
        }
        out.push_back({k, at, std::string(1, s[i])});
        ++i;
    }
    out.push_back({Tok::End, s.size() + 1, ""});
    return out;
}

}  // namespace

class Parser {
public:
    Parser(std::string_view src, int dim) : toks_(lex(src)), dim_(dim) {}

    IndexExpression run(std::string_view src) {
        expr_.source_ = std::string(src);
        expr_.root_ = expression();
        if (peek().kind != Tok::End) throw SyntaxError("unexpected '" + peek().text + "'", peek().offset);
        expr_.compile(expr_.root_);
        return std::move(expr_);
    }

private:
    using Op = IndexExpression::Op;

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() { return toks_[pos_++]; }
    void expect(Tok k, const char* what) {
        if (peek().kind != k) {
            const Token& t = peek();
            throw SyntaxError(std::string("expected ") + what + (t.kind == Tok::End ? " before end of input" : " near '" + t.text + "'"),
                              t.offset);
        }
        ++pos_;
    }

    int add(Op op, std::vector<int> args = {}, double value = 0.0, int var = 0) {
        IndexExpression::Node n;
        n.op = op;
        n.args = std::move(args);
        n.value = value;
        n.var = var;
        expr_.nodes_.push_back(std::move(n));
        return static_cast<int>(expr_.nodes_.size()) - 1;
    }

    int expression() {
        int lhs = term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            Op op = next().kind == Tok::Plus ? Op::Add : Op::Sub;
            int rhs = term();
            lhs = add(op, {lhs, rhs});
        }
        return lhs;
    }

    int term() {
        int lhs = unary();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            Op op = next().kind == Tok::Star ? Op::Mul : Op::Div;
            int rhs = unary();
            lhs = add(op, {lhs, rhs});
        }
        return lhs;
    }

    int unary() {
        if (peek().kind == Tok::Minus) {
            next();
            return add(Op::Neg, {unary()});
        }
        if (peek().kind == Tok::Plus) {
            next();
            return unary();
        }
        return primary();
    }

    int primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::Num: next(); return add(Op::Num, {}, t.value);
            case Tok::LParen: {
                next();
                int e = expression();
                expect(Tok::RParen, "')'");
                return e;
            }
            case Tok::Ident: return identifier();
            case Tok::End: throw SyntaxError("unexpected end of input", t.offset);
            default: throw SyntaxError("unexpected '" + t.text + "'", t.offset);
        }
    }

    int variable(const Token& t) {
        const std::string& s = t.text;
        if (s == "pi") return add(Op::Num, {}, std::numbers::pi);
        if (s.size() == 2 && (s[0] == 'x' || s[0] == 'u') && s[1] >= '1' && s[1] <= '9') {
            int k = s[1] - '0';
            if (k > dim_) throw UsageError("unknown identifier '" + s + "' for d=" + std::to_string(dim_) + " at offset " + std::to_string(t.offset));
            expr_.max_var_ = std::max(expr_.max_var_, k);
            if (s[0] == 'u') expr_.uses_unit_ = true;
            return add(s[0] == 'x' ? Op::Var : Op::Unit, {}, 0.0, k - 1);
        }
        throw UsageError("unknown identifier '" + s + "' at offset " + std::to_string(t.offset));
    }

    int identifier() {
        Token t = next();
        if (peek().kind != Tok::LParen) return variable(t);
        struct Fn {
            const char* name;
            Op op;
            int min_args, max_args;
        };
        static const Fn fns[] = {{"min", Op::Min, 2, 2},     {"max", Op::Max, 2, 2},
                                 {"abs", Op::Abs, 1, 1},     {"clamp", Op::Clamp, 3, 3},
                                 {"tanh", Op::Tanh, 1, 1},   {"smoothstep", Op::Smoothstep, 3, 3}};
        if (t.text == "norm") {
            next();
            const Token& a = peek();
            if (a.kind != Tok::Ident || a.text != "x") throw SyntaxError("norm takes the literal argument x", a.offset);
            next();
            expect(Tok::RParen, "')'");
            return add(Op::Norm);
        }
        const Fn* fn = nullptr;
        for (const Fn& f : fns)
            if (t.text == f.name) fn = &f;
        if (!fn) throw UsageError("unknown function '" + t.text + "' at offset " + std::to_string(t.offset));
        next();
        std::vector<int> args;
        if (peek().kind != Tok::RParen) {
            args.push_back(expression());
            while (peek().kind == Tok::Comma) {
                next();
                args.push_back(expression());
            }
        }
        expect(Tok::RParen, "')'");
        int n = static_cast<int>(args.size());
        if (n < fn->min_args || n > fn->max_args)
            throw UsageError("arity mismatch: " + t.text + " takes " + std::to_string(fn->min_args) +
                             " argument(s), got " + std::to_string(n) + " at offset " + std::to_string(t.offset));
        return add(fn->op, std::move(args));
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    int dim_;
    IndexExpression expr_;
};

IndexExpression parse_index_expression(std::string_view source, IndexKind kind, int dim) {
    if (dim < 1 || dim > kMaxDim) throw UsageError("dimension must be 1..3");
    Parser p(source, dim);
    IndexExpression e = p.run(source);
    (void)kind;
    return e;
}

// ---------------------------------------------------------------- evaluation

void IndexExpression::compile(int id) {
    const Node& n = nodes_[id];
    for (int a : n.args) compile(a);
    program_.push_back({n.op, n.value, n.var, static_cast<int>(n.args.size())});
}

double IndexExpression::evaluate(const Point& x) const {
    double st[64];
    int sp = 0;
    double u[kMaxDim] = {0, 0, 0};
    double nx = -1.0;
    auto unit = [&] {
        if (nx < 0) {
            nx = norm(x);
            if (nx == 0) throw DomainError("unit-sphere coordinate undefined at the origin");
            for (int k = 0; k < kMaxDim; ++k) u[k] = x[k] / nx;
        }
    };
    for (const Instr& in : program_) {
        if (sp >= 60) throw UsageError("index expression nests too deeply");
        switch (in.op) {
            case Op::Num: st[sp++] = in.value; break;
            case Op::Var: st[sp++] = x[in.var]; break;
            case Op::Unit: unit(); st[sp++] = u[in.var]; break;
            case Op::Norm: st[sp++] = norm(x); break;
            case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::Add: --sp; st[sp - 1] += st[sp]; break;
            case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
            case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
            case Op::Div: --sp; st[sp - 1] /= st[sp]; break;
            case Op::Min: --sp; st[sp - 1] = std::min(st[sp - 1], st[sp]); break;
            case Op::Max: --sp; st[sp - 1] = std::max(st[sp - 1], st[sp]); break;
            case Op::Abs: st[sp - 1] = std::abs(st[sp - 1]); break;
            case Op::Tanh: st[sp - 1] = std::tanh(st[sp - 1]); break;
            case Op::Clamp: {
                sp -= 2;
                double v = st[sp - 1], lo = st[sp], hi = st[sp + 1];
                st[sp - 1] = std::min(std::max(v, lo), hi);
                break;
            }
            case Op::Smoothstep: {
                sp -= 2;
                double e0 = st[sp - 1], e1 = st[sp], v = st[sp + 1];
                double t;
                if (e0 == e1) t = v < e0 ? 0.0 : 1.0;
                else t = std::clamp((v - e0) / (e1 - e0), 0.0, 1.0);
                st[sp - 1] = t * t * (3.0 - 2.0 * t);
                break;
            }
        }
    }
    double r = st[0];
    if (!std::isfinite(r)) throw DomainError("index expression is not finite at " + x.str());
    return r;
}

static std::string num_str(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    std::string s = os.str();
    if (v < 0) s = "(" + s + ")";
    return s;
}

std::string IndexExpression::print(int id) const {
    const Node& n = nodes_[id];
    auto a = [&](int k) { return print(n.args[k]); };
    switch (n.op) {
        case Op::Num: return num_str(n.value);
        case Op::Var: return "x" + std::to_string(n.var + 1);
        case Op::Unit: return "u" + std::to_string(n.var + 1);
        case Op::Norm: return "norm(x)";
        case Op::Neg: return "(-" + a(0) + ")";
        case Op::Add: return "(" + a(0) + " + " + a(1) + ")";
        case Op::Sub: return "(" + a(0) + " - " + a(1) + ")";
        case Op::Mul: return "(" + a(0) + " * " + a(1) + ")";
        case Op::Div: return "(" + a(0) + " / " + a(1) + ")";
        case Op::Min: return "min(" + a(0) + ", " + a(1) + ")";
        case Op::Max: return "max(" + a(0) + ", " + a(1) + ")";
        case Op::Abs: return "abs(" + a(0) + ")";
        case Op::Tanh: return "tanh(" + a(0) + ")";
        case Op::Clamp: return "clamp(" + a(0) + ", " + a(1) + ", " + a(2) + ")";
        case Op::Smoothstep: return "smoothstep(" + a(0) + ", " + a(1) + ", " + a(2) + ")";
    }
    return "?";
}

std::string IndexExpression::to_string() const { return print(root_); }

int IndexExpression::operator_count() const {
    int n = 0;
    for (const Node& node : nodes_)
        if (node.op != Op::Num && node.op != Op::Var && node.op != Op::Unit) ++n;
    return n;
}

bool IndexExpression::is_literal() const { return nodes_[root_].op == Op::Num; }

// ---------------------------------------------------------------- field

IndexField IndexField::constant(double m) {
    IndexField h;
    h.kind_ = IndexKind::Constant;
    h.m_ = m;
    h.bounds_ = {m, m, m, m, 0.0};
    if (!(m > 0.0 && m < 0.5)) throw ConfigError("constant index must lie in (0, 1/2)");
    return h;
}

static void check_lipschitz(double c, double beta) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("Lipschitz constant C must be finite and >= 0");
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("Lipschitz exponent beta must lie in (0, 1]");
}

IndexField IndexField::smooth(std::string_view source, int dim, double lipschitz_c, double beta,
                              const Box& region, double spacing) {
    check_lipschitz(lipschitz_c, beta);
    if (region.dim() != dim) throw UsageError("region dimension does not match the index field");
    IndexField h;
    h.kind_ = IndexKind::Smooth;
    h.dim_ = dim;
    h.c_ = lipschitz_c;
    h.beta_ = beta;
    h.expr_ = std::make_shared<IndexExpression>(parse_index_expression(source, IndexKind::Smooth, dim));
    h.bounds_ = index_bounds(h, region, spacing);
    return h;
}

IndexField IndexField::star(std::string_view source, int dim, double lipschitz_c, double beta, double spacing) {
    check_lipschitz(lipschitz_c, beta);
    IndexField h;
    h.kind_ = IndexKind::Star;
    h.dim_ = dim;
    h.c_ = lipschitz_c;
    h.beta_ = beta;
    h.expr_ = std::make_shared<IndexExpression>(parse_index_expression(source, IndexKind::Star, dim));

    std::mt19937_64 gen(0x5eedu);
    std::normal_distribution<double> g;
    for (int i = 0; i < 1000; ++i) {
        Point u(dim);
        for (int k = 0; k < dim; ++k) u[k] = g(gen);
        if (norm(u) == 0) continue;
        double a = h(u), b = h(-1.0 * u);
        if (std::abs(a - b) >= 1e-12) throw ConfigError("star index must be even: h(u) != h(-u) at u=" + u.str());
    }
    h.bounds_ = index_bounds(h, Box(Point(dim), Point(dim)), spacing);
    return h;
}

std::string IndexField::source() const {
    if (kind_ == IndexKind::Constant) return num_str(m_);
    return expr_->source();
}

double IndexField::operator()(const Point& xi) const {
    if (kind_ == IndexKind::Constant) return m_;
    if (xi.dim != dim_) throw UsageError("point dimension does not match the index field");
    if (kind_ == IndexKind::Star) {
        double n = norm(xi);
        if (n == 0) throw DomainError("star index is singular at the origin");
        return expr_->evaluate((1.0 / n) * xi);
    }
    return expr_->evaluate(xi);
}

double eval_index(const IndexField& h, const Point& xi) { return h(xi); }

IndexBounds index_bounds(const IndexField& h, const Box& window, double spacing) {
    IndexBounds b;
    if (h.is_constant()) {
        double m = h.constant_value();
        b = {m, m, m, m, 0.0};
        return b;
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto visit = [&](const Point& p) {
        double v = h(p);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    int d = h.dim();
    double delta = 0.0;
    if (h.kind() == IndexKind::Star) {
        if (d == 1) {
            visit(Point{1.0});
            visit(Point{-1.0});
        } else if (d == 2) {
            int n = spacing > 0 ? static_cast<int>(std::ceil(2 * std::numbers::pi / spacing)) : 1 << 16;
            delta = 2 * std::numbers::pi / n;
            for (int i = 0; i < n; ++i) {
                double a = delta * i;
                visit(Point{std::cos(a), std::sin(a)});
            }
        } else {
            // lattice on the surface of [-1,1]^3, projected radially
            int n = spacing > 0 ? static_cast<int>(std::ceil(2.0 / spacing)) + 1 : 181;
            delta = 2.0 / (n - 1);
            for (int face = 0; face < 3; ++face)
                for (int s = -1; s <= 1; s += 2)
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < n; ++j) {
                            Point p(3);
                            p[face] = s;
                            p[(face + 1) % 3] = -1.0 + delta * i;
                            p[(face + 2) % 3] = -1.0 + delta * j;
                            visit(p);
                        }
        }
    } else {
        if (window.dim() != d) throw UsageError("window dimension does not match the index field");
        double ext = 0.0;
        for (int k = 0; k < d; ++k) ext = std::max(ext, window.extent(k));
        if (!(ext > 0)) throw UsageError("index_bounds needs a non-degenerate window");
        if (spacing > 0) delta = spacing;
        else {
            double per = std::floor(std::pow(262144.0, 1.0 / d));
            delta = ext / (per - 1);
        }
        std::array<int, kMaxDim> cnt{1, 1, 1};
        for (int k = 0; k < d; ++k) cnt[k] = static_cast<int>(std::ceil(window.extent(k) / delta)) + 1;
        Point p(d);
        for (int i = 0; i < cnt[0]; ++i)
            for (int j = 0; j < cnt[1]; ++j)
                for (int l = 0; l < cnt[2]; ++l) {
                    int idx[3] = {i, j, l};
                    for (int k = 0; k < d; ++k) p[k] = std::min(window.lo[k] + delta * idx[k], window.hi[k]);
                    visit(p);
                }
    }
    double widen = delta > 0 ? h.lipschitz_c() * std::pow(delta, h.beta()) : 0.0;
    b.grid_min = lo;
    b.grid_max = hi;
    b.lo = lo - widen;
    b.hi = hi + widen;
    b.delta = delta;
    if (!(b.lo > 0.0 && b.hi < 0.5))
        throw ConfigError("index bracket [" + num_str(b.lo) + ", " + num_str(b.hi) + "] leaves (0, 1/2)");
    return b;
}

// ---------------------------------------------------------------- line infimum

LineMinimum min_along_line(const IndexField& h, const Point& y0, const Direction& alpha, double t_max, int cells) {
    if (!(t_max > 0)) throw UsageError("t_max must be positive");
    if (cells < 3) throw UsageError("need at least 3 grid cells");
    LineMinimum out;
    if (h.is_constant()) {
        out.m_line = h.constant_value();
        out.minimizer_measure = 2.0 * t_max;
        return out;
    }
    const double inf = std::numeric_limits<double>::infinity();
    auto f = [&](double t) {
        Point p = y0 + t * alpha.v;
        if (h.kind() == IndexKind::Star && norm2(p) == 0) return inf;
        return h(p);
    };
    double w = 2.0 * t_max / cells;
    std::vector<double> t(cells), v(cells);
    for (int i = 0; i < cells; ++i) {
        t[i] = -t_max + (i + 0.5) * w;
        v[i] = f(t[i]);
    }
    double best = *std::min_element(v.begin(), v.end());
    double best_t = t[std::min_element(v.begin(), v.end()) - v.begin()];

    // local minima, plateaus collapsed to their leftmost cell, refined left to right
    std::vector<int> cand;
    for (int i = 0; i < cells;) {
        int j = i;
        while (j + 1 < cells && v[j + 1] == v[i]) ++j;
        bool left_ok = i == 0 || v[i - 1] > v[i];
        bool right_ok = j == cells - 1 || v[j + 1] > v[i];
        if (left_ok && right_ok) cand.push_back(i);
        i = j + 1;
    }
    std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return v[a] < v[b]; });
    if (cand.size() > 64) cand.resize(64);
    std::sort(cand.begin(), cand.end());
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i : cand) {
        double a = i > 0 ? t[i - 1] : -t_max;
        double b = i < cells - 1 ? t[i + 1] : t_max;
        double x1 = b - g * (b - a), x2 = a + g * (b - a);
        double f1 = f(x1), f2 = f(x2);
        while (b - a > 1e-8) {
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = f(x2);
            }
        }
        double tm = 0.5 * (a + b);
        for (double tc : {tm, a, b, x1, x2}) {
            double fc = f(tc);
            if (fc < best) {
                best = fc;
                best_t = tc;
            }
        }
    }
    std::size_t hits = 0;
    for (double x : v)
        if (x <= best + 1e-6) ++hits;
    out.m_line = best;
    out.t_at_min = best_t;
    out.minimizer_measure = hits == static_cast<std::size_t>(cells) ? 2.0 * t_max : 2.0 * t_max * hits / cells;
    return out;
}

}  // namespace microball
