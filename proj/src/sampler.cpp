#include "microball/sampler.hpp"

#include <algorithm>
#include <boost/random/poisson_distribution.hpp>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include "microball/errors.hpp"
#include "microball/rng.hpp"

namespace microball {

namespace {

constexpr std::uint64_t kKeyTag = 0x6d6963726f62616cULL;

enum class Mode : std::uint64_t { Window = 1, Homogenized = 2, Probes = 3, Lines = 4 };

Philox4x64::Key make_key(std::uint64_t seed, Mode mode, double eps) {
    std::uint64_t e = 0;
    if (eps != 1.0) std::memcpy(&e, &eps, sizeof e);
    return {seed, kKeyTag ^ (static_cast<std::uint64_t>(mode) << 56) ^ e};
}

std::uint64_t poisson_count(const Philox4x64::Key& key, std::uint64_t replica, std::uint64_t slot, double mean) {
    if (!(mean > 0)) return 0;
    CounterStream s(key, {replica, slot, ~0ULL, 0});
    boost::random::poisson_distribution<long long, double> P(mean);
    return static_cast<std::uint64_t>(P(s));
}

// Inverse CDF of r^a restricted to (lo, hi].
struct RadiusLaw {
    double lo, hi, b, lob, span;
    RadiusLaw(double lo_, double hi_, double a) : lo(lo_), hi(hi_), b(a + 1.0) {
        lob = std::pow(lo, b);
        span = std::pow(hi, b) - lob;
    }
    double operator()(double u) const {  // u in (0, 1]
        double r = std::pow(lob + u * span, 1.0 / b);
        if (r <= lo) r = std::nextafter(lo, hi);
        if (r > hi) r = hi;
        return r;
    }
};

double power_integral(double lo, double hi, double a) {
    double b = a + 1.0;
    if (b == 0.0) return std::log(hi / lo);
    return (std::pow(hi, b) - std::pow(lo, b)) / b;
}

struct Thinner {
    const IndexField& h;
    double h_env, eps;
    bool active;
    // Returns the acceptance probability, or -1 to reject outright.
    double operator()(const Point& xi, double r) const {
        if (!active) return 1.0;
        if (h.kind() == IndexKind::Star && norm2(xi) == 0) return -1.0;
        double v = h(xi);
        if (v < h_env - 1e-12)
            throw ConfigError("index value " + std::to_string(v) + " below the certified envelope " +
                              std::to_string(h_env) + " at " + xi.str() + "; declared Lipschitz constant too small");
        return std::pow(eps * r, 2.0 * (v - h_env));
    }
};

}  // namespace

void SimulationConfig::validate() const {
    if (dim < 1 || dim > kMaxDim) throw ConfigError("dimension must be 1, 2 or 3");
    if (window.dim() != dim) throw ConfigError("window dimension does not match d");
    if (!(window.volume() > 0)) throw ConfigError("window volume must be positive");
    if (!(r_min > 0)) throw ConfigError("r_min must be positive");
    if (!(r_min < r_max)) throw UsageError("r_min must be smaller than r_max");
    if (replicas < 1) throw ConfigError("replicas must be positive");
    if (!index.is_constant() && index.dim() != dim) throw ConfigError("index field dimension does not match d");
}

double truncation_bound(int dim, double h_lo, double r_min, double epsilon) {
    double b = unit_ball_volume(dim) / h_lo * std::pow(r_min, 2.0 * h_lo);
    if (epsilon != 1.0) b *= std::pow(epsilon, -dim + 2.0 * h_lo);
    return b;
}

ShellPlan plan_shells(const SimulationConfig& cfg, double epsilon) {
    if (!(cfg.r_min < cfg.r_max) && epsilon == 1.0) throw UsageError("r_min must be smaller than r_max");
    if (!(epsilon > 0 && epsilon <= 1.0)) throw UsageError("epsilon must lie in (0, 1]");
    if (cfg.dim < 1 || cfg.dim > kMaxDim || cfg.window.dim() != cfg.dim) throw ConfigError("bad dimension");
    ShellPlan plan;
    plan.epsilon = epsilon;
    plan.r_top = epsilon < 1.0 ? 1.0 / epsilon : cfg.r_max;
    if (!(cfg.r_min < plan.r_top)) throw UsageError("r_min must be smaller than the top radius");

    if (cfg.index.is_constant()) {
        plan.h_env = plan.h_lo = plan.h_hi = cfg.index.constant_value();
    } else {
        IndexBounds b = cfg.index.kind() == IndexKind::Star
                            ? cfg.index.bounds()
                            : index_bounds(cfg.index, cfg.window.dilated(plan.r_top), cfg.grid_spacing);
        plan.h_env = b.lo;
        plan.h_lo = b.lo;
        plan.h_hi = b.hi;
    }
    double a = -cfg.dim - 1.0 + 2.0 * plan.h_env;
    double density = epsilon < 1.0 ? std::pow(epsilon, -cfg.dim + 2.0 * plan.h_env) : 1.0;

    // dyadic shells anchored at 1: (2^{j-1}, 2^j] clipped to (r_min, r_top]
    int e;
    std::frexp(plan.r_top, &e);  // r_top = f 2^e, f in [0.5, 1)
    int j = (std::ldexp(1.0, e - 1) == plan.r_top) ? e - 1 : e;
    int id = 0;
    for (;; --j) {
        double hi = std::min(std::ldexp(1.0, j), plan.r_top);
        double lo = std::max(std::ldexp(1.0, j - 1), cfg.r_min);
        if (lo >= hi) {
            if (lo >= plan.r_top || hi <= cfg.r_min) break;
            continue;
        }
        Shell s;
        s.id = id++;
        s.r_lo = lo;
        s.r_hi = hi;
        s.margin = hi;
        s.region = cfg.window.dilated(hi);
        s.exponent = a;
        s.expected = s.region.volume() * power_integral(lo, hi, a) * density;
        plan.total_expected += s.expected;
        plan.shells.push_back(s);
        if (lo == cfg.r_min) break;
    }
    return plan;
}

static Realization sample_window(const SimulationConfig& cfg, const ShellPlan& plan, std::uint64_t replica, Mode mode) {
    if (plan.total_expected > kMaxExpectedBalls)
        throw ResourceError("expected ball count " + std::to_string(plan.total_expected) +
                            " exceeds the 1e9 guard; increase r_min or shrink the window");
    if (replica >= static_cast<std::uint64_t>(cfg.replicas)) throw UsageError("replica index out of range");
    Realization out;
    out.dim = cfg.dim;
    out.window = cfg.window;
    out.r_min = cfg.r_min;
    out.r_top = plan.r_top;
    out.epsilon = plan.epsilon;
    out.seed = cfg.seed;
    out.replica = replica;
    out.truncation_bound = truncation_bound(cfg.dim, plan.h_lo, cfg.r_min, plan.epsilon);
    out.shells = plan.shells;
    out.balls.reserve(static_cast<std::size_t>(plan.total_expected * 1.05 + 16));

    Philox4x64::Key key = make_key(cfg.seed, mode, plan.epsilon);
    Thinner thin{cfg.index, plan.h_env, plan.epsilon, !cfg.index.is_constant()};
    const int d = cfg.dim;
    for (const Shell& s : plan.shells) {
        std::uint64_t slot = static_cast<std::uint64_t>(s.id);
        std::uint64_t n = poisson_count(key, replica, slot, s.expected);
        RadiusLaw law(s.r_lo, s.r_hi, s.exponent);
        for (std::uint64_t i = 0; i < n; ++i) {
            auto u = Philox4x64::generate({replica, slot, i, 0}, key);
            BallEvent b;
            b.center = Point(d);
            for (int k = 0; k < d; ++k) b.center[k] = s.region.lo[k] + u01(u[k]) * s.region.extent(k);
            b.radius = law(u01_open_low(u[3]));
            b.shell = s.id;
            if (thin.active) {
                double p = thin(b.center, b.radius);
                if (p < 1.0) {
                    double v = u01(Philox4x64::generate({replica, slot, i, 1}, key)[0]);
                    if (!(v < p)) continue;
                }
            }
            out.balls.push_back(b);
        }
    }
    return out;
}

Realization sample_realization(const SimulationConfig& cfg, std::uint64_t replica) {
    cfg.validate();
    return sample_window(cfg, plan_shells(cfg), replica, Mode::Window);
}

Realization sample_homogenized(const SimulationConfig& cfg, double epsilon, std::uint64_t replica) {
    cfg.validate();
    ShellPlan plan = plan_shells(cfg, epsilon);
    return sample_window(cfg, plan, replica, epsilon == 1.0 ? Mode::Window : Mode::Homogenized);
}

namespace {

// Shared loop of the restricted samplers. For target j and shell s, propose(j, s,
// u) maps four uniforms to a center, hits(j, c, r) tests whether the ball meets
// target j; a proposal is kept iff it meets j and no earlier target.
template <class Propose, class Hits>
void sample_restricted(Realization& out, const SimulationConfig& cfg, const ShellPlan& plan, Mode mode,
                       std::size_t targets, const std::vector<double>& expected, Propose&& propose,
                       Hits&& hits) {
    Philox4x64::Key key = make_key(cfg.seed, mode, plan.epsilon);
    Thinner thin{cfg.index, plan.h_env, plan.epsilon, !cfg.index.is_constant()};
    const std::uint64_t replica = out.replica;
    for (std::size_t si = 0; si < plan.shells.size(); ++si) {
        const Shell& s = plan.shells[si];
        RadiusLaw law(s.r_lo, s.r_hi, s.exponent);
        for (std::size_t j = 0; j < targets; ++j) {
            std::uint64_t slot = static_cast<std::uint64_t>(s.id) | (static_cast<std::uint64_t>(j + 1) << 32);
            std::uint64_t n = poisson_count(key, replica, slot, expected[si]);
            for (std::uint64_t i = 0; i < n; ++i) {
                auto u = Philox4x64::generate({replica, slot, i, 0}, key);
                BallEvent b;
                b.center = propose(j, s, u);
                b.radius = law(u01_open_low(u[3]));
                b.shell = s.id;
                if (!hits(j, b.center, b.radius)) continue;
                bool earlier = false;
                for (std::size_t q = 0; q < j && !earlier; ++q) earlier = hits(q, b.center, b.radius);
                if (earlier) continue;
                if (thin.active) {
                    double p = thin(b.center, b.radius);
                    if (p < 1.0) {
                        double v = u01(Philox4x64::generate({replica, slot, i, 1}, key)[0]);
                        if (!(v < p)) continue;
                    }
                }
                out.balls.push_back(b);
            }
        }
    }
}

Realization restricted_header(const SimulationConfig& cfg, const ShellPlan& plan, std::uint64_t replica) {
    if (replica >= static_cast<std::uint64_t>(cfg.replicas)) throw UsageError("replica index out of range");
    Realization out;
    out.dim = cfg.dim;
    out.window = cfg.window;
    out.r_min = cfg.r_min;
    out.r_top = plan.r_top;
    out.epsilon = plan.epsilon;
    out.seed = cfg.seed;
    out.replica = replica;
    out.truncation_bound = truncation_bound(cfg.dim, plan.h_lo, cfg.r_min, plan.epsilon);
    out.shells = plan.shells;
    return out;
}

}  // namespace

Realization sample_at_probes(const SimulationConfig& cfg, const std::vector<Point>& probes, std::uint64_t replica,
                             double epsilon) {
    cfg.validate();
    if (probes.empty()) throw UsageError("probe set is empty");
    for (const Point& p : probes)
        if (p.dim != cfg.dim) throw UsageError("probe dimension does not match d");
    ShellPlan plan = plan_shells(cfg, epsilon);
    const int d = cfg.dim;
    const double density = epsilon < 1.0 ? std::pow(epsilon, -d + 2.0 * plan.h_env) : 1.0;
    std::vector<double> expected;
    double total = 0;
    for (const Shell& s : plan.shells) {
        expected.push_back(std::pow(2.0 * s.r_hi, d) * power_integral(s.r_lo, s.r_hi, s.exponent) * density);
        total += expected.back() * probes.size();
    }
    if (total > kMaxExpectedBalls) throw ResourceError("expected proposal count exceeds the 1e9 guard");

    Realization out = restricted_header(cfg, plan, replica);
    out.probes = probes;
    sample_restricted(
        out, cfg, plan, epsilon < 1.0 ? Mode::Homogenized : Mode::Probes, probes.size(), expected,
        [&](std::size_t j, const Shell& s, const Philox4x64::Counter& u) {
            Point c(d);
            for (int k = 0; k < d; ++k) c[k] = probes[j][k] + (2.0 * u01(u[k]) - 1.0) * s.r_hi;
            return c;
        },
        [&](std::size_t j, const Point& c, double r) { return dist2(c, probes[j]) < r * r; });
    return out;
}

Realization sample_along_lines(const SimulationConfig& cfg, const Direction& alpha, const std::vector<Point>& feet,
                               double half_length, std::uint64_t replica) {
    cfg.validate();
    if (cfg.dim < 2) throw UsageError("line-restricted sampling needs d >= 2");
    if (alpha.dim() != cfg.dim) throw UsageError("direction dimension does not match d");
    if (feet.empty()) throw UsageError("line set is empty");
    if (!(half_length > 0)) throw UsageError("segment half length must be positive");
    for (const Point& y : feet)
        if (y.dim != cfg.dim) throw UsageError("line foot dimension does not match d");
    ShellPlan plan = plan_shells(cfg);
    const int d = cfg.dim;
    Hyperplane frame(alpha);
    std::vector<double> expected;
    double total = 0;
    for (const Shell& s : plan.shells) {
        expected.push_back(2.0 * (half_length + s.r_hi) * std::pow(2.0 * s.r_hi, d - 1) *
                           power_integral(s.r_lo, s.r_hi, s.exponent));
        total += expected.back() * feet.size();
    }
    if (total > kMaxExpectedBalls) throw ResourceError("expected proposal count exceeds the 1e9 guard");

    Realization out = restricted_header(cfg, plan, replica);
    out.line_feet = feet;
    out.line_alpha = alpha.v;
    out.line_half_length = half_length;
    sample_restricted(
        out, cfg, plan, Mode::Lines, feet.size(), expected,
        [&](std::size_t j, const Shell& s, const Philox4x64::Counter& u) {
            Point c = feet[j] + ((2.0 * u01(u[0]) - 1.0) * (half_length + s.r_hi)) * alpha.v;
            for (int k = 0; k + 1 < d; ++k) c = c + ((2.0 * u01(u[k + 1]) - 1.0) * s.r_hi) * frame.basis(k);
            return c;
        },
        [&](std::size_t j, const Point& c, double r) {
            double t = std::clamp(dot(c - feet[j], alpha.v), -half_length, half_length);
            return dist2(c, feet[j] + t * alpha.v) < r * r;
        });
    return out;
}

// ---------------------------------------------------------------- persistence

static void put(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

void write_realization(std::ostream& os, const Realization& r) {
    os << "# microball-realization config_hash=" << (r.config_hash.empty() ? "-" : r.config_hash)
       << " seed=" << r.seed << " replica=" << r.replica << " dim=" << r.dim << " r_min=";
    put(os, r.r_min);
    os << " r_top=";
    put(os, r.r_top);
    os << " epsilon=";
    put(os, r.epsilon);
    os << " truncation_bound=";
    put(os, r.truncation_bound);
    os << " window=";
    for (int k = 0; k < r.dim; ++k) {
        if (k) os << ',';
        put(os, r.window.lo[k]);
        os << ':';
        put(os, r.window.hi[k]);
    }
    os << " probes=" << r.probes.size() << " lines=" << r.line_feet.size();
    if (!r.line_feet.empty()) {
        os << " alpha=";
        for (int k = 0; k < r.dim; ++k) {
            if (k) os << ',';
            put(os, r.line_alpha[k]);
        }
        os << " half_length=";
        put(os, r.line_half_length);
    }
    os << '\n';
    auto points = [&](const char* tag, const std::vector<Point>& ps) {
        for (const Point& p : ps) {
            os << tag;
            for (int k = 0; k < r.dim; ++k) {
                os << '\t';
                put(os, p[k]);
            }
            os << '\n';
        }
    };
    points("probe", r.probes);
    points("line", r.line_feet);
    for (const BallEvent& b : r.balls) {
        os << b.shell << '\t';
        put(os, b.radius);
        for (int k = 0; k < r.dim; ++k) {
            os << '\t';
            put(os, b.center[k]);
        }
        os << '\n';
    }
}

Realization read_realization(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# microball-realization", 0) != 0)
        throw UsageError("not a realization file (missing header)");
    Realization r;
    std::istringstream hs(line.substr(2));
    std::string tok;
    std::size_t nprobes = 0, nlines = 0;
    std::string window, alpha;
    while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "config_hash") r.config_hash = v == "-" ? "" : v;
        else if (k == "seed") r.seed = std::stoull(v);
        else if (k == "replica") r.replica = std::stoull(v);
        else if (k == "dim") r.dim = std::stoi(v);
        else if (k == "r_min") r.r_min = std::strtod(v.c_str(), nullptr);
        else if (k == "r_top") r.r_top = std::strtod(v.c_str(), nullptr);
        else if (k == "epsilon") r.epsilon = std::strtod(v.c_str(), nullptr);
        else if (k == "truncation_bound") r.truncation_bound = std::strtod(v.c_str(), nullptr);
        else if (k == "window") window = v;
        else if (k == "probes") nprobes = std::stoul(v);
        else if (k == "lines") nlines = std::stoul(v);
        else if (k == "alpha") alpha = v;
        else if (k == "half_length") r.line_half_length = std::strtod(v.c_str(), nullptr);
    }
    if (r.dim < 1 || r.dim > kMaxDim) throw UsageError("realization header has a bad dimension");
    Point lo(r.dim), hi(r.dim);
    std::istringstream ws(window);
    for (int k = 0; k < r.dim; ++k) {
        std::string part;
        if (!std::getline(ws, part, ',')) throw UsageError("realization header has a bad window");
        auto c = part.find(':');
        lo[k] = std::strtod(part.substr(0, c).c_str(), nullptr);
        hi[k] = std::strtod(part.substr(c + 1).c_str(), nullptr);
    }
    r.window = Box(lo, hi);
    auto read_points = [&](std::size_t n, std::vector<Point>& dst) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::getline(is, line)) throw UsageError("truncated point list in realization file");
            const char* s = line.c_str();
            while (*s && *s != '\t') ++s;
            char* end = nullptr;
            Point p(r.dim);
            for (int k = 0; k < r.dim; ++k) {
                p[k] = std::strtod(s, &end);
                s = end;
            }
            dst.push_back(p);
        }
    };
    read_points(nprobes, r.probes);
    read_points(nlines, r.line_feet);
    if (nlines) {
        r.line_alpha = Point(r.dim);
        std::istringstream as(alpha);
        std::string part;
        for (int k = 0; k < r.dim && std::getline(as, part, ','); ++k) r.line_alpha[k] = std::strtod(part.c_str(), nullptr);
    }
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const char* s = line.c_str();
        char* end = nullptr;
        BallEvent b;
        b.shell = static_cast<int>(std::strtol(s, &end, 10));
        b.radius = std::strtod(end, &end);
        b.center = Point(r.dim);
        for (int k = 0; k < r.dim; ++k) b.center[k] = std::strtod(end, &end);
        if (end == s) throw UsageError("malformed ball record: " + line);
        r.balls.push_back(b);
    }
    // rebuild shell geometry from the observed ids
    int max_shell = -1;
    for (const BallEvent& b : r.balls) max_shell = std::max(max_shell, b.shell);
    SimulationConfig tmp;
    tmp.dim = r.dim;
    tmp.window = r.window;
    tmp.r_min = r.r_min;
    tmp.r_max = r.epsilon < 1.0 ? 1.0 : r.r_top;
    ShellPlan plan = plan_shells(tmp, r.epsilon);
    r.shells = plan.shells;
    return r;
}

}  // namespace microball
