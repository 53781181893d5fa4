#include "microball/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "microball/errors.hpp"
#include "microball/numeric.hpp"

namespace microball {

using json = nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("missing key \"" + std::string(key) + "\" in " + where);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for \"" + std::string(key) + "\" in " + where + ": " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

Point to_point(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || j.size() > static_cast<std::size_t>(kMaxDim))
        throw ConfigError(where + " must be an array of 1 to 3 numbers");
    Point p(static_cast<int>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number()) throw ConfigError(where + " must contain numbers");
        p[static_cast<int>(k)] = j[k].get<double>();
    }
    return p;
}

WindowFunction window_from(const json& j) {
    std::string kind = get<std::string>(j, "kind", "probes.window");
    only_keys(j, "probes.window", {"kind", kind == "gaussian" ? "sigma" : "L"});
    if (kind == "gaussian") return WindowFunction::gaussian(get<double>(j, "sigma", "probes.window"));
    if (kind == "rectangular") return WindowFunction::rectangular(get<double>(j, "L", "probes.window"));
    if (kind == "hann") return WindowFunction::hann(get<double>(j, "L", "probes.window"));
    throw ConfigError("unknown window kind \"" + kind + "\"");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

WindowFunction parse_window_spec(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("window spec is not valid JSON: ") + e.what());
    }
    return window_from(j);
}

ExperimentConfig parse_experiment_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    only_keys(root, "config", {"model", "sampling", "probes", "analysis", "outputs"});
    ExperimentConfig c;

    const json& model = root.contains("model") ? root["model"] : throw ConfigError("missing section \"model\"");
    only_keys(model, "model", {"dimension", "window", "index", "r_min", "r_max"});
    c.dim = get<int>(model, "dimension", "model");
    if (c.dim < 1 || c.dim > kMaxDim) throw ConfigError("model.dimension must be 1, 2 or 3");
    {
        const json& w = model.contains("window") ? model["window"] : throw ConfigError("missing key \"window\" in model");
        only_keys(w, "model.window", {"lo", "hi"});
        Point lo = to_point(w.at("lo"), "model.window.lo"), hi = to_point(w.at("hi"), "model.window.hi");
        if (lo.dim != c.dim || hi.dim != c.dim) throw ConfigError("model.window corners need d coordinates");
        c.window = Box(lo, hi);
    }
    {
        const json& ix = model.contains("index") ? model["index"] : throw ConfigError("missing key \"index\" in model");
        only_keys(ix, "model.index", {"kind", "value", "expression", "C", "beta"});
        c.index_kind = get<std::string>(ix, "kind", "model.index");
        if (c.index_kind == "constant") {
            c.index_value = get<double>(ix, "value", "model.index");
        } else if (c.index_kind == "smooth" || c.index_kind == "star") {
            c.index_expression = get<std::string>(ix, "expression", "model.index");
            c.lipschitz_c = get<double>(ix, "C", "model.index");
            c.beta = get_or<double>(ix, "beta", 1.0, "model.index");
        } else {
            throw ConfigError("model.index.kind must be constant, smooth or star");
        }
    }
    c.r_min = get_or<double>(model, "r_min", c.r_min, "model");
    c.r_max = get_or<double>(model, "r_max", c.r_max, "model");

    if (root.contains("sampling")) {
        const json& s = root["sampling"];
        only_keys(s, "sampling", {"seed", "replicas", "mode"});
        c.seed = get_or<std::uint64_t>(s, "seed", c.seed, "sampling");
        c.replicas = get_or<int>(s, "replicas", c.replicas, "sampling");
        c.mode = get_or<std::string>(s, "mode", c.mode, "sampling");
        if (c.mode != "window" && c.mode != "probes" && c.mode != "lines")
            throw ConfigError("sampling.mode must be window, probes or lines");
        if (c.replicas < 1) throw ConfigError("sampling.replicas must be positive");
    }

    if (root.contains("probes")) {
        const json& p = root["probes"];
        only_keys(p, "probes", {"base_points", "lags", "directions", "window", "grid"});
        if (p.contains("base_points"))
            for (const json& b : p["base_points"]) c.base_points.push_back(to_point(b, "probes.base_points"));
        if (p.contains("lags")) {
            const json& l = p["lags"];
            if (l.is_array()) {
                for (const json& b : l) c.lags.push_back(to_point(b, "probes.lags"));
            } else {
                only_keys(l, "probes.lags", {"direction", "exponents"});
                Point dir = to_point(l.at("direction"), "probes.lags.direction");
                auto ex = get<std::vector<int>>(l, "exponents", "probes.lags");
                if (ex.size() != 2 || ex[0] > ex[1]) throw ConfigError("probes.lags.exponents must be [lo, hi]");
                for (int k = ex[0]; k <= ex[1]; ++k) c.lags.push_back(std::ldexp(1.0, k) * dir);
            }
        }
        if (p.contains("directions"))
            for (const json& d : p["directions"]) {
                try {
                    c.directions.push_back(Direction(to_point(d, "probes.directions")));
                } catch (const UsageError& e) {
                    throw ConfigError(std::string("probes.directions: ") + e.what());
                }
            }
        if (p.contains("window")) c.rho = window_from(p["window"]);
        if (p.contains("grid")) c.grid = get<std::vector<int>>(p, "grid", "probes");
    }
    for (const Point& q : c.base_points)
        if (q.dim != c.dim) throw ConfigError("probes.base_points need d coordinates");
    for (const Point& q : c.lags)
        if (q.dim != c.dim) throw ConfigError("probes.lags need d coordinates");
    for (const Direction& q : c.directions)
        if (q.dim() != c.dim) throw ConfigError("probes.directions need d coordinates");

    if (root.contains("analysis")) {
        const json& a = root["analysis"];
        only_keys(a, "analysis", {"lag_range", "epsilons", "target"});
        if (a.contains("lag_range")) {
            auto r = get<std::vector<double>>(a, "lag_range", "analysis");
            if (r.size() != 2 || !(r[0] > 0 && r[0] < r[1])) throw ConfigError("analysis.lag_range must be [lo, hi]");
            c.lag_range = {r[0], r[1]};
        }
        c.epsilons = get_or<std::vector<double>>(a, "epsilons", {}, "analysis");
        c.target = get_or<std::string>(a, "target", c.target, "analysis");
        if (c.target != "field" && c.target != "xray") throw ConfigError("analysis.target must be field or xray");
    }

    if (root.contains("outputs")) {
        const json& o = root["outputs"];
        only_keys(o, "outputs", {"directory", "formats"});
        c.out_dir = get_or<std::string>(o, "directory", c.out_dir, "outputs");
        c.formats = get_or<std::vector<std::string>>(o, "formats", c.formats, "outputs");
        for (const auto& f : c.formats)
            if (f != "csv" && f != "svg" && f != "pgm" && f != "realization")
                throw ConfigError("unknown output format \"" + f + "\"");
    }

    c.canonical = root.dump();
    c.hash = hex64(fnv1a64(c.canonical));
    c.simulation();  // validates the model before anything runs
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    ExperimentConfig c = parse_experiment_config(ss.str());
    if (const char* env = std::getenv("MICROBALL_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end == env || *end) throw UsageError("MICROBALL_SEED must be a non-negative integer");
        c.seed = v;
        c.seed_from_env = true;
    }
    return c;
}

SimulationConfig ExperimentConfig::simulation() const {
    SimulationConfig s;
    s.dim = dim;
    s.window = window;
    s.r_min = r_min;
    s.r_max = r_max;
    s.seed = seed;
    s.replicas = replicas;
    if (index_kind == "constant")
        s.index = IndexField::constant(index_value);
    else if (index_kind == "smooth")
        s.index = IndexField::smooth(index_expression, dim, lipschitz_c, beta, window.dilated(r_max));
    else
        s.index = IndexField::star(index_expression, dim, lipschitz_c, beta);
    s.validate();
    return s;
}

bool ExperimentConfig::wants(const std::string& format) const {
    return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::string output_header(const ExperimentConfig& cfg) {
    return "# microball config_hash=" + cfg.hash + " seed=" + std::to_string(cfg.seed) +
           " seed_source=" + (cfg.seed_from_env ? "MICROBALL_SEED" : "config") + "\n";
}

// ---------------------------------------------------------------- plots

std::string plot_svg(const std::vector<PlotSeries>& series, const std::optional<PlotFit>& fit, const std::string& title) {
    if (series.empty()) throw UsageError("plot needs at least one series");
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    double sum_lx = 0;
    int count = 0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size() || s.x.size() < 2) throw UsageError("plot series need at least 2 points");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0 && s.y[i] > 0)) throw UsageError("log-log plot needs positive coordinates");
            double lx = std::log10(s.x[i]), ly = std::log10(s.y[i]);
            x0 = std::min(x0, lx);
            x1 = std::max(x1, lx);
            y0 = std::min(y0, ly);
            y1 = std::max(y1, ly);
            sum_lx += lx;
            ++count;
        }
    }
    if (!(x1 > x0)) throw UsageError("plot series are degenerate (single abscissa)");
    if (!(y1 > y0)) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double W = 640, H = 480, M = 60;
    auto X = [&](double lx) { return M + (lx - x0) / (x1 - x0) * (W - 2 * M); };
    auto Y = [&](double ly) { return H - M - (ly - y0) / (y1 - y0) * (H - 2 * M); };
    auto f = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<rect x=\"" << M << "\" y=\"" << M << "\" width=\"" << W - 2 * M << "\" height=\"" << H - 2 * M
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (!title.empty()) os << "<text x=\"" << M << "\" y=\"" << M / 2 << "\" font-size=\"14\">" << title << "</text>\n";
    os << "<text x=\"" << M << "\" y=\"" << H - M / 3 << "\" font-size=\"11\">log10 x: " << f(x0) << " .. " << f(x1)
       << "   log10 y: " << f(y0) << " .. " << f(y1) << "</text>\n";
    if (fit) {
        // slope band pivoting at the mean log abscissa
        const double pivot = sum_lx / count;
        const double ln10 = std::log(10.0);
        auto line = [&](double slope, double lx) {
            double ly_pivot = (fit->intercept + fit->slope * pivot * ln10) / ln10;
            return ly_pivot + slope * (lx - pivot);
        };
        os << "<polygon class=\"band\" fill=\"#cfe0f5\" stroke=\"none\" points=\"";
        os << f(X(x0)) << ',' << f(Y(line(fit->ci95.first, x0))) << ' ' << f(X(x1)) << ','
           << f(Y(line(fit->ci95.first, x1))) << ' ' << f(X(x1)) << ',' << f(Y(line(fit->ci95.second, x1))) << ' '
           << f(X(x0)) << ',' << f(Y(line(fit->ci95.second, x0))) << "\"/>\n";
        os << "<polyline class=\"fit\" fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"2\" points=\"" << f(X(x0)) << ','
           << f(Y(line(fit->slope, x0))) << ' ' << f(X(x1)) << ',' << f(Y(line(fit->slope, x1))) << "\"/>\n";
    }
    static const char* colors[] = {"#c0392b", "#27ae60", "#8e44ad", "#d35400", "#2c3e50"};
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* col = colors[k % 5];
        os << "<polyline class=\"series\" fill=\"none\" stroke=\"" << col << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << (i ? " " : "") << f(X(std::log10(s.x[i]))) << ',' << f(Y(std::log10(s.y[i])));
        os << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            os << "<circle cx=\"" << f(X(std::log10(s.x[i]))) << "\" cy=\"" << f(Y(std::log10(s.y[i])))
               << "\" r=\"3\" fill=\"" << col << "\"/>\n";
        if (!s.label.empty())
            os << "<text x=\"" << W - M - 150 << "\" y=\"" << M + 16 * (k + 1) << "\" font-size=\"12\" fill=\"" << col
               << "\">" << s.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void emit_plot(const std::vector<PlotSeries>& series, const std::string& path, const std::optional<PlotFit>& fit,
               const std::string& title) {
    std::string svg = plot_svg(series, fit, title);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    out << svg;
}

}  // namespace microball
