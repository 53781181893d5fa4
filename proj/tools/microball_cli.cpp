// microball: batch front-end over the simulation, transform, estimation and
// oracle modules. Run `microball --help` for the subcommands.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "microball/errors.hpp"
#include "microball/experiments.hpp"
#include "microball/field.hpp"
#include "microball/io.hpp"
#include "microball/numeric.hpp"
#include "microball/oracle.hpp"
#include "microball/parallel.hpp"
#include "microball/stats.hpp"
#include "microball/xray.hpp"

namespace fs = std::filesystem;
using namespace microball;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2, kExitEstimation = 3, kExitAcceptance = 4;

struct Flags {
    std::string config;
    int jobs = 1;
    std::string out;
    std::vector<std::string> formats;
};

struct Context {
    ExperimentConfig cfg;
    fs::path out;
    std::string header;
};

Context load(const Flags& f) {
    if (f.config.empty()) throw UsageError("--config is required");
    if (!fs::exists(f.config)) throw UsageError("config file not found: " + f.config);
    Context c{load_experiment_config(f.config), {}, {}};
    if (!f.formats.empty()) c.cfg.formats = f.formats;
    c.out = f.out.empty() ? fs::path(c.cfg.out_dir) : fs::path(f.out);
    fs::create_directories(c.out);
    c.header = output_header(c.cfg);
    // the stored config lets anyone re-hash and compare against the headers
    std::ofstream(c.out / "config.json", std::ios::binary) << c.cfg.canonical << '\n';
    return c;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ResourceError("cannot write " + p.string());
    return f;
}

// Regular grid over the window, grid[k] points along axis k (default 64).
std::vector<Point> window_grid(const ExperimentConfig& cfg, std::vector<int>& shape) {
    shape = cfg.grid;
    if (shape.empty()) shape.assign(cfg.dim, 64);
    if (static_cast<int>(shape.size()) != cfg.dim) throw ConfigError("probes.grid needs one entry per axis");
    std::vector<Point> pts;
    std::vector<int> ix(cfg.dim, 0);
    while (true) {
        Point p(cfg.dim);
        for (int k = 0; k < cfg.dim; ++k) {
            double t = shape[k] > 1 ? static_cast<double>(ix[k]) / (shape[k] - 1) : 0.5;
            p[k] = cfg.window.lo[k] + t * cfg.window.extent(k);
        }
        pts.push_back(p);
        int k = 0;
        while (k < cfg.dim && ++ix[k] == shape[k]) ix[k++] = 0;
        if (k == cfg.dim) break;
    }
    return pts;
}

DrawMode field_mode(const ExperimentConfig& cfg) {
    if (cfg.mode == "probes") return DrawMode::Probes;
    if (cfg.mode == "lines") throw ConfigError("sampling.mode \"lines\" applies to X-ray runs only");
    return DrawMode::Window;
}

const Direction& first_direction(const ExperimentConfig& cfg) {
    if (cfg.directions.empty()) throw ConfigError("probes.directions is empty");
    return cfg.directions.front();
}

WindowFunction window_of(const ExperimentConfig& cfg) {
    if (!cfg.rho) throw ConfigError("probes.window (rho) is required for X-ray runs");
    return *cfg.rho;
}

std::vector<Point> require_points(const std::vector<Point>& v, const char* what) {
    if (v.empty()) throw ConfigError(std::string("probes.") + what + " is empty");
    return v;
}

// ---------------------------------------------------------------- subcommands

int cmd_simulate(const Flags& f) {
    Context c = load(f);
    SimulationConfig sim = c.cfg.simulation();
    std::vector<std::size_t> counts(sim.replicas);
    std::vector<double> truncation(sim.replicas);
    parallel_for(sim.replicas, f.jobs, [&](std::size_t r) {
        Realization real = sample_realization(sim, r);
        real.config_hash = c.cfg.hash;
        counts[r] = real.balls.size();
        truncation[r] = real.truncation_bound;
        if (c.cfg.wants("realization")) {
            auto os = open_out(c.out / ("realization_" + std::to_string(r) + ".txt"));
            write_realization(os, real);
        }
    });
    auto os = open_out(c.out / "simulate.csv");
    os << c.header << "replica,balls,truncation_bound\n";
    for (int r = 0; r < sim.replicas; ++r) os << r << ',' << counts[r] << ',' << g17(truncation[r]) << '\n';
    std::cout << "wrote " << sim.replicas << " replicas to " << c.out.string() << '\n';
    return 0;
}

int cmd_coverage(const Flags& f) {
    Context c = load(f);
    SimulationConfig sim = c.cfg.simulation();
    std::vector<int> shape;
    std::vector<Point> pts = c.cfg.base_points.empty() ? window_grid(c.cfg, shape) : c.cfg.base_points;
    std::vector<CoverageField> fields(sim.replicas);
    parallel_for(sim.replicas, f.jobs, [&](std::size_t r) {
        Realization real = c.cfg.mode == "probes" ? sample_at_probes(sim, pts, r) : sample_realization(sim, r);
        fields[r] = evaluate_coverage(SpatialIndex(real), pts);
    });
    for (int r = 0; r < sim.replicas; ++r) {
        auto os = open_out(c.out / ("coverage_" + std::to_string(r) + ".csv"));
        write_coverage_csv(os, fields[r], c.header);
        if (fields[r].flagged) std::cerr << "warning: replica " << r << " has points outside the exact region\n";
        if (c.cfg.wants("pgm") && c.cfg.dim == 2 && !shape.empty()) {
            std::vector<double> v(fields[r].counts.begin(), fields[r].counts.end());
            auto pg = open_out(c.out / ("coverage_" + std::to_string(r) + ".pgm"));
            write_projection_pgm(pg, v, shape[0], shape[1], "microball config_hash=" + c.cfg.hash);
        }
    }
    std::cout << "wrote coverage for " << sim.replicas << " replicas, " << pts.size() << " points\n";
    return 0;
}

int cmd_xray(const Flags& f) {
    Context c = load(f);
    SimulationConfig sim = c.cfg.simulation();
    const Direction& alpha = first_direction(c.cfg);
    WindowFunction rho = window_of(c.cfg);
    Hyperplane plane(alpha);
    // feet: the configured base points, or the window grid projected on the hyperplane
    std::vector<Point> feet, seen;
    int width = 1, height = 1;
    if (!c.cfg.base_points.empty()) {
        for (const Point& p : c.cfg.base_points) feet.push_back(plane.embed(plane.coords(p)));
        width = static_cast<int>(feet.size());
    } else {
        std::vector<int> shape;
        for (const Point& p : window_grid(c.cfg, shape)) {
            Point q = plane.coords(p);
            bool dup = false;
            for (const Point& s : seen) dup = dup || dist2(s, q) < 1e-24;
            if (dup) continue;
            seen.push_back(q);
            feet.push_back(plane.embed(q));
        }
        width = static_cast<int>(feet.size());
        if (c.cfg.dim == 3) {
            // the projected grid is row-major along the second intrinsic axis
            for (std::size_t i = 1; i < seen.size(); ++i)
                if (seen[i][1] != seen[0][1]) {
                    width = static_cast<int>(i);
                    break;
                }
            height = static_cast<int>(feet.size()) / std::max(width, 1);
        }
    }
    std::vector<std::vector<double>> values(sim.replicas);
    parallel_for(sim.replicas, f.jobs, [&](std::size_t r) {
        Realization real = c.cfg.mode == "lines" ? sample_along_lines(sim, alpha, feet, rho.mass_radius(), r)
                                                 : sample_realization(sim, r);
        values[r] = xray_transform(real, alpha, rho, feet);
    });
    for (int r = 0; r < sim.replicas; ++r) {
        if (c.cfg.wants("csv")) {
            auto os = open_out(c.out / ("projection_" + std::to_string(r) + ".csv"));
            write_projection_csv(os, plane, feet, values[r], c.header);
        }
        if (c.cfg.wants("pgm") && width * height == static_cast<int>(feet.size())) {
            auto os = open_out(c.out / ("projection_" + std::to_string(r) + ".pgm"));
            write_projection_pgm(os, values[r], width, height, "microball config_hash=" + c.cfg.hash);
        }
    }
    std::cout << "wrote projections for " << sim.replicas << " replicas, " << feet.size() << " lines\n";
    return 0;
}

VariogramEstimate variogram_of(const Context& c, int jobs) {
    SimulationConfig sim = c.cfg.simulation();
    auto base = require_points(c.cfg.base_points, "base_points");
    auto lags = require_points(c.cfg.lags, "lags");
    std::vector<IncrementTable> tables;
    if (c.cfg.target == "xray") {
        DrawMode mode = c.cfg.mode == "lines" ? DrawMode::Lines : DrawMode::Window;
        tables = xray_increment_tables(sim, first_direction(c.cfg), window_of(c.cfg), base, lags, mode, jobs);
    } else {
        tables = field_increment_tables(sim, base, lags, field_mode(c.cfg), jobs);
    }
    VariogramEstimate v = empirical_variogram(lag_norms(lags), pool_tables(tables), !sim.index.is_constant());
    if (c.cfg.target != "xray" && c.cfg.mode == "probes")
        v.truncation.assign(v.lags.size(), truncation_bound(sim.dim, sim.index.h_lo(), sim.r_min));
    for (const auto& w : v.warnings) std::cerr << "warning: " << w << '\n';
    return v;
}

void write_variogram_outputs(const Context& c, const VariogramEstimate& v, const LassEstimate* fit) {
    auto os = open_out(c.out / "variogram.csv");
    write_variogram_csv(os, v, c.header);
    if (c.cfg.wants("svg")) {
        PlotSeries s{"variogram", {}, {}};
        for (std::size_t i = 0; i < v.lags.size(); ++i)
            if (v.values[i] > 0) s.x.push_back(v.lags[i]), s.y.push_back(v.values[i]);
        std::optional<PlotFit> pf;
        if (fit) pf = PlotFit{fit->slope, fit->intercept, fit->ci95};
        emit_plot({s}, (c.out / "variogram.svg").string(), pf, "variogram");
    }
}

int cmd_variogram(const Flags& f) {
    Context c = load(f);
    VariogramEstimate v = variogram_of(c, f.jobs);
    write_variogram_outputs(c, v, nullptr);
    std::cout << "wrote variogram with " << v.lags.size() << " lags\n";
    return 0;
}

json fit_json(const LassEstimate& e) {
    return {{"slope", e.slope},         {"intercept", e.intercept}, {"index", e.index},
            {"ci95", {e.ci95.first, e.ci95.second}}, {"slope_se", e.slope_se}, {"r2", e.r2},
            {"lags_used", e.lags},      {"dropped", e.dropped}};
}

std::pair<double, double> lag_range_of(const ExperimentConfig& cfg, const VariogramEstimate& v) {
    if (cfg.lag_range.second > 0) return cfg.lag_range;
    if (v.lags.empty()) throw EstimationError("no lags to fit");
    auto [lo, hi] = std::minmax_element(v.lags.begin(), v.lags.end());
    return {*lo, *hi};
}

int cmd_estimate(const Flags& f) {
    Context c = load(f);
    VariogramEstimate v = variogram_of(c, f.jobs);
    FitTarget target = c.cfg.target == "xray" ? FitTarget::Xray : FitTarget::Field;
    LassEstimate fit = fit_scaling_exponent(v, lag_range_of(c.cfg, v), target);
    write_variogram_outputs(c, v, &fit);
    json j = fit_json(fit);
    j["config_hash"] = c.cfg.hash;
    j["target"] = c.cfg.target;
    open_out(c.out / "estimate.json") << j.dump(2) << '\n';
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_homogenize(const Flags& f) {
    Context c = load(f);
    SimulationConfig sim = c.cfg.simulation();
    auto base = require_points(c.cfg.base_points, "base_points");
    auto lags = require_points(c.cfg.lags, "lags");
    if (c.cfg.epsilons.empty()) throw ConfigError("analysis.epsilons is empty");
    HomogenizationResult h = homogenization_scaling_check(sim, c.cfg.epsilons, lags.front(), base.front(), f.jobs);
    auto os = open_out(c.out / "homogenize.csv");
    write_variogram_csv(os, h.table, c.header);
    json j = fit_json(h.fit);
    j["config_hash"] = c.cfg.hash;
    std::cout << j.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
    int d = 1;
    double m = 0.25, p = 1, lag = 1, r_min = 0, r_max = INFINITY, H = 0.75, r = 1, k = 1, tol = 0;
    std::vector<double> x, y, yp, x0;
    std::string kind = "constant", expr;
    double C = 0, beta = 1;
};

Point point_of(const std::vector<double>& v, int dim, const char* name) {
    if (static_cast<int>(v.size()) != dim)
        throw UsageError(std::string("--") + name + " needs " + std::to_string(dim) + " coordinates");
    Point p(dim);
    for (int i = 0; i < dim; ++i) p[i] = v[i];
    return p;
}

IndexField index_of(const OracleArgs& a) {
    if (a.kind == "constant") return IndexField::constant(a.m);
    if (a.expr.empty()) throw UsageError("--expr is required for " + a.kind + " indices");
    if (a.kind == "star") return IndexField::star(a.expr, a.d, a.C, a.beta);
    Box region(Point(a.d), Point(a.d));
    for (int i = 0; i < a.d; ++i) region.lo[i] = -4, region.hi[i] = 4;
    return IndexField::smooth(a.expr, a.d, a.C, a.beta, region);
}

json result_json(const std::string& name, const OracleResult& r) {
    return {{"oracle", name}, {"value", r.value}, {"error_estimate", r.error_estimate}, {"method", r.method}};
}

int cmd_oracle(const std::string& name, const OracleArgs& a) {
    auto tol = [&](double dflt) { return a.tol > 0 ? a.tol : dflt; };
    json j;
    if (name == "psi-constant") {
        j = result_json(name, psi_moment_constant(a.d, a.m, tol(1e-11)));
    } else if (name == "psi-direct") {
        j = result_json(name, psi_moment_direct(a.m, a.p, a.lag, tol(1e-11)));
    } else if (name == "increment-variance") {
        j = result_json(name, truncated_increment_variance(a.d, a.m, point_of(a.x, a.d, "x"), a.r_min, a.r_max, tol(1e-12)));
    } else if (name == "radius-tail") {
        j = result_json(name, large_radius_tail(a.d, a.m, point_of(a.x, a.d, "x"), a.r_max));
    } else if (name == "mean-coverage") {
        Point x = a.x.empty() ? Point(a.d) : point_of(a.x, a.d, "x");
        j = result_json(name, mean_coverage(a.d, index_of(a), a.r_min, std::isfinite(a.r_max) ? a.r_max : 1.0, x));
    } else if (name == "mean-increment") {
        Point x0 = a.x0.empty() ? Point(a.d) : point_of(a.x0, a.d, "x0");
        j = result_json(name, mean_increment(a.d, index_of(a), x0, point_of(a.x, a.d, "x"), a.r_min,
                                             std::isfinite(a.r_max) ? a.r_max : 1.0, tol(1e-10)));
    } else if (name == "tangent-zm") {
        j = result_json(name, tangent_field_zm(point_of(a.x, 2, "x"), index_of(a), a.m));
    } else if (name == "xray-covariance") {
        j = result_json(name, xray_tangent_covariance(point_of(a.y, a.d - 1, "y"), point_of(a.yp, a.d - 1, "yp"), a.d,
                                                      a.H, tol(1e-10)));
    } else if (name == "g-bound") {
        GBoundCheck g = g_l2_bound_check(point_of(a.y, a.d - 1, "y"), a.r, a.d);
        j = result_json(name, g.integral);
        j["ratio_log"] = g.ratio_log;
        j["ratio_small"] = g.ratio_small;
    } else if (name == "spectral") {
        j = result_json(name, spectral_density(a.k, a.d, a.m));
    } else {
        throw UsageError("unknown oracle '" + name +
                         "' (psi-constant, psi-direct, increment-variance, radius-tail, mean-coverage, "
                         "mean-increment, tangent-zm, xray-covariance, g-bound, spectral)");
    }
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_experiment(const std::string& preset, const Flags& f) {
    ExperimentOptions opt{f.jobs, f.out};
    std::vector<CriterionResult> results =
        preset == "acceptance" ? run_acceptance(opt) : run_preset(preset, opt);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << format_result(r) << '\n';
        ok = ok && r.pass;
    }
    return ok ? 0 : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"microball: Poisson microball fields, X-ray projections and scaling estimators"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags flags;
    app.add_option("--config", flags.config, "experiment configuration (JSON)");
    app.add_option("--jobs", flags.jobs, "worker threads")->check(CLI::Range(1, 1024));
    app.add_option("--out", flags.out, "output directory (overrides outputs.directory)");
    app.add_option("--format", flags.formats, "output formats: csv, svg, pgm, realization")
        ->check(CLI::IsMember({"csv", "svg", "pgm", "realization"}));

    auto* simulate = app.add_subcommand("simulate", "sample realizations in the window");
    auto* coverage = app.add_subcommand("coverage", "coverage counts on a grid or at base points");
    auto* xray = app.add_subcommand("xray", "windowed X-ray projections");
    auto* variogram = app.add_subcommand("variogram", "empirical increment variogram");
    auto* estimate = app.add_subcommand("estimate", "variogram plus log-log scaling fit");
    auto* homogenize = app.add_subcommand("homogenize", "homogenization scaling against epsilon");

    auto* oracle = app.add_subcommand("oracle", "deterministic reference integrals, printed as JSON");
    std::string oracle_name;
    OracleArgs oa;
    oracle->add_option("name", oracle_name, "oracle name")->required();
    oracle->add_option("--d", oa.d, "dimension")->check(CLI::Range(1, 3));
    oracle->add_option("--m", oa.m, "index m");
    oracle->add_option("--p", oa.p, "moment order");
    oracle->add_option("--lag", oa.lag, "scalar lag (d = 1)");
    oracle->add_option("--x", oa.x, "lag vector");
    oracle->add_option("--x0", oa.x0, "base point");
    oracle->add_option("--y", oa.y, "hyperplane point (d - 1 coordinates)");
    oracle->add_option("--yp", oa.yp, "second hyperplane point");
    oracle->add_option("--r-min", oa.r_min, "smallest radius");
    oracle->add_option("--r-max", oa.r_max, "largest radius");
    oracle->add_option("--H", oa.H, "X-ray index H = m + 1/2");
    oracle->add_option("--r", oa.r, "radius for g-bound");
    oracle->add_option("--k", oa.k, "frequency norm for spectral");
    oracle->add_option("--tol", oa.tol, "relative tolerance");
    oracle->add_option("--kind", oa.kind, "index kind")->check(CLI::IsMember({"constant", "smooth", "star"}));
    oracle->add_option("--expr", oa.expr, "index expression");
    oracle->add_option("--C", oa.C, "Lipschitz constant");
    oracle->add_option("--beta", oa.beta, "Lipschitz exponent");

    auto* experiment = app.add_subcommand("experiment", "named acceptance experiment, PASS/FAIL per criterion");
    std::string preset;
    std::string preset_help = "acceptance";
    for (const auto& n : preset_names()) preset_help += ", " + n;
    experiment->add_option("preset", preset, preset_help)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(flags);
        if (*coverage) return cmd_coverage(flags);
        if (*xray) return cmd_xray(flags);
        if (*variogram) return cmd_variogram(flags);
        if (*estimate) return cmd_estimate(flags);
        if (*homogenize) return cmd_homogenize(flags);
        if (*oracle) return cmd_oracle(oracle_name, oa);
        if (*experiment) return cmd_experiment(preset, flags);
    } catch (const EstimationError& e) {
        std::cerr << "estimation error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const ResourceError& e) {
        std::cerr << "resource error: " << e.what() << '\n';
        return kExitEstimation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
