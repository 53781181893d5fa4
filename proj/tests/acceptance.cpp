// Runs acceptance criteria 1..10 and prints one PASS/FAIL line per criterion.
#include <CLI11.hpp>

#include <chrono>
#include <iostream>

#include "microball/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"microball acceptance run"};
    microball::ExperimentOptions opt;
    app.add_option("--out", opt.out_dir, "directory for CSV / SVG outputs");
    app.add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    auto start = std::chrono::steady_clock::now();
    int failed = 0;
    for (const auto& r : microball::run_acceptance(opt)) {
        std::cout << microball::format_result(r) << std::endl;
        failed += !r.pass;
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << " in "
              << secs << " s" << std::endl;
    return failed ? 1 : 0;
}
