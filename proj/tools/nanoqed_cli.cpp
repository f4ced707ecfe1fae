#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "nanoqed/errors.hpp"
#include "nanoqed/scenario/runner.hpp"

namespace fs = std::filesystem;
using namespace nanoqed;

namespace {

// A bare preset name such as "fig3" resolves to presets/fig3.json.
fs::path resolve_config(const std::string& arg) {
    const fs::path p(arg);
    if (fs::exists(p)) return p;
    const fs::path preset = fs::path(NANOQED_PRESET_DIR) / (arg + ".json");
    if (p.extension().empty() && fs::exists(preset)) return preset;
    throw ConfigError("config not found: " + arg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-Markovian emitter dynamics near a metal nanosphere"};
    app.set_version_flag("--version", scenario::kVersion);
    app.require_subcommand(1);

    std::string config, out_dir = "out";
    scenario::Overrides ov;
    double dt = 0.0, tmax = 0.0;
    unsigned threads = 0;
    std::string solver;
    app.add_option("-c,--config", config, "JSON configuration file or preset name")->required();
    app.add_option("-o,--out-dir", out_dir, "Output directory")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    app.add_option("--solver", solver, "Time-domain solver")->check(CLI::IsMember({"laplace", "volterra", "both"}));
    app.add_option("--dt", dt, "Time step in fs for every run")->check(CLI::PositiveNumber);
    app.add_option("--tmax", tmax, "Final time in fs for every run")->check(CLI::PositiveNumber);

    auto* c_kernel = app.add_subcommand("kernel", "Exact kernel spectra, Purcell factor and strong-coupling check");
    auto* c_fit = app.add_subcommand("fit", "Lorentzian pseudo-mode models");
    auto* c_evolve = app.add_subcommand("evolve", "Amplitude traces, exponential sums and coherence spectra");
    auto* c_map = app.add_subcommand("map", "Photon interference maps and node lines");
    auto* c_scan = app.add_subcommand("scan", "Parameter scans (crossover, beating period)");
    auto* c_bench = app.add_subcommand("benchmark", "Population regimes for the benchmark model");
    auto* c_run = app.add_subcommand("run", "All stages of the configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (dt > 0.0) ov.dt = dt;
    if (tmax > 0.0) ov.t_max = tmax;
    if (threads > 0) ov.threads = threads;
    if (!solver.empty()) ov.solver = solver;

    std::ostringstream command;
    for (int i = 0; i < argc; ++i) command << (i ? " " : "") << argv[i];

    try {
        scenario::Runner runner(scenario::load_config(resolve_config(config), ov), out_dir);
        const bool all = c_run->parsed();
        if (all || c_kernel->parsed()) runner.do_kernels();
        if (all || c_fit->parsed()) runner.do_fits();
        if (all || c_evolve->parsed()) runner.do_evolve();
        else if (c_map->parsed()) runner.do_maps();
        if (all || c_scan->parsed()) runner.do_scans();
        if (all || c_bench->parsed()) runner.do_benchmark();
        const auto m = runner.write_manifest(command.str());
        std::cout << m["summary"].dump(2) << '\n';
        std::cout << "wrote " << m["outputs"].size() << " files to " << out_dir << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
