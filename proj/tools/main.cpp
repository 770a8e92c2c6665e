// Command-line front end: parses a study configuration, orchestrates the
// runs and writes the CSV/JSON artifacts.
//
// Exit codes: 0 success, 1 slope-gate failure, 2 configuration error,
// 3 runtime/solver error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "slabtax/config.hpp"
#include "slabtax/study.hpp"
#include "slabtax/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGateFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw slabtax::ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_command(const std::string& config_path, const std::string& out_dir, int jobs,
                bool strict_gates, bool no_gates) {
    slabtax::StudyConfig cfg = slabtax::parse_config(read_file(config_path));
    if (no_gates) cfg.gates.enabled = false;
    if (strict_gates) cfg.gates.enabled = true;

    const slabtax::StudyResult result = slabtax::run_study(cfg, out_dir, jobs);

    std::cout << "wrote " << out_dir << "/rates.csv, bounds.csv, snapshots.csv, manifest.json\n";
    for (const auto& w : result.study_warnings) std::cout << "warning: " << w << "\n";
    if (result.fit_combined)
        std::cout << "combined error: slope " << result.fit_combined->slope << ", r^2 "
                  << result.fit_combined->r_squared << "\n";
    if (result.fit_b) std::cout << "bound (b): slope " << result.fit_b->slope << "\n";
    if (result.fit_c) std::cout << "bound (c): slope " << result.fit_c->slope << "\n";
    for (const auto& g : result.gates)
        std::cout << "gate " << g.name << ": " << g.value << " in [" << g.lo << ", " << g.hi
                  << "] -> " << (g.pass ? "pass" : "FAIL") << "\n";

    if (!result.runs_ok) {
        std::cerr << "one or more runs failed; see rates.csv and manifest.json\n";
        return kExitRuntimeError;
    }
    if (!result.gates_ok) return kExitGateFailure;
    return kExitOk;
}

int validate_command(const std::string& config_path) {
    const slabtax::StudyConfig cfg = slabtax::parse_config(read_file(config_path));
    const slabtax::SpatialMesh mesh(cfg.scenario.ell, cfg.n_x);
    const slabtax::ProblemSetup setup = slabtax::build_problem(cfg.scenario, mesh);
    const slabtax::CompatibilityReport rep = slabtax::validate_compatibility(setup, mesh);

    std::cout << "config OK (study kind "
              << (cfg.kind == slabtax::StudyKind::Single
                      ? "single"
                      : cfg.kind == slabtax::StudyKind::EpsilonSweep ? "epsilon_sweep"
                                                                     : "mesh_refinement")
              << ", nx " << cfg.n_x << ", nt " << cfg.n_t << ", n " << cfg.quadrature_n << ")\n";
    std::cout << "compatibility (d2c0/dx2 " << rep.cxx_method << "):\n";
    for (const auto& c : rep.checks)
        std::cout << "  " << c.name << " at x=" << c.location << ": residual " << c.residual
                  << " -> " << (c.pass ? "pass" : "FAIL") << "\n";
    if (!rep.all_pass && !cfg.allow_incompatible) {
        std::cerr << "compatibility conditions violated\n";
        return kExitConfigError;
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinetic chemotaxis simulator and diffusion-limit verification harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int jobs = 1;
    bool strict_gates = false;
    bool no_gates = false;

    auto* run = app.add_subcommand("run", "run the configured study and write outputs");
    run->add_option("config", config_path, "study configuration file (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (default: out)");
    run->add_option("--jobs", jobs, "max concurrent sweep members (default: 1)");
    auto* sg = run->add_flag("--strict-gates", strict_gates, "force slope gates on");
    run->add_flag("--no-gates", no_gates, "disable slope gates")->excludes(sg);

    auto* validate = app.add_subcommand("validate", "check config and compatibility conditions only");
    validate->add_option("config", config_path, "study configuration file (JSON)")->required();

    auto* version = app.add_subcommand("version", "print the tool version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (version->parsed()) {
            std::cout << slabtax::kToolName << " " << slabtax::kVersion << "\n";
            return kExitOk;
        }
        if (validate->parsed()) return validate_command(config_path);
        return run_command(config_path, out_dir, jobs, strict_gates, no_gates);
    } catch (const slabtax::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const slabtax::DimensionError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
}
