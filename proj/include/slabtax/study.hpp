#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "slabtax/asymptotics.hpp"
#include "slabtax/config.hpp"
#include "slabtax/errors.hpp"
#include "slabtax/keller_segel.hpp"
#include "slabtax/kinetic.hpp"
#include "slabtax/model.hpp"
#include "slabtax/version.hpp"

namespace slabtax {

/// Shortest round-trip decimal form of a double (CSV number formatting).
inline std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

struct StudyRow {
    double epsilon = 0.0; ///< dx for mesh-refinement studies
    std::optional<double> err_combined;
    std::optional<double> err_b;
    std::optional<double> err_c;
    std::optional<int> iters_max;
    std::vector<std::string> warnings;
    std::optional<BoundsReport> bounds;
    bool failed = false;

    // manifest statistics
    long long iters_total = 0;
    int cap_hits = 0;
};

struct GateCheck {
    std::string name;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool pass = false;
};

struct SnapshotTable {
    std::vector<double> times;            // per snapshot
    std::vector<double> x;                // per node
    std::vector<ScalarField> ubar_eps;    // may be empty (mesh studies)
    std::vector<ScalarField> ubar0;
    std::vector<ScalarField> cbar_eps;    // may be empty
    std::vector<ScalarField> cbar0;
};

struct StudyResult {
    StudyKind kind = StudyKind::Single;
    std::vector<StudyRow> rows;
    std::optional<RateFit> fit_combined;
    std::optional<RateFit> fit_b;
    std::optional<RateFit> fit_c;
    std::vector<GateCheck> gates;
    SnapshotTable snapshots;
    bool runs_ok = true;
    bool gates_ok = true;
    double wall_time_seconds = 0.0;
    nlohmann::json reference_check;
    std::vector<std::string> study_warnings;
};

namespace detail {

struct EpsilonRunOutput {
    StudyRow row;
    KineticRun run;
};

/// Kinetic run at one epsilon plus its remainder decomposition against the
/// restricted reference trajectory.
inline EpsilonRunOutput run_sweep_member(const StudyConfig& cfg, double epsilon,
                                         const SpatialMesh& mesh, const TimeGrid& tg,
                                         const VelocityQuadrature& q, const KSRun& ref_restricted) {
    ScenarioSpec spec = cfg.scenario;
    spec.epsilon = epsilon;
    const ProblemSetup setup = build_problem(spec, mesh);

    EpsilonRunOutput out;
    out.row.epsilon = epsilon;
    out.run = run_kinetic(setup, mesh, tg, q, cfg.solver,
                          snapshot_step_indices(tg.n_steps(), cfg.snapshots));

    const DecompositionReport dec = decompose_remainders(out.run, ref_restricted, setup, mesh, tg, q);
    out.row.err_combined = dec.combined_error;
    out.row.err_b = dec.err_b;
    out.row.err_c = dec.err_c;
    out.row.iters_max = out.run.iters_max;
    out.row.iters_total = out.run.iters_total;
    out.row.cap_hits = out.run.cap_hits;
    out.row.warnings = out.run.warnings;
    out.row.bounds = theorem_bounds_report(out.run, setup, tg);
    return out;
}

inline void append_snapshots(SnapshotTable& table, const std::vector<double>& times,
                             const SpatialMesh& mesh, const std::vector<ScalarField>* ubar_eps,
                             const std::vector<ScalarField>& ubar0,
                             const std::vector<ScalarField>* cbar_eps,
                             const std::vector<ScalarField>& cbar0) {
    table.times = times;
    table.x = mesh.nodes();
    if (ubar_eps) table.ubar_eps = *ubar_eps;
    table.ubar0 = ubar0;
    if (cbar_eps) table.cbar_eps = *cbar_eps;
    table.cbar0 = cbar0;
}

} // namespace detail

/// Writes rates.csv, bounds.csv, snapshots.csv and manifest.json into dir.
inline void write_outputs(const StudyResult& result, const StudyConfig& cfg,
                          const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw SolverError("cannot write output file " + (dir / name).string());
        return f;
    };

    {
        auto f = open("rates.csv");
        f << "epsilon,err_combined,err_b,err_c,iters_max,warnings\n";
        for (const auto& row : result.rows) {
            f << fmt_double(row.epsilon) << ',';
            f << (row.err_combined ? fmt_double(*row.err_combined) : "") << ',';
            f << (row.err_b ? fmt_double(*row.err_b) : "") << ',';
            f << (row.err_c ? fmt_double(*row.err_c) : "") << ',';
            f << (row.iters_max ? std::to_string(*row.iters_max) : "") << ',';
            std::string joined;
            for (const auto& w : row.warnings) {
                if (!joined.empty()) joined += "; ";
                joined += w;
            }
            f << csv_safe(joined) << '\n';
        }
    }

    {
        auto f = open("bounds.csv");
        f << "epsilon";
        for (const char* name : BoundsReport::names) f << ',' << name;
        f << '\n';
        for (const auto& row : result.rows) {
            if (!row.bounds) continue;
            f << fmt_double(row.epsilon);
            for (double v : row.bounds->values()) f << ',' << fmt_double(v);
            f << '\n';
        }
    }

    {
        auto f = open("snapshots.csv");
        f << "t,x,ubar_eps,ubar0,cbar_eps,cbar0\n";
        const auto& s = result.snapshots;
        for (std::size_t j = 0; j < s.times.size(); ++j) {
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                f << fmt_double(s.times[j]) << ',' << fmt_double(s.x[i]) << ',';
                f << (j < s.ubar_eps.size() ? fmt_double(s.ubar_eps[j][i]) : "") << ',';
                f << (j < s.ubar0.size() ? fmt_double(s.ubar0[j][i]) : "") << ',';
                f << (j < s.cbar_eps.size() ? fmt_double(s.cbar_eps[j][i]) : "") << ',';
                f << (j < s.cbar0.size() ? fmt_double(s.cbar0[j][i]) : "") << '\n';
            }
        }
    }

    {
        nlohmann::json m;
        m["tool"] = kToolName;
        m["version"] = kVersion;
        m["config"] = cfg.echo;
        m["wall_time_seconds"] = result.wall_time_seconds;
        m["ok"] = result.runs_ok;
        m["gates_ok"] = result.gates_ok;
        m["warnings"] = result.study_warnings;
        nlohmann::json runs = nlohmann::json::array();
        for (const auto& row : result.rows) {
            nlohmann::json r;
            r["epsilon"] = row.epsilon;
            r["failed"] = row.failed;
            if (row.iters_max) r["iters_max"] = *row.iters_max;
            r["iters_total"] = row.iters_total;
            r["cap_hits"] = row.cap_hits;
            r["warnings"] = row.warnings;
            runs.push_back(r);
        }
        m["runs"] = runs;
        const auto fit_json = [](const RateFit& fit) {
            nlohmann::json j;
            j["slope"] = fit.slope;
            j["intercept"] = fit.intercept;
            j["r_squared"] = fit.r_squared;
            return j;
        };
        if (result.fit_combined) m["fit_combined"] = fit_json(*result.fit_combined);
        if (result.fit_b) m["fit_b"] = fit_json(*result.fit_b);
        if (result.fit_c) m["fit_c"] = fit_json(*result.fit_c);
        nlohmann::json gates = nlohmann::json::array();
        for (const auto& g : result.gates) {
            nlohmann::json gj;
            gj["name"] = g.name;
            gj["value"] = g.value;
            gj["lo"] = g.lo;
            gj["hi"] = g.hi;
            gj["pass"] = g.pass;
            gates.push_back(gj);
        }
        m["gates"] = gates;
        if (!result.reference_check.is_null()) m["reference_check"] = result.reference_check;

        auto f = open("manifest.json");
        f << m.dump(2) << '\n';
    }
}

/// Runs the configured study and writes its output files.  Sweep members may
/// execute concurrently (jobs > 1); rows are merged by configured index, so
/// outputs are byte-identical regardless of the concurrency setting.
inline StudyResult run_study(const StudyConfig& cfg, const std::filesystem::path& out_dir,
                             int jobs = 1) {
    const auto t_start = std::chrono::steady_clock::now();
    jobs = std::max(1, std::min(jobs, 64));

    StudyResult result;
    result.kind = cfg.kind;

    const auto finish = [&](bool write_files) {
        result.wall_time_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        if (write_files) write_outputs(result, cfg, out_dir);
    };

    try {
        const SpatialMesh mesh(cfg.scenario.ell, cfg.n_x);
        const TimeGrid tg(cfg.scenario.horizon, cfg.n_t);
        const VelocityQuadrature quad = gauss_legendre(cfg.quadrature_n);

        {
            const ProblemSetup base = build_problem(cfg.scenario, mesh);
            const CompatibilityReport compat = validate_compatibility(base, mesh);
            if (!compat.all_pass && !cfg.allow_incompatible)
                throw ValidationError(
                    "scenario data violate the compatibility conditions (max residual " +
                    std::to_string(compat.max_residual()) +
                    "); set allow_incompatible to run anyway");
            if (!compat.all_pass)
                result.study_warnings.push_back("compatibility conditions not satisfied (max residual " +
                                                std::to_string(compat.max_residual()) + ")");
        }

        const std::vector<int> snap_steps = snapshot_step_indices(cfg.n_t, cfg.snapshots);

        if (cfg.kind == StudyKind::MeshRefinement) {
            std::vector<KSRun> runs;
            std::vector<SpatialMesh> meshes;
            for (int level = 0; level < cfg.levels; ++level) {
                const int fs = 1 << level;
                const SpatialMesh m(cfg.scenario.ell, cfg.n_x * fs);
                const TimeGrid t(cfg.scenario.horizon, cfg.n_t * fs * fs);
                std::vector<int> steps = snap_steps;
                for (int& s : steps) s *= fs * fs;
                const ProblemSetup setup = build_problem(cfg.scenario, m);
                runs.push_back(run_ks(setup, m, t, quad, steps));
                meshes.push_back(m);
            }
            std::vector<double> dxs, errs;
            for (int level = 0; level + 1 < cfg.levels; ++level) {
                const KSRun fine = restrict_ks(runs[static_cast<std::size_t>(level) + 1], 2);
                const KSRun& coarse = runs[static_cast<std::size_t>(level)];
                const SpatialMesh& m = meshes[static_cast<std::size_t>(level)];
                double u_err = 0.0, c_err = 0.0;
                for (std::size_t j = 0; j < coarse.ubar_snaps.size(); ++j) {
                    ScalarField du(coarse.ubar_snaps[j].size()), dc(coarse.cbar_snaps[j].size());
                    for (std::size_t i = 0; i < du.size(); ++i) {
                        du[i] = coarse.ubar_snaps[j][i] - fine.ubar_snaps[j][i];
                        dc[i] = coarse.cbar_snaps[j][i] - fine.cbar_snaps[j][i];
                    }
                    u_err = std::max(u_err, l2_x(du, m));
                    c_err = std::max(c_err, h1_x(dc, m));
                }
                StudyRow row;
                row.epsilon = m.dx();
                row.err_combined = u_err + c_err;
                row.warnings = coarse.warnings;
                result.rows.push_back(row);
                dxs.push_back(m.dx());
                errs.push_back(u_err + c_err);
            }
            detail::append_snapshots(result.snapshots, runs[0].snapshot_times, meshes[0], nullptr,
                                     runs[0].ubar_snaps, nullptr, runs[0].cbar_snaps);
            if (dxs.size() >= 3) {
                bool positive = true;
                for (double e : errs) positive = positive && e > 0.0;
                if (positive) {
                    result.fit_combined = fit_rate(dxs, errs);
                    if (cfg.gates.enabled) {
                        GateCheck g;
                        g.name = "mesh_self_convergence_order";
                        g.value = result.fit_combined->slope;
                        g.lo = cfg.gates.mesh_order_min;
                        g.hi = 10.0;
                        g.pass = g.value >= g.lo && g.value <= g.hi;
                        result.gates.push_back(g);
                        result.gates_ok = result.gates_ok && g.pass;
                    }
                }
            }
            finish(true);
            return result;
        }

        // single runs and epsilon sweeps both compare against the refined
        // limit ("truth") run: mesh 4x finer, dt 16x smaller, restricted back.
        constexpr int kRefSpace = 4;
        constexpr int kRefTime = 16;
        const SpatialMesh ref_mesh(cfg.scenario.ell, cfg.n_x * kRefSpace);
        const TimeGrid ref_tg(cfg.scenario.horizon, cfg.n_t * kRefTime);
        std::vector<int> ref_steps = snap_steps;
        for (int& s : ref_steps) s *= kRefTime;
        const ProblemSetup ref_setup = build_problem(cfg.scenario, ref_mesh);
        const KSRun reference = run_ks(ref_setup, ref_mesh, ref_tg, quad, ref_steps);
        const KSRun ref_restricted = restrict_ks(reference, kRefSpace);
        for (const auto& w : reference.warnings)
            result.study_warnings.push_back("reference: " + w);

        const std::vector<double> eps_list =
            (cfg.kind == StudyKind::EpsilonSweep) ? cfg.epsilons
                                                  : std::vector<double>{cfg.scenario.epsilon};

        std::vector<detail::EpsilonRunOutput> outputs(eps_list.size());
        std::vector<std::string> failures(eps_list.size());
        std::size_t next = 0;
        std::mutex next_mutex;
        const auto worker = [&]() {
            while (true) {
                std::size_t idx;
                {
                    std::lock_guard<std::mutex> lock(next_mutex);
                    if (next >= eps_list.size()) return;
                    idx = next++;
                }
                try {
                    outputs[idx] =
                        detail::run_sweep_member(cfg, eps_list[idx], mesh, tg, quad, ref_restricted);
                } catch (const std::exception& e) {
                    failures[idx] = e.what();
                }
            }
        };
        if (jobs == 1 || eps_list.size() == 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            const int n_threads = std::min<std::size_t>(jobs, eps_list.size());
            for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
            for (auto& th : pool) th.join();
        }

        for (std::size_t i = 0; i < eps_list.size(); ++i) {
            if (!failures[i].empty()) {
                StudyRow row;
                row.epsilon = eps_list[i];
                row.failed = true;
                row.warnings.push_back("error: " + failures[i]);
                result.rows.push_back(row);
                result.runs_ok = false;
            } else {
                result.rows.push_back(outputs[i].row);
            }
        }

        if (result.runs_ok && !outputs.empty()) {
            const KineticRun& first = outputs.front().run;
            detail::append_snapshots(result.snapshots, first.snapshot_times, mesh,
                                     &first.ubar_snaps, ref_restricted.ubar_snaps,
                                     &first.cbar_snaps, ref_restricted.cbar_snaps);
        }

        if (cfg.kind == StudyKind::EpsilonSweep && result.runs_ok) {
            // reference-resolution verification: halve the reference once and
            // require < 5% change in the largest-epsilon combined error
            {
                const SpatialMesh half_mesh(cfg.scenario.ell, cfg.n_x * 2);
                const TimeGrid half_tg(cfg.scenario.horizon, cfg.n_t * 4);
                std::vector<int> half_steps = snap_steps;
                for (int& s : half_steps) s *= 4;
                const ProblemSetup half_setup = build_problem(cfg.scenario, half_mesh);
                const KSRun half_ref =
                    restrict_ks(run_ks(half_setup, half_mesh, half_tg, quad, half_steps), 2);
                ScenarioSpec spec = cfg.scenario;
                spec.epsilon = eps_list.front();
                const ProblemSetup setup0 = build_problem(spec, mesh);
                const DecompositionReport dec_half =
                    decompose_remainders(outputs.front().run, half_ref, setup0, mesh, tg, quad);
                const double e_full = *result.rows.front().err_combined;
                const double e_half = dec_half.combined_error;
                const double change =
                    std::abs(e_full - e_half) / std::max(std::abs(e_full), 1e-300);
                result.reference_check = {{"largest_eps_error_full_ref", e_full},
                                          {"largest_eps_error_half_ref", e_half},
                                          {"relative_change", change},
                                          {"pass", change < 0.05}};
                if (change >= 0.05)
                    result.study_warnings.push_back(
                        "reference resolution check failed: largest-epsilon error changed by " +
                        std::to_string(change * 100.0) + "% when halving the reference mesh");
            }

            if (eps_list.size() >= 3) {
                std::vector<double> comb, bs, cs;
                for (const auto& row : result.rows) {
                    comb.push_back(*row.err_combined);
                    bs.push_back(*row.err_b);
                    cs.push_back(*row.err_c);
                }
                const auto safe_fit = [&](const std::vector<double>& errs) -> std::optional<RateFit> {
                    for (double e : errs)
                        if (!(e > 0.0)) return std::nullopt;
                    return fit_rate(eps_list, errs);
                };
                result.fit_combined = safe_fit(comb);
                result.fit_b = safe_fit(bs);
                result.fit_c = safe_fit(cs);

                if (cfg.gates.enabled) {
                    const auto push_gate = [&](const std::string& name, double value, double lo,
                                               double hi) {
                        GateCheck g{name, value, lo, hi, value >= lo && value <= hi};
                        result.gates.push_back(g);
                        result.gates_ok = result.gates_ok && g.pass;
                    };
                    if (result.fit_combined) {
                        push_gate("slope_combined", result.fit_combined->slope,
                                  cfg.gates.first_order_lo, cfg.gates.first_order_hi);
                        push_gate("r2_combined", result.fit_combined->r_squared, cfg.gates.r2_min,
                                  1.0 + 1e-12);
                    }
                    if (result.fit_b)
                        push_gate("slope_b", result.fit_b->slope, cfg.gates.first_order_lo,
                                  cfg.gates.first_order_hi);
                    if (result.fit_c)
                        push_gate("slope_c", result.fit_c->slope, cfg.gates.half_order_lo,
                                  cfg.gates.half_order_hi);
                }
            } else if (cfg.gates.enabled) {
                result.study_warnings.push_back(
                    "fewer than 3 sweep members: rate fits and slope gates skipped");
            }
        }

        finish(true);
        return result;
    } catch (...) {
        result.runs_ok = false;
        try {
            finish(true);
        } catch (...) {
            // the original error wins
        }
        throw;
    }
}

} // namespace slabtax
