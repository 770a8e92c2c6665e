#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "slabtax/errors.hpp"
#include "slabtax/grid.hpp"
#include "slabtax/model.hpp"
#include "slabtax/norms.hpp"
#include "slabtax/parabolic.hpp"
#include "slabtax/tridiag.hpp"

namespace slabtax {

struct KSState {
    double t = 0.0;
    ScalarField ubar0;
    ScalarField cbar0;
};

/// Face flux of the drift-diffusion equation,
///   F_{i+1/2} = mu_{i+1/2} (u_{i+1}-u_i)/dx - chi_{i+1/2} (dc/dx)_{i+1/2} u_up,
/// with arithmetic-mean face coefficients and the face value of u upwinded
/// by the sign of the drift velocity chi dc/dx.  Returns n_cells faces.
inline std::vector<double> drift_diffusion_flux(const ScalarField& ubar0, const ScalarField& cbar0,
                                                const LimitCoefficients& coeffs,
                                                const SpatialMesh& mesh) {
    if (static_cast<int>(ubar0.size()) != mesh.n_nodes() ||
        static_cast<int>(cbar0.size()) != mesh.n_nodes() ||
        static_cast<int>(coeffs.mu.size()) != mesh.n_nodes())
        throw DimensionError("drift_diffusion_flux: field sizes do not match mesh");

    const double dx = mesh.dx();
    std::vector<double> flux(static_cast<std::size_t>(mesh.n_cells()), 0.0);
    for (int f = 0; f < mesh.n_cells(); ++f) {
        const std::size_t i = static_cast<std::size_t>(f);
        const double mu_f = 0.5 * (coeffs.mu[i] + coeffs.mu[i + 1]);
        const double chi_f = 0.5 * (coeffs.chi[i] + coeffs.chi[i + 1]);
        const double dcdx = (cbar0[i + 1] - cbar0[i]) / dx;
        const double w = chi_f * dcdx;
        const double u_up = (w >= 0.0) ? ubar0[i] : ubar0[i + 1];
        flux[i] = mu_f * (ubar0[i + 1] - ubar0[i]) / dx - w * u_up;
    }
    return flux;
}

struct KSStepResult {
    KSState state;
    double drift_cfl = 0.0; ///< max |chi dc/dx| dt / dx over faces
    std::vector<std::string> warnings;
};

/// Semi-implicit step of the limit system: the chemoattractant is advanced
/// first (backward Euler, source gamma*ubar^n), then the density with
/// implicit diffusion (tridiagonal, variable mu) and explicit upwinded drift
/// built from the fresh c.  Dirichlet data are imposed at the boundary nodes.
/// extra_su / extra_sc add manufactured-solution sources when non-null.
inline KSStepResult step_ks(const KSState& state, const ProblemSetup& p,
                            const LimitCoefficients& coeffs, const SpatialMesh& mesh, double dt,
                            const ScalarField* extra_su = nullptr,
                            const ScalarField* extra_sc = nullptr) {
    if (!(dt > 0.0)) throw ConfigError("step_ks: dt must be positive");
    const int last = mesh.n_cells();
    const std::size_t n = static_cast<std::size_t>(mesh.n_nodes());
    const double dx = mesh.dx();
    const double t_new = state.t + dt;

    KSStepResult out;

    // chemoattractant first
    ScalarField source(n);
    for (std::size_t i = 0; i < n; ++i) source[i] = p.gamma * state.ubar0[i];
    if (extra_sc)
        for (std::size_t i = 0; i < n; ++i) source[i] += (*extra_sc)[i];
    out.state.cbar0 = step_parabolic(state.cbar0, source, p, mesh, dt, 1.0, t_new);

    // explicit drift fluxes from the new c and old u
    std::vector<double> drift(static_cast<std::size_t>(last), 0.0);
    std::vector<double> mu_face(static_cast<std::size_t>(last), 0.0);
    double cfl = 0.0;
    for (int f = 0; f < last; ++f) {
        const std::size_t i = static_cast<std::size_t>(f);
        mu_face[i] = 0.5 * (coeffs.mu[i] + coeffs.mu[i + 1]);
        const double chi_f = 0.5 * (coeffs.chi[i] + coeffs.chi[i + 1]);
        const double dcdx = (out.state.cbar0[i + 1] - out.state.cbar0[i]) / dx;
        const double w = chi_f * dcdx;
        cfl = std::max(cfl, std::abs(w) * dt / dx);
        const double u_up = (w >= 0.0) ? state.ubar0[i] : state.ubar0[i + 1];
        drift[i] = w * u_up;
    }
    out.drift_cfl = cfl;
    if (cfl > 1.0)
        out.warnings.push_back("drift CFL " + std::to_string(cfl) + " > 1; suggested dt <= " +
                               std::to_string(dt / cfl));

    // implicit diffusion
    TridiagonalSystem sys;
    sys.sub.assign(n, 0.0);
    sys.diag.assign(n, 0.0);
    sys.super.assign(n, 0.0);
    sys.rhs.assign(n, 0.0);
    sys.diag[0] = 1.0;
    sys.rhs[0] = p.gu.left.value(t_new);
    sys.diag[static_cast<std::size_t>(last)] = 1.0;
    sys.rhs[static_cast<std::size_t>(last)] = p.gu.right.value(t_new);
    for (int i = 1; i < last; ++i) {
        const std::size_t s = static_cast<std::size_t>(i);
        const double ml = mu_face[s - 1] / (dx * dx);
        const double mr = mu_face[s] / (dx * dx);
        sys.sub[s] = -ml;
        sys.super[s] = -mr;
        sys.diag[s] = 1.0 / dt + ml + mr;
        sys.rhs[s] = state.ubar0[s] / dt - (drift[s] - drift[s - 1]) / dx;
        if (extra_su) sys.rhs[s] += (*extra_su)[s];
    }
    out.state.ubar0.values = thomas_solve(sys);
    out.state.t = t_new;
    return out;
}

struct KSRun {
    std::vector<int> snapshot_steps;
    std::vector<double> snapshot_times;
    std::vector<ScalarField> ubar_snaps;
    std::vector<ScalarField> cbar_snaps;
    double drift_cfl_max = 0.0;
    std::vector<std::string> warnings;
};

inline KSRun run_ks(const ProblemSetup& p, const SpatialMesh& mesh, const TimeGrid& tg,
                    const VelocityQuadrature& q, const std::vector<int>& snapshot_steps) {
    const LimitCoefficients coeffs = limit_coefficients(p, q);
    KSState state;
    state.t = 0.0;
    state.ubar0 = p.u0;
    state.cbar0 = p.c0;

    KSRun run;
    run.snapshot_steps = snapshot_steps;

    auto snapshot_if_due = [&](int n) {
        if (std::find(run.snapshot_steps.begin(), run.snapshot_steps.end(), n) ==
            run.snapshot_steps.end())
            return;
        run.snapshot_times.push_back(tg.time(n));
        run.ubar_snaps.push_back(state.ubar0);
        run.cbar_snaps.push_back(state.cbar0);
    };
    snapshot_if_due(0);

    bool cfl_warned = false;
    for (int n = 0; n < tg.n_steps(); ++n) {
        KSStepResult step = step_ks(state, p, coeffs, mesh, tg.dt());
        run.drift_cfl_max = std::max(run.drift_cfl_max, step.drift_cfl);
        if (!step.warnings.empty() && !cfl_warned) {
            run.warnings.push_back(step.warnings.front() + " (step " + std::to_string(n + 1) + ")");
            cfl_warned = true;
        }
        state = std::move(step.state);
        if (!state.ubar0.all_finite() || !state.cbar0.all_finite())
            throw SolverError("run_ks: non-finite values at step " + std::to_string(n + 1) +
                              " (t = " + std::to_string(state.t) + ")");
        snapshot_if_due(n + 1);
    }
    return run;
}

/// Nodal restriction of a nested fine-grid field (every factor-th node).
inline ScalarField restrict_field(const ScalarField& fine, int factor) {
    if ((fine.size() - 1) % static_cast<std::size_t>(factor) != 0)
        throw DimensionError("restrict_field: grids do not nest");
    ScalarField coarse((fine.size() - 1) / static_cast<std::size_t>(factor) + 1);
    for (std::size_t i = 0; i < coarse.size(); ++i)
        coarse[i] = fine[i * static_cast<std::size_t>(factor)];
    return coarse;
}

inline KSRun restrict_ks(const KSRun& fine, int space_factor) {
    KSRun coarse = fine;
    for (std::size_t j = 0; j < fine.ubar_snaps.size(); ++j) {
        coarse.ubar_snaps[j] = restrict_field(fine.ubar_snaps[j], space_factor);
        coarse.cbar_snaps[j] = restrict_field(fine.cbar_snaps[j], space_factor);
    }
    return coarse;
}

} // namespace slabtax
