#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slabtax/errors.hpp"
#include "slabtax/grid.hpp"
#include "slabtax/model.hpp"
#include "slabtax/norms.hpp"
#include "slabtax/parabolic.hpp"
#include "slabtax/quadrature.hpp"

namespace slabtax {

/// Spatial treatment of the transport term.
///
/// Upwind applies the implicit upwind difference to the whole distribution.
/// It is monotone (every update is a convex combination, so the discrete
/// maximum principle holds exactly), but the upwinding of the isotropic part
/// adds numerical diffusion ~ dx<|v|>/(4 eps) to the density equation, which
/// diverges in the stiff limit: the scheme is not asymptotic-preserving.
///
/// ApCorrected keeps the same sweeps and upwinds only the fluctuating part:
/// the lagged macro density is advected with a centered difference, realized
/// as the per-iteration right-hand-side correction -(|tau|/2)(ubar_{i+1} -
/// 2 ubar_i + ubar_{i-1}).  The O(dx/eps) diffusion cancels exactly and the
/// scheme limits to a consistent discretization of the drift-diffusion
/// equation; the price is that the strict maximum principle no longer holds
/// (a monotone linear advection scheme cannot avoid first-order numerical
/// diffusion).  This is the default: the solver exists to track the
/// diffusion limit.
enum class TransportScheme { ApCorrected, Upwind };

struct SolverOptions {
    double source_iter_tol = 1e-12; ///< relative L2(X) change of ubar between iterates
    int source_iter_max = 10000;    ///< iteration cap; hitting it is flagged, not fatal
    int picard_iters = 1;           ///< u-c coupling passes per step; 1 = lagged coupling
    TransportScheme transport = TransportScheme::ApCorrected;
    bool record_residuals = false;  ///< keep the per-iteration residual sequence (tests)

    void validate() const {
        if (!(source_iter_tol > 0.0)) throw ConfigError("source_iter_tol must be positive");
        if (source_iter_max < 1) throw ConfigError("source_iter_max must be >= 1");
        if (picard_iters < 1) throw ConfigError("picard_iters must be >= 1");
    }
};

struct KineticState {
    double t = 0.0;
    KineticField u;
    ScalarField ubar;
};

/// Solves (I + lambda (I - P)) u = rhs nodewise, where P is the velocity-
/// average projection.  Closed form: u = (rhs - P rhs) / (1 + lambda) + P rhs.
inline KineticField relaxation_invert(double lambda, const KineticField& rhs,
                                      const VelocityQuadrature& q) {
    if (lambda < 0.0) throw ConfigError("relaxation_invert: lambda must be nonnegative");
    if (lambda == 0.0) return rhs;
    const ScalarField avg = velocity_average(rhs, q);
    KineticField u(rhs.n_nodes(), rhs.n_velocities());
    for (int i = 0; i < rhs.n_nodes(); ++i) {
        const double a = avg[static_cast<std::size_t>(i)];
        for (int k = 0; k < rhs.n_velocities(); ++k)
            u(i, k) = (rhs(i, k) - a) / (1.0 + lambda) + a;
    }
    return u;
}

/// Per-node lambda variant (lambda_i = dt sigma_i / eps^2 in the solver).
inline KineticField relaxation_invert(std::span<const double> lambda, const KineticField& rhs,
                                      const VelocityQuadrature& q) {
    if (static_cast<int>(lambda.size()) != rhs.n_nodes())
        throw DimensionError("relaxation_invert: lambda size does not match field");
    const ScalarField avg = velocity_average(rhs, q);
    KineticField u(rhs.n_nodes(), rhs.n_velocities());
    for (int i = 0; i < rhs.n_nodes(); ++i) {
        const double li = lambda[static_cast<std::size_t>(i)];
        if (li < 0.0) throw ConfigError("relaxation_invert: lambda must be nonnegative");
        const double a = avg[static_cast<std::size_t>(i)];
        for (int k = 0; k < rhs.n_velocities(); ++k)
            u(i, k) = (rhs(i, k) - a) / (1.0 + li) + a;
    }
    return u;
}

/// Single-direction implicit upwind solve of
///   a_i u_i + tau (u_i - u_upwind(i)) = rhs_i
/// by one bidiagonal sweep.  tau = eps*v/dx carries the sign of v: tau > 0
/// sweeps left-to-right from the inflow at x=0, tau < 0 right-to-left from
/// x=ell, tau == 0 decouples the nodes (no inflow is imposed).
inline std::vector<double> transport_sweep(double tau, std::span<const double> a,
                                           std::span<const double> rhs, double inflow) {
    const std::size_t n = a.size();
    if (rhs.size() != n) throw DimensionError("transport_sweep: a and rhs sizes differ");
    for (double ai : a)
        if (!(ai > 0.0)) throw SolverError("transport_sweep: nonpositive diagonal coefficient");

    std::vector<double> u(n, 0.0);
    if (tau == 0.0) {
        for (std::size_t i = 0; i < n; ++i) u[i] = rhs[i] / a[i];
        return u;
    }
    if (tau > 0.0) {
        u[0] = inflow;
        for (std::size_t i = 1; i < n; ++i) u[i] = (rhs[i] + tau * u[i - 1]) / (a[i] + tau);
    } else {
        const double s = -tau;
        u[n - 1] = inflow;
        for (std::size_t i = n - 1; i-- > 0;) u[i] = (rhs[i] + s * u[i + 1]) / (a[i] + s);
    }
    return u;
}

struct KineticStepResult {
    KineticState state;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
    std::vector<double> residual_history; // filled when opts.record_residuals
};

/// One backward-Euler step of the scaled kinetic equation
///   eps^2 du/dt + eps v du/dx + sigma (u - ubar) = eps alpha v dc/dx ubar
/// with inflow data gu(t+dt) on the inflow boundary, solved by source
/// iteration: ubar is lagged, each velocity is swept implicitly upwind, and
/// the average is refreshed until the relative L2(X) change drops below
/// opts.source_iter_tol (or the cap is hit, which is reported but not fatal).
///
/// The sweeps run over the contiguous negative-/positive-velocity halves of
/// the storage so the inner loops vectorize; the recurrence per lane is
/// exactly the one transport_sweep implements.
inline KineticStepResult step_kinetic(const KineticState& state, const ProblemSetup& p,
                                      const SpatialMesh& mesh, const VelocityQuadrature& q,
                                      const ScalarField& cbar_grad, double dt,
                                      const SolverOptions& opts) {
    opts.validate();
    if (!(dt > 0.0)) throw ConfigError("step_kinetic: dt must be positive");
    state.u.require_shape(mesh.n_nodes(), q.n(), "step_kinetic");
    if (static_cast<int>(cbar_grad.size()) != mesh.n_nodes())
        throw DimensionError("step_kinetic: cbar_grad size does not match mesh");

    const int nn = mesh.n_nodes();
    const int nv = q.n();
    const double eps = p.epsilon;
    const double dx = mesh.dx();
    const double t_new = state.t + dt;
    const double g_left = p.gu.left.value(t_new);
    const double g_right = p.gu.right.value(t_new);

    // per-step constants
    std::vector<double> a(static_cast<std::size_t>(nn));
    for (int i = 0; i < nn; ++i)
        a[static_cast<std::size_t>(i)] = eps * eps / dt + p.sigma[static_cast<std::size_t>(i)];

    std::vector<double> tau(static_cast<std::size_t>(nv));
    for (int k = 0; k < nv; ++k)
        tau[static_cast<std::size_t>(k)] = eps * q.nodes[static_cast<std::size_t>(k)] / dx;

    // rhs pieces: base = (eps^2/dt) u^n, coupling coefficient on ubar
    KineticField base(nn, nv), coup(nn, nv), invden(nn, nv);
    for (int i = 0; i < nn; ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        for (int k = 0; k < nv; ++k) {
            const std::size_t sk = static_cast<std::size_t>(k);
            base(i, k) = (eps * eps / dt) * state.u(i, k);
            coup(i, k) = p.sigma[si] + eps * p.alpha * q.nodes[sk] * cbar_grad[si];
            invden(i, k) = 1.0 / (a[si] + std::abs(tau[sk]));
        }
    }

    // velocity groups: nodes are sorted, so negatives occupy [0, neg_end)
    // and positives [pos_begin, nv); an exact-zero node (odd n) sits between.
    int neg_end = 0;
    while (neg_end < nv && q.nodes[static_cast<std::size_t>(neg_end)] < 0.0) ++neg_end;
    int pos_begin = neg_end;
    while (pos_begin < nv && q.nodes[static_cast<std::size_t>(pos_begin)] == 0.0) ++pos_begin;

    KineticField u = state.u;
    ScalarField ubar = state.ubar;
    ScalarField ubar_new(static_cast<std::size_t>(nn));
    std::size_t anchor = 0;
    for (std::size_t k = 1; k < q.weights.size(); ++k)
        if (q.weights[k] > q.weights[anchor]) anchor = k;

    // AP correction: centered advection of the lagged density, applied as
    // curv_i = ubar_{i+1} - 2 ubar_i + ubar_{i-1} (zero at the boundaries)
    const bool corrected = opts.transport == TransportScheme::ApCorrected;
    std::vector<double> curv(static_cast<std::size_t>(nn), 0.0);
    std::vector<double> half_abs_tau(static_cast<std::size_t>(nv));
    for (int k = 0; k < nv; ++k)
        half_abs_tau[static_cast<std::size_t>(k)] = 0.5 * std::abs(tau[static_cast<std::size_t>(k)]);

    KineticStepResult out;
    double residual = 0.0;
    int m = 0;
    for (; m < opts.source_iter_max; ++m) {
        if (corrected)
            for (int i = 1; i < nn - 1; ++i)
                curv[static_cast<std::size_t>(i)] = ubar[static_cast<std::size_t>(i) + 1] -
                                                    2.0 * ubar[static_cast<std::size_t>(i)] +
                                                    ubar[static_cast<std::size_t>(i) - 1];
        // positive lanes: inflow at x = 0, forward sweep
        for (int k = pos_begin; k < nv; ++k) u(0, k) = g_left;
        for (int i = 1; i < nn; ++i) {
            const double ub = ubar[static_cast<std::size_t>(i)];
            const double cv = curv[static_cast<std::size_t>(i)];
            for (int k = pos_begin; k < nv; ++k)
                u(i, k) = (base(i, k) + coup(i, k) * ub -
                           half_abs_tau[static_cast<std::size_t>(k)] * cv +
                           tau[static_cast<std::size_t>(k)] * u(i - 1, k)) *
                          invden(i, k);
        }
        // negative lanes: inflow at x = ell, backward sweep
        for (int k = 0; k < neg_end; ++k) u(nn - 1, k) = g_right;
        for (int i = nn - 2; i >= 0; --i) {
            const double ub = ubar[static_cast<std::size_t>(i)];
            const double cv = curv[static_cast<std::size_t>(i)];
            for (int k = 0; k < neg_end; ++k)
                u(i, k) = (base(i, k) + coup(i, k) * ub -
                           half_abs_tau[static_cast<std::size_t>(k)] * cv -
                           tau[static_cast<std::size_t>(k)] * u(i + 1, k)) *
                          invden(i, k);
        }
        // zero-velocity lanes (odd n): decoupled nodes, no inflow
        for (int k = neg_end; k < pos_begin; ++k)
            for (int i = 0; i < nn; ++i)
                u(i, k) = (base(i, k) + coup(i, k) * ubar[static_cast<std::size_t>(i)]) * invden(i, k);

        // anchored velocity average (same arithmetic as velocity_average)
        double num = 0.0, den = 0.0;
        for (int i = 0; i < nn; ++i) {
            const double c = u(i, static_cast<int>(anchor));
            double s = 0.0;
            for (int k = 0; k < nv; ++k)
                s += q.weights[static_cast<std::size_t>(k)] * (u(i, k) - c);
            const double avg = c + 0.5 * s;
            ubar_new[static_cast<std::size_t>(i)] = avg;
            const double w = node_weight(mesh, i);
            const double d = avg - ubar[static_cast<std::size_t>(i)];
            num += w * d * d;
            den += w * avg * avg;
        }
        residual = std::sqrt(num) / (den > 0.0 ? std::sqrt(den) : 1.0);
        std::swap(ubar, ubar_new);
        if (opts.record_residuals) out.residual_history.push_back(residual);
        if (residual <= opts.source_iter_tol) {
            ++m;
            out.converged = true;
            break;
        }
    }

    out.state.t = t_new;
    out.state.u = std::move(u);
    out.state.ubar = std::move(ubar);
    out.iterations = m;
    out.residual = residual;
    return out;
}

/// Per-step diagnostic scalars recorded along a kinetic run.  Values indexed
/// by time level n = 0..n_t; difference-quotient series have n_t entries.
struct KineticSeries {
    std::vector<double> u_l2q;        ///< ||u^n||_{L2(Q)}
    std::vector<double> sep_l2q;      ///< ||u^n - ubar^n||_{L2(Q)}
    std::vector<double> gout_dev;     ///< ||u^n - gu(t_n)||_{Gamma_out, |v|}
    std::vector<double> vdxu_l2q;     ///< ||v du/dx||_{L2(Q)} by upwind differences
    std::vector<double> c_l2x;        ///< ||c^n||_{L2(X)}
    std::vector<double> c_h2x;        ///< discrete H2(X) norm of c^n
    std::vector<double> dtu_l2q;      ///< ||(u^{n+1}-u^n)/dt||_{L2(Q)}
    std::vector<double> dtc_l2x;      ///< ||(c^{n+1}-c^n)/dt||_{L2(X)}
    std::vector<double> dtc_w1inf;    ///< W^{1,inf}(X) of (c^{n+1}-c^n)/dt
};

struct KineticRun {
    std::vector<int> snapshot_steps;
    std::vector<double> snapshot_times;
    std::vector<KineticField> u_snaps;
    std::vector<ScalarField> ubar_snaps;
    std::vector<ScalarField> cbar_snaps;
    KineticSeries series;
    int iters_max = 0;
    long long iters_total = 0;
    int cap_hits = 0;
    std::vector<std::string> warnings;
};

inline double upwind_vdx_l2q(const KineticField& u, const SpatialMesh& mesh,
                             const VelocityQuadrature& q) {
    const double dx = mesh.dx();
    const int nn = mesh.n_nodes();
    double s = 0.0;
    for (int i = 0; i < nn; ++i) {
        const double wi = node_weight(mesh, i);
        for (int k = 0; k < q.n(); ++k) {
            const double v = q.nodes[static_cast<std::size_t>(k)];
            double d;
            if (v > 0.0)
                d = (i > 0) ? (u(i, k) - u(i - 1, k)) / dx : (u(i + 1, k) - u(i, k)) / dx;
            else if (v < 0.0)
                d = (i < nn - 1) ? (u(i + 1, k) - u(i, k)) / dx : (u(i, k) - u(i - 1, k)) / dx;
            else
                d = 0.0;
            const double val = v * d;
            s += wi * q.weights[static_cast<std::size_t>(k)] * val * val;
        }
    }
    return std::sqrt(s);
}

inline double h2_x(const ScalarField& f, const SpatialMesh& mesh) {
    const double l2 = l2_x(f, mesh);
    double s = l2 * l2 + h1_seminorm_sq(f, mesh);
    const double dx = mesh.dx();
    for (int i = 1; i < mesh.n_cells(); ++i) {
        const std::size_t si = static_cast<std::size_t>(i);
        const double d2 = (f[si + 1] - 2.0 * f[si] + f[si - 1]) / (dx * dx);
        s += dx * d2 * d2;
    }
    return std::sqrt(s);
}

inline double w1inf_x(const ScalarField& f, const SpatialMesh& mesh) {
    const double dx = mesh.dx();
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    for (int i = 0; i < mesh.n_cells(); ++i)
        m = std::max(m, std::abs(f[static_cast<std::size_t>(i) + 1] - f[static_cast<std::size_t>(i)]) / dx);
    return m;
}

/// Evenly spread snapshot step indices over [0, n_t], always including both
/// endpoints.  Computed on the study grid; nested finer grids snapshot at the
/// same physical times by scaling the indices.
inline std::vector<int> snapshot_step_indices(int n_steps, int count) {
    if (count < 2) count = 2;
    if (count > n_steps + 1) count = n_steps + 1;
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(count));
    int prev = -1;
    for (int j = 0; j < count; ++j) {
        int s = static_cast<int>(std::llround(static_cast<double>(j) * n_steps / (count - 1)));
        if (s <= prev) s = prev + 1;
        if (s > n_steps) s = n_steps;
        if (s != prev) idx.push_back(s);
        prev = s;
    }
    return idx;
}

/// Full coupled run of the kinetic system: per step the chemoattractant is
/// advanced implicitly with the lagged source gamma*ubar, then the kinetic
/// step uses the fresh gradient of c.  With opts.picard_iters > 1 both
/// solves are repeated, feeding back the new ubar, which mirrors the
/// fixed-point coupling of the continuous problem.
inline KineticRun run_kinetic(const ProblemSetup& p, const SpatialMesh& mesh, const TimeGrid& tg,
                              const VelocityQuadrature& q, const SolverOptions& opts,
                              const std::vector<int>& snapshot_steps) {
    opts.validate();
    const int n_t = tg.n_steps();
    const double dt = tg.dt();

    KineticState state;
    state.t = 0.0;
    state.u = extend_in_velocity(p.u0, q);
    state.ubar = velocity_average(state.u, q);
    ScalarField cbar = p.c0;

    KineticRun run;
    run.snapshot_steps = snapshot_steps;

    auto record_level = [&](int n) {
        run.series.u_l2q.push_back(l2_q(state.u, mesh, q));
        KineticField dev = state.u;
        for (int i = 0; i < mesh.n_nodes(); ++i)
            for (int k = 0; k < q.n(); ++k) dev(i, k) -= state.ubar[static_cast<std::size_t>(i)];
        run.series.sep_l2q.push_back(l2_q(dev, mesh, q));
        const double t = tg.time(n);
        run.series.gout_dev.push_back(
            gamma_out_deviation(state.u, mesh, q, p.gu.left.value(t), p.gu.right.value(t)));
        run.series.vdxu_l2q.push_back(upwind_vdx_l2q(state.u, mesh, q));
        run.series.c_l2x.push_back(l2_x(cbar, mesh));
        run.series.c_h2x.push_back(h2_x(cbar, mesh));
    };

    auto snapshot_if_due = [&](int n) {
        if (std::find(run.snapshot_steps.begin(), run.snapshot_steps.end(), n) ==
            run.snapshot_steps.end())
            return;
        run.snapshot_times.push_back(tg.time(n));
        run.u_snaps.push_back(state.u);
        run.ubar_snaps.push_back(state.ubar);
        run.cbar_snaps.push_back(cbar);
    };

    record_level(0);
    snapshot_if_due(0);

    for (int n = 0; n < n_t; ++n) {
        const double t_new = tg.time(n + 1);
        ScalarField ubar_guess = state.ubar;
        ScalarField c_new;
        KineticStepResult step;
        for (int j = 0; j < opts.picard_iters; ++j) {
            ScalarField source(static_cast<std::size_t>(mesh.n_nodes()));
            for (std::size_t i = 0; i < source.size(); ++i)
                source[i] = p.gamma * ubar_guess[i];
            c_new = step_parabolic(cbar, source, p, mesh, dt, 1.0, t_new);
            const ScalarField grad = nodal_gradient(c_new, mesh);
            step = step_kinetic(state, p, mesh, q, grad, dt, opts);
            ubar_guess = step.state.ubar;
        }

        run.iters_total += step.iterations;
        run.iters_max = std::max(run.iters_max, step.iterations);
        if (!step.converged) {
            ++run.cap_hits;
            if (run.cap_hits == 1)
                run.warnings.push_back("source-iteration cap (" +
                                       std::to_string(opts.source_iter_max) +
                                       ") first hit at step " + std::to_string(n + 1) +
                                       ", residual " + std::to_string(step.residual));
        }

        // difference quotients between levels n and n+1
        {
            KineticField diff = step.state.u;
            for (int i = 0; i < mesh.n_nodes(); ++i)
                for (int k = 0; k < q.n(); ++k) diff(i, k) = (diff(i, k) - state.u(i, k)) / dt;
            run.series.dtu_l2q.push_back(l2_q(diff, mesh, q));
            ScalarField dc(static_cast<std::size_t>(mesh.n_nodes()));
            for (std::size_t i = 0; i < dc.size(); ++i) dc[i] = (c_new[i] - cbar[i]) / dt;
            run.series.dtc_l2x.push_back(l2_x(dc, mesh));
            run.series.dtc_w1inf.push_back(w1inf_x(dc, mesh));
        }

        state = std::move(step.state);
        cbar = std::move(c_new);

        if (!state.ubar.all_finite() || !cbar.all_finite())
            throw SolverError("run_kinetic: non-finite values at step " + std::to_string(n + 1) +
                              " (t = " + std::to_string(state.t) + ", eps = " +
                              std::to_string(p.epsilon) + ")");

        record_level(n + 1);
        snapshot_if_due(n + 1);
    }

    if (run.cap_hits > 0)
        run.warnings.push_back("source-iteration cap hit in " + std::to_string(run.cap_hits) +
                               " of " + std::to_string(n_t) + " steps");
    return run;
}

} // namespace slabtax
