#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "slabtax/errors.hpp"
#include "slabtax/grid.hpp"
#include "slabtax/keller_segel.hpp"
#include "slabtax/kinetic.hpp"
#include "slabtax/model.hpp"
#include "slabtax/norms.hpp"
#include "slabtax/quadrature.hpp"

namespace slabtax {

/// First-order corrector of the expansion u = ubar0 + eps v u1 + phi:
///   u1 = (-d/dx ubar0 + alpha d/dx cbar0 * ubar0) / sigma,
/// with the same nodal gradient stencil the solvers use.
inline ScalarField corrector_u1(const ScalarField& ubar0, const ScalarField& cbar0,
                                const ProblemSetup& p, const SpatialMesh& mesh) {
    const ScalarField du = nodal_gradient(ubar0, mesh);
    const ScalarField dc = nodal_gradient(cbar0, mesh);
    ScalarField u1(ubar0.size());
    for (std::size_t i = 0; i < u1.size(); ++i)
        u1[i] = (-du[i] + p.alpha * dc[i] * ubar0[i]) / p.sigma[i];
    return u1;
}

struct DecompositionReport {
    std::vector<ScalarField> u1;     ///< corrector at each output time
    double phi_norm = 0.0;           ///< ||phi||_{Linf(0,T; L2(Q))}
    double eta_norm = 0.0;           ///< ||eta||_{Linf(0,T; H1(X))}
    double u_err_linf_l2q = 0.0;     ///< ||u - ubar0||_{Linf(0,T; L2(Q))}
    double c_err_linf_h1 = 0.0;      ///< ||c - cbar0||_{Linf(0,T; H1(X))}
    double combined_error = 0.0;     ///< sum of the two terms above
    double err_b = 0.0;              ///< ||u - ubar||_{L2(0,T; L2(Q))}
    double err_c = 0.0;              ///< ||u - gu||_{L2(0,T; Gamma_out)}
    double vbar_u1_residual = 0.0;   ///< max |bar(v u1)| over nodes and times
    double phibar_identity = 0.0;    ///< max |bar(phi) - (ubar - ubar0)|
};

/// Evaluates the remainder decomposition of a kinetic trajectory against the
/// limit trajectory on the same grid and output times:
///   phi = u - ubar0 - eps v u1,    eta = c - cbar0.
inline DecompositionReport decompose_remainders(const KineticRun& kin, const KSRun& ks,
                                                const ProblemSetup& p, const SpatialMesh& mesh,
                                                const TimeGrid& tg, const VelocityQuadrature& q) {
    if (kin.snapshot_times.size() != ks.snapshot_times.size())
        throw DimensionError("decompose_remainders: trajectories have different output times");
    for (std::size_t j = 0; j < kin.snapshot_times.size(); ++j)
        if (kin.snapshot_times[j] != ks.snapshot_times[j])
            throw DimensionError("decompose_remainders: output times do not match");
    if (!kin.u_snaps.empty() && !ks.ubar_snaps.empty() &&
        kin.u_snaps.front().n_nodes() != static_cast<int>(ks.ubar_snaps.front().size()))
        throw DimensionError("decompose_remainders: trajectories live on different grids");

    DecompositionReport rep;
    const double eps = p.epsilon;

    for (std::size_t j = 0; j < kin.snapshot_times.size(); ++j) {
        const KineticField& u = kin.u_snaps[j];
        const ScalarField& ubar0 = ks.ubar_snaps[j];
        const ScalarField& cbar0 = ks.cbar_snaps[j];
        const ScalarField u1 = corrector_u1(ubar0, cbar0, p, mesh);

        KineticField phi(u.n_nodes(), u.n_velocities());
        KineticField u_minus_u0(u.n_nodes(), u.n_velocities());
        for (int i = 0; i < u.n_nodes(); ++i) {
            const std::size_t si = static_cast<std::size_t>(i);
            for (int k = 0; k < u.n_velocities(); ++k) {
                const double vk = q.nodes[static_cast<std::size_t>(k)];
                u_minus_u0(i, k) = u(i, k) - ubar0[si];
                phi(i, k) = u_minus_u0(i, k) - eps * vk * u1[si];
            }
        }

        rep.phi_norm = std::max(rep.phi_norm, l2_q(phi, mesh, q));
        rep.u_err_linf_l2q = std::max(rep.u_err_linf_l2q, l2_q(u_minus_u0, mesh, q));

        ScalarField eta(cbar0.size());
        for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = kin.cbar_snaps[j][i] - cbar0[i];
        rep.eta_norm = std::max(rep.eta_norm, h1_x(eta, mesh));
        rep.c_err_linf_h1 = rep.eta_norm;

        // bar(v u1) vanishes by node symmetry; record the residual
        double mean_v = 0.0;
        for (int k = 0; k < q.n(); ++k)
            mean_v += q.weights[static_cast<std::size_t>(k)] * q.nodes[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < u1.size(); ++i)
            rep.vbar_u1_residual = std::max(rep.vbar_u1_residual, std::abs(0.5 * mean_v * u1[i]));

        // consequence bar(phi) = ubar - ubar0
        const ScalarField phibar = velocity_average(phi, q);
        const ScalarField& ubar = kin.ubar_snaps[j];
        for (std::size_t i = 0; i < phibar.size(); ++i)
            rep.phibar_identity =
                std::max(rep.phibar_identity, std::abs(phibar[i] - (ubar[i] - ubar0[i])));

        rep.u1.push_back(u1);
    }

    rep.combined_error = rep.u_err_linf_l2q + rep.c_err_linf_h1;

    const double dt = tg.dt();
    const std::size_t nt = static_cast<std::size_t>(tg.n_steps());
    rep.err_b = time_l2({kin.series.sep_l2q.data(), nt}, dt);
    rep.err_c = time_l2({kin.series.gout_dev.data(), nt}, dt);
    return rep;
}

/// Discrete surrogates of the a-priori bounds (a)-(h).  Only (b) and (c)
/// carry pass/fail thresholds, applied at sweep level through their slopes;
/// the rest are reported as magnitudes.
struct BoundsReport {
    double a_u_c0_l2q = 0.0;
    double b_sep_l2l2q = 0.0;
    double c_gout_l2 = 0.0;
    double d_eps_dtu_c0 = 0.0;
    double e_vdxu_l2l2q = 0.0;
    double f_c_h1_l2x = 0.0;
    double g_c_l2_h2x = 0.0;
    double h_eps_dtc_l4_w1inf = 0.0;

    static constexpr std::array<const char*, 8> names = {
        "a_u_c0_l2q",   "b_sep_l2l2q",  "c_gout_l2",   "d_eps_dtu_c0",
        "e_vdxu_l2l2q", "f_c_h1_l2x",   "g_c_l2_h2x",  "h_eps_dtc_l4_w1inf"};

    std::array<double, 8> values() const {
        return {a_u_c0_l2q,   b_sep_l2l2q, c_gout_l2,  d_eps_dtu_c0,
                e_vdxu_l2l2q, f_c_h1_l2x,  g_c_l2_h2x, h_eps_dtc_l4_w1inf};
    }
};

inline BoundsReport theorem_bounds_report(const KineticRun& kin, const ProblemSetup& p,
                                          const TimeGrid& tg) {
    const double dt = tg.dt();
    const std::size_t nt = static_cast<std::size_t>(tg.n_steps());
    BoundsReport rep;
    rep.a_u_c0_l2q = time_linf(kin.series.u_l2q);
    rep.b_sep_l2l2q = time_l2({kin.series.sep_l2q.data(), nt}, dt);
    rep.c_gout_l2 = time_l2({kin.series.gout_dev.data(), nt}, dt);
    rep.d_eps_dtu_c0 = p.epsilon * time_linf(kin.series.dtu_l2q);
    rep.e_vdxu_l2l2q = time_l2({kin.series.vdxu_l2q.data(), nt}, dt);
    const double c_l2 = time_l2({kin.series.c_l2x.data(), nt}, dt);
    const double dtc_l2 = time_l2(kin.series.dtc_l2x, dt);
    rep.f_c_h1_l2x = std::sqrt(c_l2 * c_l2 + dtc_l2 * dtc_l2);
    rep.g_c_l2_h2x = time_l2({kin.series.c_h2x.data(), nt}, dt);
    rep.h_eps_dtc_l4_w1inf = p.epsilon * time_l4(kin.series.dtc_w1inf, dt);
    return rep;
}

struct RateFit {
    std::vector<double> epsilons;
    std::vector<double> errors;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares line through (log eps, log err).
inline RateFit fit_rate(const std::vector<double>& epsilons, const std::vector<double>& errors) {
    if (epsilons.size() != errors.size())
        throw ValidationError("fit_rate: epsilon and error lists differ in length");
    if (epsilons.size() < 3) throw ValidationError("fit_rate: need at least 3 points");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) throw ValidationError("fit_rate: epsilons must be positive");
        if (!(errors[i] > 0.0)) throw ValidationError("fit_rate: errors must be positive");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
            throw ValidationError("fit_rate: epsilons must be strictly decreasing");
    }

    const std::size_t n = epsilons.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(epsilons[i]);
        const double y = std::log(errors[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    const double denom = n * sxx - sx * sx;
    RateFit fit;
    fit.epsilons = epsilons;
    fit.errors = errors;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = std::log(errors[i]);
        const double yhat = fit.intercept + fit.slope * std::log(epsilons[i]);
        ss_res += (y - yhat) * (y - yhat);
    }
    fit.r_squared = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
    return fit;
}

} // namespace slabtax
