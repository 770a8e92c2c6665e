#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "slabtax/errors.hpp"
#include "slabtax/grid.hpp"
#include "slabtax/quadrature.hpp"

namespace slabtax {

/// Norm kinds used by the diagnostics.
///
/// Spatial integrals use trapezoidal node weights (dx/2 at the two boundary
/// nodes), so constants integrate to the exact domain measure.  The H1
/// seminorm uses forward differences on nodes; time-composed norms use
/// left-endpoint Riemann sums for L2 in time and the max over entries for
/// Linf in time.
enum class NormKind { L2_Q, L2_X, H1_X, GammaOut, LinfT_composed };

inline double node_weight(const SpatialMesh& mesh, int i) {
    const double dx = mesh.dx();
    return (i == 0 || i == mesh.n_cells()) ? 0.5 * dx : dx;
}

inline double l2_x(const ScalarField& f, const SpatialMesh& mesh) {
    if (static_cast<int>(f.size()) != mesh.n_nodes())
        throw DimensionError("l2_x: field size does not match mesh");
    double s = 0.0;
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        const double v = f[static_cast<std::size_t>(i)];
        s += node_weight(mesh, i) * v * v;
    }
    return std::sqrt(s);
}

/// Forward-difference H1 seminorm squared: sum_i dx ((f_{i+1}-f_i)/dx)^2.
inline double h1_seminorm_sq(const ScalarField& f, const SpatialMesh& mesh) {
    if (static_cast<int>(f.size()) != mesh.n_nodes())
        throw DimensionError("h1_seminorm_sq: field size does not match mesh");
    const double dx = mesh.dx();
    double s = 0.0;
    for (int i = 0; i < mesh.n_cells(); ++i) {
        const double d = (f[static_cast<std::size_t>(i) + 1] - f[static_cast<std::size_t>(i)]) / dx;
        s += dx * d * d;
    }
    return s;
}

inline double h1_x(const ScalarField& f, const SpatialMesh& mesh) {
    const double l2 = l2_x(f, mesh);
    return std::sqrt(l2 * l2 + h1_seminorm_sq(f, mesh));
}

/// L2 norm over the phase space Q with measure d(x,v) (no 1/2 factor):
/// ||u||^2 = sum_i omega_i sum_k w_k u_{ik}^2.
inline double l2_q(const KineticField& u, const SpatialMesh& mesh, const VelocityQuadrature& q) {
    u.require_shape(mesh.n_nodes(), q.n(), "l2_q");
    double s = 0.0;
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        const double wi = node_weight(mesh, i);
        double sv = 0.0;
        for (int k = 0; k < q.n(); ++k) {
            const double v = u(i, k);
            sv += q.weights[static_cast<std::size_t>(k)] * v * v;
        }
        s += wi * sv;
    }
    return std::sqrt(s);
}

/// Outflow-trace norm with |v| dGamma weights: the x=0 trace for v<0 and the
/// x=ell trace for v>0.  g_left/g_right are subtracted from the traces, so
/// gamma_out(u, ..., 0, 0) is the plain trace norm.
inline double gamma_out_deviation(const KineticField& u, const SpatialMesh& mesh,
                                  const VelocityQuadrature& q, double g_left, double g_right) {
    u.require_shape(mesh.n_nodes(), q.n(), "gamma_out");
    const int last = mesh.n_cells();
    double s = 0.0;
    for (int k = 0; k < q.n(); ++k) {
        const double v = q.nodes[static_cast<std::size_t>(k)];
        const double w = q.weights[static_cast<std::size_t>(k)];
        if (v < 0.0) {
            const double d = u(0, k) - g_left;
            s += w * (-v) * d * d;
        } else if (v > 0.0) {
            const double d = u(last, k) - g_right;
            s += w * v * d * d;
        }
    }
    return std::sqrt(s);
}

inline double gamma_out(const KineticField& u, const SpatialMesh& mesh,
                        const VelocityQuadrature& q) {
    return gamma_out_deviation(u, mesh, q, 0.0, 0.0);
}

/// Left-endpoint Riemann sum for an L2-in-time composition of per-step values.
inline double time_l2(std::span<const double> values, double dt) {
    double s = 0.0;
    for (double v : values) s += dt * v * v;
    return std::sqrt(s);
}

inline double time_linf(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

inline double time_l4(std::span<const double> values, double dt) {
    double s = 0.0;
    for (double v : values) s += dt * v * v * v * v;
    return std::pow(s, 0.25);
}

// Kind-dispatched entry points.  Each overload accepts the kinds that make
// sense for its argument shape and rejects the rest.

inline double discrete_norm(NormKind kind, const KineticField& u, const SpatialMesh& mesh,
                            const VelocityQuadrature& q) {
    switch (kind) {
        case NormKind::L2_Q: return l2_q(u, mesh, q);
        case NormKind::GammaOut: return gamma_out(u, mesh, q);
        default: throw ConfigError("discrete_norm: kind not applicable to a kinetic field");
    }
}

inline double discrete_norm(NormKind kind, const ScalarField& f, const SpatialMesh& mesh) {
    switch (kind) {
        case NormKind::L2_X: return l2_x(f, mesh);
        case NormKind::H1_X: return h1_x(f, mesh);
        default: throw ConfigError("discrete_norm: kind not applicable to a scalar field");
    }
}

inline double discrete_norm(NormKind kind, std::span<const double> per_step_values, double dt) {
    switch (kind) {
        case NormKind::LinfT_composed: return time_linf(per_step_values);
        case NormKind::L2_Q: // composition of per-step L2 values over time
            return time_l2(per_step_values, dt);
        default: throw ConfigError("discrete_norm: kind not applicable to a time series");
    }
}

/// Nodal derivative with the solver stencil: centered differences in the
/// interior, second-order one-sided at the boundaries.
inline ScalarField nodal_gradient(const ScalarField& f, const SpatialMesh& mesh) {
    if (static_cast<int>(f.size()) != mesh.n_nodes())
        throw DimensionError("nodal_gradient: field size does not match mesh");
    const double dx = mesh.dx();
    const int n = mesh.n_cells();
    ScalarField g(f.size());
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    for (int i = 1; i < n; ++i)
        g[static_cast<std::size_t>(i)] =
            (f[static_cast<std::size_t>(i) + 1] - f[static_cast<std::size_t>(i) - 1]) / (2.0 * dx);
    g[static_cast<std::size_t>(n)] =
        (3.0 * f[static_cast<std::size_t>(n)] - 4.0 * f[static_cast<std::size_t>(n) - 1] +
         f[static_cast<std::size_t>(n) - 2]) /
        (2.0 * dx);
    return g;
}

} // namespace slabtax
