#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "slabtax/errors.hpp"
#include "slabtax/grid.hpp"

namespace slabtax {

/// Discrete-ordinates quadrature on the velocity range (-1, 1).
///
/// Nodes are stored in increasing order and are exactly symmetric about 0
/// (the negative half mirrors the positive half bitwise).  Weights are
/// normalized so that their floating-point sum is exactly 2, the measure
/// of the velocity interval.
struct VelocityQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;

    int n() const { return static_cast<int>(nodes.size()); }

    /// 1/2 * sum w_k v_k^2; equals 1/3 up to rounding for any n >= 2.
    double second_moment() const {
        double s = 0.0;
        for (std::size_t k = 0; k < nodes.size(); ++k) s += weights[k] * nodes[k] * nodes[k];
        return 0.5 * s;
    }
};

/// Gauss-Legendre rule with n points on (-1, 1), exact for polynomials of
/// degree <= 2n-1.  Roots of P_n by Newton iteration with the standard
/// Chebyshev-based initial guesses.
inline VelocityQuadrature gauss_legendre(int n) {
    if (n < 1 || n > 256) throw ConfigError("gauss_legendre: n must be in [1, 256]");

    VelocityQuadrature q;
    q.nodes.assign(static_cast<std::size_t>(n), 0.0);
    q.weights.assign(static_cast<std::size_t>(n), 0.0);

    if (n == 1) {
        q.nodes[0] = 0.0;
        q.weights[0] = 2.0;
        return q;
    }

    const int half = n / 2;
    for (int j = 0; j < half; ++j) {
        // j-th root in the upper half, counted from +1 inward
        double x = std::cos(std::numbers::pi * (j + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // evaluate P_n and P_n' by the three-term recurrence
            double p0 = 1.0, p1 = x;
            for (int m = 2; m <= n; ++m) {
                const double p2 = ((2 * m - 1) * x * p1 - (m - 1) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        // one clean-up evaluation of the derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int m = 2; m <= n; ++m) {
            const double p2 = ((2 * m - 1) * x * p1 - (m - 1) * p0) / m;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);

        const std::size_t hi = static_cast<std::size_t>(n - 1 - j);
        const std::size_t lo = static_cast<std::size_t>(j);
        q.nodes[hi] = x;
        q.nodes[lo] = -x; // exact mirror
        q.weights[hi] = w;
        q.weights[lo] = w;
    }
    if (n % 2 == 1) {
        const std::size_t mid = static_cast<std::size_t>(half);
        q.nodes[mid] = 0.0;
        double p0 = 1.0, p1 = 0.0; // P_m(0) recurrence
        for (int m = 2; m <= n; ++m) {
            const double p2 = (-(m - 1) * p0) / m;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (0.0 - p0) / (0.0 - 1.0); // = n*p0
        q.weights[mid] = 2.0 / (dp * dp);
    }

    // nudge the largest weight so the floating-point sum is exactly 2
    double sum = 0.0;
    for (double w : q.weights) sum += w;
    std::size_t imax = 0;
    for (std::size_t k = 1; k < q.weights.size(); ++k)
        if (q.weights[k] > q.weights[imax]) imax = k;
    q.weights[imax] += 2.0 - sum;

    return q;
}

/// Velocity average (bar operator): ubar_i = 1/2 sum_k w_k u(i, k).
///
/// Computed in anchored form ubar = c + 1/2 sum w_k (u - c) with c the value
/// at the heaviest node, so velocity-independent rows are reproduced exactly
/// and averaging is a projection in exact floating-point terms.
inline ScalarField velocity_average(const KineticField& u, const VelocityQuadrature& q) {
    const int nv = q.n();
    if (u.n_velocities() != nv)
        throw DimensionError("velocity_average: field has " + std::to_string(u.n_velocities()) +
                             " velocities, quadrature has " + std::to_string(nv));

    std::size_t anchor = 0;
    for (std::size_t k = 1; k < q.weights.size(); ++k)
        if (q.weights[k] > q.weights[anchor]) anchor = k;

    ScalarField out(static_cast<std::size_t>(u.n_nodes()));
    for (int i = 0; i < u.n_nodes(); ++i) {
        const double c = u(i, static_cast<int>(anchor));
        double s = 0.0;
        for (int k = 0; k < nv; ++k) s += q.weights[static_cast<std::size_t>(k)] * (u(i, k) - c);
        out[static_cast<std::size_t>(i)] = c + 0.5 * s;
    }
    return out;
}

/// Constant-in-velocity extension of a nodal field to the phase space.
inline KineticField extend_in_velocity(const ScalarField& f, const VelocityQuadrature& q) {
    KineticField u(static_cast<int>(f.size()), q.n());
    for (int i = 0; i < u.n_nodes(); ++i)
        for (int k = 0; k < u.n_velocities(); ++k) u(i, k) = f[static_cast<std::size_t>(i)];
    return u;
}

} // namespace slabtax
