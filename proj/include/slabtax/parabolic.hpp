#pragma once

#include <cmath>
#include <cstddef>

#include "slabtax/errors.hpp"
#include "slabtax/grid.hpp"
#include "slabtax/model.hpp"
#include "slabtax/tridiag.hpp"

namespace slabtax {

/// One theta-method step of the chemoattractant equation
///   dc/dt - D c'' + beta c = source
/// with strong Dirichlet data gc(t_new) at the boundary nodes and a
/// second-order central Laplacian.  theta = 1 is backward Euler (the default
/// inside coupled runs), theta = 1/2 Crank-Nicolson.  The source must be
/// sampled at the theta-consistent time level by the caller.
inline ScalarField step_parabolic(const ScalarField& cbar, const ScalarField& source,
                                  const ProblemSetup& p, const SpatialMesh& mesh, double dt,
                                  double theta, double t_new) {
    if (static_cast<int>(cbar.size()) != mesh.n_nodes() ||
        static_cast<int>(source.size()) != mesh.n_nodes())
        throw DimensionError("step_parabolic: field sizes do not match mesh");
    if (!(dt > 0.0)) throw ConfigError("step_parabolic: dt must be positive");
    if (theta < 0.0 || theta > 1.0) throw ConfigError("step_parabolic: theta must be in [0, 1]");

    const std::size_t n = cbar.size();
    const int last = mesh.n_cells();
    const double dx = mesh.dx();
    const double r = p.diffusivity / (dx * dx);

    TridiagonalSystem sys;
    sys.sub.assign(n, 0.0);
    sys.diag.assign(n, 0.0);
    sys.super.assign(n, 0.0);
    sys.rhs.assign(n, 0.0);

    sys.diag[0] = 1.0;
    sys.rhs[0] = p.gc.left.value(t_new);
    sys.diag[static_cast<std::size_t>(last)] = 1.0;
    sys.rhs[static_cast<std::size_t>(last)] = p.gc.right.value(t_new);

    for (int i = 1; i < last; ++i) {
        const std::size_t s = static_cast<std::size_t>(i);
        sys.sub[s] = -theta * r;
        sys.super[s] = -theta * r;
        sys.diag[s] = 1.0 / dt + theta * (2.0 * r + p.beta);
        const double lap_old = r * (cbar[s + 1] - 2.0 * cbar[s] + cbar[s - 1]);
        sys.rhs[s] = cbar[s] / dt + (1.0 - theta) * (lap_old - p.beta * cbar[s]) + source[s];
    }

    ScalarField out(n);
    out.values = thomas_solve(sys);
    return out;
}

/// Direct solve of the steady problem -D c'' + beta c = source with the
/// Dirichlet data gc evaluated at t = 0.  Serves as a test oracle for the
/// time stepper's long-time limit.
inline ScalarField steady_state_solve(const ProblemSetup& p, const SpatialMesh& mesh,
                                      const ScalarField& source) {
    if (static_cast<int>(source.size()) != mesh.n_nodes())
        throw DimensionError("steady_state_solve: source size does not match mesh");
    const std::size_t n = source.size();
    const int last = mesh.n_cells();
    const double dx = mesh.dx();
    const double r = p.diffusivity / (dx * dx);

    TridiagonalSystem sys;
    sys.sub.assign(n, 0.0);
    sys.diag.assign(n, 0.0);
    sys.super.assign(n, 0.0);
    sys.rhs.assign(n, 0.0);

    sys.diag[0] = 1.0;
    sys.rhs[0] = p.gc.left.value(0.0);
    sys.diag[static_cast<std::size_t>(last)] = 1.0;
    sys.rhs[static_cast<std::size_t>(last)] = p.gc.right.value(0.0);

    for (int i = 1; i < last; ++i) {
        const std::size_t s = static_cast<std::size_t>(i);
        sys.sub[s] = -r;
        sys.super[s] = -r;
        sys.diag[s] = 2.0 * r + p.beta;
        sys.rhs[s] = source[s];
    }

    ScalarField out(n);
    out.values = thomas_solve(sys);
    return out;
}

} // namespace slabtax
