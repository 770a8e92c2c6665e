#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "slabtax/errors.hpp"

namespace slabtax {

/// Tridiagonal system: sub[i] couples row i to i-1 (sub[0] unused),
/// super[i] couples row i to i+1 (super[n-1] unused).
struct TridiagonalSystem {
    std::vector<double> sub;
    std::vector<double> diag;
    std::vector<double> super;
    std::vector<double> rhs;

    std::size_t size() const { return diag.size(); }

    void require_conformal() const {
        const std::size_t n = diag.size();
        if (sub.size() != n || super.size() != n || rhs.size() != n)
            throw DimensionError("TridiagonalSystem: arrays are not conformal");
    }
};

/// Thomas algorithm.  Assumes diagonal dominance or SPD structure, which the
/// assembled operators here guarantee; a vanishing pivot indicates an
/// assembly bug and raises SolverError.
inline std::vector<double> thomas_solve(const TridiagonalSystem& sys) {
    sys.require_conformal();
    const std::size_t n = sys.size();
    if (n == 0) return {};

    std::vector<double> c(n, 0.0), d(n, 0.0);
    if (sys.diag[0] == 0.0) throw SolverError("thomas_solve: zero pivot at row 0");
    c[0] = sys.super[0] / sys.diag[0];
    d[0] = sys.rhs[0] / sys.diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double denom = sys.diag[i] - sys.sub[i] * c[i - 1];
        if (denom == 0.0 || !std::isfinite(denom))
            throw SolverError("thomas_solve: zero pivot at row " + std::to_string(i));
        c[i] = sys.super[i] / denom;
        d[i] = (sys.rhs[i] - sys.sub[i] * d[i - 1]) / denom;
    }
    std::vector<double> x(n, 0.0);
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
    return x;
}

} // namespace slabtax
