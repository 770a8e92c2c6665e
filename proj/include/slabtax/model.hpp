#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "slabtax/errors.hpp"
#include "slabtax/expression.hpp"
#include "slabtax/grid.hpp"
#include "slabtax/quadrature.hpp"

namespace slabtax {

/// Smooth time function with two analytic derivatives (the W^{2,inf}
/// surrogate required of boundary data).
class TimeFunction {
  public:
    TimeFunction() : TimeFunction(Expr::parse("0")) {}
    explicit TimeFunction(Expr f)
        : f_(f), d1_(f.diff(Expr::Var::T)), d2_(f.diff(Expr::Var::T).diff(Expr::Var::T)) {
        if (f.uses(Expr::Var::X))
            throw ValidationError("boundary data must be a function of t only");
    }

    double value(double t) const { return f_.eval(0.0, t); }
    double deriv1(double t) const { return d1_.eval(0.0, t); }
    double deriv2(double t) const { return d2_.eval(0.0, t); }
    const Expr& expr() const { return f_; }

  private:
    Expr f_, d1_, d2_;
};

/// Endpoint time functions plus their linear-in-x extension
/// g(x,t) = g_left(t) (1 - x/ell) + g_right(t) x/ell.
struct BoundaryData {
    TimeFunction left;
    TimeFunction right;

    double extension(double x, double t, double ell) const {
        const double s = x / ell;
        return left.value(t) * (1.0 - s) + right.value(t) * s;
    }
    double extension_dx(double t, double ell) const {
        return (right.value(t) - left.value(t)) / ell;
    }
};

/// Parsed, not yet sampled, problem description.  sigma may be given either
/// as an expression in x or as per-node values on the target mesh.
struct ScenarioSpec {
    double ell = 1.0;
    double horizon = 0.2;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double diffusivity = 1.0;
    double epsilon = 0.5;

    Expr sigma_expr = Expr::parse("1");
    std::optional<std::vector<double>> sigma_values;

    Expr u0 = Expr::parse("0");
    Expr c0 = Expr::parse("0");
    Expr gu_left = Expr::parse("0");
    Expr gu_right = Expr::parse("0");
    Expr gc_left = Expr::parse("0");
    Expr gc_right = Expr::parse("0");
};

/// The scenario used throughout the bundled studies.  Data satisfy the
/// compatibility conditions exactly (in floating point, not just up to
/// truncation): u0(0) = u0(1) = 1 = gu; c0 = 1 + cos(pi x)/16 matches gc at
/// t = 0; and the gc slopes equal D c0'' - beta c0 + gamma u0 at the
/// endpoints, which for this c0 reduces to -(pi^2+1)/16 on the left and
/// +(pi^2+1)/16 on the right.
inline ScenarioSpec default_scenario() {
    ScenarioSpec s;
    s.u0 = Expr::parse("1 + x*(1 - x)");
    s.c0 = Expr::parse("1 + cos(pi*x)/16");
    s.gu_left = Expr::parse("1");
    s.gu_right = Expr::parse("1");
    s.gc_left = Expr::parse("1.0625 - ((pi^2 + 1)/16)*t");
    s.gc_right = Expr::parse("0.9375 + ((pi^2 + 1)/16)*t");
    return s;
}

/// Fully sampled problem: parameters, coefficient field, initial data and
/// boundary functions for one mesh.  Immutable after construction.
struct ProblemSetup {
    double alpha = 0.0, beta = 0.0, gamma = 0.0, diffusivity = 0.0;
    double epsilon = 0.0;
    double ell = 0.0, horizon = 0.0;

    ScalarField sigma;
    double sigma_min = 0.0, sigma_max = 0.0;

    ScalarField u0;
    ScalarField c0;
    BoundaryData gu;
    BoundaryData gc;

    // kept for the analytic compatibility path and for manifests
    std::optional<Expr> u0_expr, c0_expr;
};

inline ScalarField sample_expression(const Expr& e, const SpatialMesh& mesh, double t = 0.0) {
    ScalarField f(static_cast<std::size_t>(mesh.n_nodes()));
    for (int i = 0; i < mesh.n_nodes(); ++i)
        f[static_cast<std::size_t>(i)] = e.eval(mesh.node(i), t);
    return f;
}

inline ProblemSetup build_problem(const ScenarioSpec& spec, const SpatialMesh& mesh) {
    if (!(spec.diffusivity > 0.0)) throw ValidationError("D must be positive");
    if (spec.alpha < 0.0 || spec.beta < 0.0 || spec.gamma < 0.0)
        throw ValidationError("alpha, beta, gamma must be nonnegative");
    if (!(spec.epsilon > 0.0) || spec.epsilon > 1.0)
        throw ValidationError("epsilon must be positive and at most 1");
    if (!(spec.horizon > 0.0)) throw ValidationError("T must be positive");
    if (spec.ell != mesh.ell()) throw DimensionError("scenario ell does not match mesh");

    ProblemSetup p;
    p.alpha = spec.alpha;
    p.beta = spec.beta;
    p.gamma = spec.gamma;
    p.diffusivity = spec.diffusivity;
    p.epsilon = spec.epsilon;
    p.ell = spec.ell;
    p.horizon = spec.horizon;

    if (spec.sigma_values) {
        if (static_cast<int>(spec.sigma_values->size()) != mesh.n_nodes())
            throw ConfigError("sigma: expected " + std::to_string(mesh.n_nodes()) +
                              " per-node values, got " + std::to_string(spec.sigma_values->size()));
        p.sigma.values = *spec.sigma_values;
    } else {
        if (spec.sigma_expr.uses(Expr::Var::T))
            throw ValidationError("sigma must not depend on t");
        p.sigma = sample_expression(spec.sigma_expr, mesh);
    }
    p.sigma_min = *std::min_element(p.sigma.values.begin(), p.sigma.values.end());
    p.sigma_max = *std::max_element(p.sigma.values.begin(), p.sigma.values.end());
    if (!(p.sigma_min > 0.0))
        throw ValidationError("sigma must be positive everywhere (min = " +
                              std::to_string(p.sigma_min) + ")");

    if (spec.u0.uses(Expr::Var::T) || spec.c0.uses(Expr::Var::T))
        throw ValidationError("initial data must be functions of x only");
    p.u0 = sample_expression(spec.u0, mesh);
    p.c0 = sample_expression(spec.c0, mesh);
    p.u0_expr = spec.u0;
    p.c0_expr = spec.c0;

    p.gu = BoundaryData{TimeFunction(spec.gu_left), TimeFunction(spec.gu_right)};
    p.gc = BoundaryData{TimeFunction(spec.gc_left), TimeFunction(spec.gc_right)};

    // boundary data must be finite over the horizon
    for (const TimeFunction* tf : {&p.gu.left, &p.gu.right, &p.gc.left, &p.gc.right})
        for (double t : {0.0, 0.5 * p.horizon, p.horizon})
            if (!std::isfinite(tf->value(t)) || !std::isfinite(tf->deriv1(t)) ||
                !std::isfinite(tf->deriv2(t)))
                throw ValidationError("boundary data not finite on [0, T]");

    if (!p.u0.all_finite() || !p.c0.all_finite())
        throw ValidationError("initial data not finite on the mesh");

    return p;
}

/// How the validator obtains d^2 c0/dx^2 at the endpoints.
enum class CxxMode {
    Auto,           ///< analytic when c0 is expression-backed, else finite differences
    Analytic,       ///< require the expression; exact
    FiniteDifference ///< 3-point one-sided second differences, O(dx)
};

struct CompatibilityCheck {
    std::string name;
    double location = 0.0;
    double residual = 0.0;
    bool pass = false;
};

struct CompatibilityReport {
    std::vector<CompatibilityCheck> checks;
    bool all_pass = true;
    std::string cxx_method;

    double max_residual() const {
        double m = 0.0;
        for (const auto& c : checks) m = std::max(m, std::abs(c.residual));
        return m;
    }
};

/// Checks the three data compatibility conditions at both endpoints:
///   gu(0) = u0,  gc(0) = c0,  dgc/dt(0) = D c0'' - beta c0 + gamma u0.
/// Always returns a report; callers decide whether a failure aborts.
inline CompatibilityReport validate_compatibility(const ProblemSetup& p, const SpatialMesh& mesh,
                                                  double tol = 1e-8,
                                                  CxxMode mode = CxxMode::Auto) {
    if (tol < 0.0) throw ConfigError("validate_compatibility: tol must be nonnegative");
    CompatibilityReport rep;

    const bool analytic = (mode == CxxMode::Analytic) ||
                          (mode == CxxMode::Auto && p.c0_expr.has_value());
    if (mode == CxxMode::Analytic && !p.c0_expr)
        throw ConfigError("validate_compatibility: no expression available for c0");
    rep.cxx_method = analytic ? "analytic" : "one-sided-fd";

    const int last = mesh.n_cells();
    const double dx = mesh.dx();

    const auto cxx_at = [&](bool left_end) {
        if (analytic) {
            const Expr d2 = p.c0_expr->diff(Expr::Var::X).diff(Expr::Var::X);
            return d2.eval(left_end ? mesh.node(0) : mesh.node(last), 0.0);
        }
        const auto& c = p.c0.values;
        if (left_end) return (c[0] - 2.0 * c[1] + c[2]) / (dx * dx);
        const std::size_t nl = static_cast<std::size_t>(last);
        return (c[nl] - 2.0 * c[nl - 1] + c[nl - 2]) / (dx * dx);
    };

    const auto push = [&](const std::string& name, double x, double residual) {
        CompatibilityCheck c;
        c.name = name;
        c.location = x;
        c.residual = residual;
        c.pass = std::abs(residual) <= tol;
        rep.all_pass = rep.all_pass && c.pass;
        rep.checks.push_back(c);
    };

    for (bool left : {true, false}) {
        const double x = left ? mesh.node(0) : mesh.node(last);
        const std::size_t i = left ? 0 : static_cast<std::size_t>(last);
        const TimeFunction& gu = left ? p.gu.left : p.gu.right;
        const TimeFunction& gc = left ? p.gc.left : p.gc.right;

        push("gu(0) = u0", x, gu.value(0.0) - p.u0[i]);
        push("gc(0) = c0", x, gc.value(0.0) - p.c0[i]);
        const double rhs = p.diffusivity * cxx_at(left) - p.beta * p.c0[i] + p.gamma * p.u0[i];
        push("dgc/dt(0) = D c0'' - beta c0 + gamma u0", x, gc.deriv1(0.0) - rhs);
    }
    return rep;
}

/// Motility and chemotactic coefficient of the limit system:
/// mu = (1/2 int v^2 dv) / sigma and chi = alpha * mu, computed nodewise.
/// chi is stored as the literal product, so chi == alpha*mu bitwise.
struct LimitCoefficients {
    ScalarField mu;
    ScalarField chi;
};

inline LimitCoefficients limit_coefficients(const ProblemSetup& p, const VelocityQuadrature& q) {
    const double m2 = q.second_moment();
    LimitCoefficients lc;
    lc.mu.values.resize(p.sigma.size());
    lc.chi.values.resize(p.sigma.size());
    for (std::size_t i = 0; i < p.sigma.size(); ++i) {
        lc.mu[i] = m2 / p.sigma[i];
        lc.chi[i] = p.alpha * lc.mu[i];
    }
    return lc;
}

} // namespace slabtax
