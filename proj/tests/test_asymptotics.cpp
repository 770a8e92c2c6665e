#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "slabtax/asymptotics.hpp"
#include "slabtax/keller_segel.hpp"
#include "slabtax/kinetic.hpp"
#include "slabtax/model.hpp"

using namespace slabtax;

TEST_CASE("corrector_u1 examples") {
    const SpatialMesh mesh(1.0, 32);
    const std::size_t n = static_cast<std::size_t>(mesh.n_nodes());

    // constant density, flat chemoattractant
    {
        const ProblemSetup p = build_problem(default_scenario(), mesh);
        const ScalarField u0(n, 5.0), c0(n, 2.0);
        for (double v : corrector_u1(u0, c0, p, mesh).values) CHECK(std::abs(v) < 1e-14);
    }
    // sigma = 1, alpha = 0, linear density: u1 = -1
    {
        ScenarioSpec s = default_scenario();
        s.alpha = 0.0;
        const ProblemSetup p = build_problem(s, mesh);
        ScalarField u0(n), c0(n, 0.0);
        for (int i = 0; i < mesh.n_nodes(); ++i) u0[static_cast<std::size_t>(i)] = mesh.node(i);
        for (double v : corrector_u1(u0, c0, p, mesh).values)
            CHECK(v == Catch::Approx(-1.0).margin(1e-13));
    }
    // sigma = 2, alpha = 1, u0 = 1, c0 = x: u1 = 1/2
    {
        ScenarioSpec s = default_scenario();
        s.sigma_expr = Expr::parse("2");
        const ProblemSetup p = build_problem(s, mesh);
        const ScalarField u0(n, 1.0);
        ScalarField c0(n);
        for (int i = 0; i < mesh.n_nodes(); ++i) c0[static_cast<std::size_t>(i)] = mesh.node(i);
        for (double v : corrector_u1(u0, c0, p, mesh).values)
            CHECK(v == Catch::Approx(0.5).margin(1e-13));
    }
}

TEST_CASE("corrector_u1 is linear in ubar0 when alpha = 0") {
    const SpatialMesh mesh(1.0, 24);
    ScenarioSpec s = default_scenario();
    s.alpha = 0.0;
    const ProblemSetup p = build_problem(s, mesh);
    const std::size_t n = static_cast<std::size_t>(mesh.n_nodes());
    ScalarField a(n), b(n), ab(n), c0(n, 1.0);
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        a[static_cast<std::size_t>(i)] = std::sin(2.0 * mesh.node(i));
        b[static_cast<std::size_t>(i)] = mesh.node(i) * mesh.node(i);
        ab[static_cast<std::size_t>(i)] =
            2.0 * a[static_cast<std::size_t>(i)] - 3.0 * b[static_cast<std::size_t>(i)];
    }
    const auto ua = corrector_u1(a, c0, p, mesh);
    const auto ub = corrector_u1(b, c0, p, mesh);
    const auto uab = corrector_u1(ab, c0, p, mesh);
    for (std::size_t i = 0; i < n; ++i)
        CHECK(uab[i] == Catch::Approx(2.0 * ua[i] - 3.0 * ub[i]).margin(1e-13));
}

namespace {

/// A kinetic run that is exactly the KS trajectory lifted constant in v,
/// with constant fields so the corrector vanishes.
std::pair<KineticRun, KSRun> lifted_constant_trajectories(const SpatialMesh& mesh,
                                                          const VelocityQuadrature& q) {
    KSRun ks;
    KineticRun kin;
    const std::vector<double> times{0.0, 0.05, 0.1};
    ks.snapshot_times = times;
    kin.snapshot_times = times;
    const std::size_t n = static_cast<std::size_t>(mesh.n_nodes());
    for (std::size_t j = 0; j < times.size(); ++j) {
        const ScalarField u(n, 3.0), c(n, 2.0);
        ks.ubar_snaps.push_back(u);
        ks.cbar_snaps.push_back(c);
        kin.ubar_snaps.push_back(u);
        kin.cbar_snaps.push_back(c);
        kin.u_snaps.push_back(extend_in_velocity(u, q));
    }
    const std::size_t nt = 2;
    kin.series.sep_l2q.assign(nt + 1, 0.0);
    kin.series.gout_dev.assign(nt + 1, 0.0);
    return {kin, ks};
}

} // namespace

TEST_CASE("decompose_remainders on a lifted constant trajectory") {
    const SpatialMesh mesh(1.0, 16);
    const auto q = gauss_legendre(8);
    ScenarioSpec spec = default_scenario();
    spec.epsilon = 0.37;
    const ProblemSetup p = build_problem(spec, mesh);
    const TimeGrid tg(0.1, 2);

    auto [kin, ks] = lifted_constant_trajectories(mesh, q);
    const DecompositionReport rep = decompose_remainders(kin, ks, p, mesh, tg, q);
    CHECK(rep.phi_norm < 1e-13);
    CHECK(rep.eta_norm == 0.0);
    CHECK(rep.combined_error < 1e-13);
    CHECK(rep.err_b == 0.0);
    CHECK(rep.err_c == 0.0);
    CHECK(rep.vbar_u1_residual <= 1e-14);
    CHECK(rep.phibar_identity <= 1e-13);
}

TEST_CASE("decompose_remainders rejects mismatched trajectories") {
    const SpatialMesh mesh(1.0, 16);
    const auto q = gauss_legendre(4);
    const ProblemSetup p = build_problem(default_scenario(), mesh);
    const TimeGrid tg(0.1, 2);
    auto [kin, ks] = lifted_constant_trajectories(mesh, q);
    ks.snapshot_times.pop_back();
    ks.ubar_snaps.pop_back();
    ks.cbar_snaps.pop_back();
    CHECK_THROWS_AS(decompose_remainders(kin, ks, p, mesh, tg, q), DimensionError);
}

TEST_CASE("decomposition identities on a real coupled run") {
    const SpatialMesh mesh(1.0, 48);
    const auto q = gauss_legendre(8);
    const double T = 0.1;
    const int nt = 100;
    const TimeGrid tg(T, nt);
    ScenarioSpec spec = default_scenario();
    spec.horizon = T;
    spec.epsilon = 0.25;
    const ProblemSetup p = build_problem(spec, mesh);
    const auto steps = snapshot_step_indices(nt, 8);

    const auto kin = run_kinetic(p, mesh, tg, q, SolverOptions{}, steps);
    const auto ks = run_ks(p, mesh, tg, q, steps);
    const DecompositionReport rep = decompose_remainders(kin, ks, p, mesh, tg, q);

    // bar(v u1) residual vanishes by quadrature symmetry
    CHECK(rep.vbar_u1_residual <= 1e-13);
    // bar(phi) = ubar - ubar0 (velocity average of eps v u1 is exactly 0)
    CHECK(rep.phibar_identity <= 1e-13);
    // reassembling ubar0 + eps v u1 + phi reproduces u bitwise is structural
    // (phi is stored as the difference); spot-check the norms are consistent
    CHECK(rep.combined_error >= rep.u_err_linf_l2q);
    CHECK(rep.combined_error >= rep.c_err_linf_h1);
}

TEST_CASE("theorem_bounds_report on degenerate trajectories") {
    const SpatialMesh mesh(1.0, 16);
    const auto q = gauss_legendre(4);
    const int nt = 10;
    const TimeGrid tg(0.1, nt);

    // zero data: all bounds vanish
    {
        ScenarioSpec spec;
        spec.epsilon = 0.5;
        spec.horizon = 0.1;
        const ProblemSetup p = build_problem(spec, mesh);
        const auto run = run_kinetic(p, mesh, tg, q, SolverOptions{}, {nt});
        const BoundsReport rep = theorem_bounds_report(run, p, tg);
        for (double v : rep.values()) CHECK(v == 0.0);
    }
    // constant equilibrium: (b) and (c) are zero, (a) is the constant's norm
    {
        ScenarioSpec spec = default_scenario();
        spec.alpha = 0.0;
        spec.u0 = Expr::parse("2");
        spec.gu_left = spec.gu_right = Expr::parse("2");
        spec.c0 = Expr::parse("2");
        spec.gc_left = spec.gc_right = Expr::parse("2");
        spec.gamma = 0.0;
        spec.beta = 0.0;
        spec.epsilon = 0.3;
        spec.horizon = 0.1;
        const ProblemSetup p = build_problem(spec, mesh);
        const auto run = run_kinetic(p, mesh, tg, q, SolverOptions{}, {nt});
        const BoundsReport rep = theorem_bounds_report(run, p, tg);
        CHECK(rep.a_u_c0_l2q == Catch::Approx(2.0 * std::sqrt(2.0)).margin(1e-12));
        CHECK(rep.b_sep_l2l2q < 1e-12);
        CHECK(rep.c_gout_l2 < 1e-12);
    }
}

TEST_CASE("bound (a) is stable under mesh refinement") {
    const auto q = gauss_legendre(8);
    ScenarioSpec spec = default_scenario();
    spec.epsilon = 0.25;
    const double T = spec.horizon;

    auto bound_a = [&](int nx, int nt) {
        const SpatialMesh mesh(1.0, nx);
        const TimeGrid tg(T, nt);
        const ProblemSetup p = build_problem(spec, mesh);
        const auto run = run_kinetic(p, mesh, tg, q, SolverOptions{}, {nt});
        return theorem_bounds_report(run, p, tg).a_u_c0_l2q;
    };
    const double a1 = bound_a(64, 100);
    const double a2 = bound_a(128, 200);
    CHECK(std::abs(a1 - a2) / a1 < 0.02);
}

TEST_CASE("fit_rate examples") {
    const std::vector<double> eps{0.5, 0.25, 0.125, 0.0625};

    std::vector<double> e1;
    for (double e : eps) e1.push_back(3.0 * e);
    const RateFit f1 = fit_rate(eps, e1);
    CHECK(f1.slope == Catch::Approx(1.0).margin(1e-12));
    CHECK(f1.r_squared == Catch::Approx(1.0).margin(1e-12));
    CHECK(std::exp(f1.intercept) == Catch::Approx(3.0).margin(1e-10));

    std::vector<double> e2;
    for (double e : eps) e2.push_back(5.0 * std::sqrt(e));
    CHECK(fit_rate(eps, e2).slope == Catch::Approx(0.5).margin(1e-12));

    const std::vector<double> e3(eps.size(), 0.7);
    CHECK(fit_rate(eps, e3).slope == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("fit_rate validation") {
    CHECK_THROWS_AS(fit_rate({0.5, 0.25}, {1.0, 0.5}), ValidationError);
    CHECK_THROWS_AS(fit_rate({0.5, 0.25, 0.125}, {1.0, 0.0, 0.5}), ValidationError);
    CHECK_THROWS_AS(fit_rate({0.5, 0.25, -0.125}, {1.0, 0.5, 0.25}), ValidationError);
    CHECK_THROWS_AS(fit_rate({0.25, 0.5, 0.125}, {1.0, 0.5, 0.25}), ValidationError);
    CHECK_THROWS_AS(fit_rate({0.5, 0.25, 0.125}, {1.0, 0.5}), ValidationError);
}

TEST_CASE("fit_rate slope is invariant under scaling of the errors") {
    const std::vector<double> eps{0.8, 0.4, 0.2, 0.1, 0.05};
    std::vector<double> errs;
    for (double e : eps) errs.push_back(2.0 * std::pow(e, 0.83) * (1.0 + 0.05 * std::sin(e)));
    const RateFit base = fit_rate(eps, errs);
    std::vector<double> scaled;
    for (double e : errs) scaled.push_back(37.0 * e);
    const RateFit sc = fit_rate(eps, scaled);
    CHECK(sc.slope == Catch::Approx(base.slope).margin(1e-12));
    CHECK(sc.intercept == Catch::Approx(base.intercept + std::log(37.0)).margin(1e-10));
    CHECK(sc.r_squared == Catch::Approx(base.r_squared).margin(1e-10));
}

TEST_CASE("combined error halves between eps = 1/4 and eps = 1/8 on the fine grid",
          "[integration]") {
    const auto q = gauss_legendre(8);
    const int nx = 128, nt = 400;
    ScenarioSpec spec = default_scenario();
    const SpatialMesh mesh(1.0, nx);
    const TimeGrid tg(spec.horizon, nt);
    const auto steps = snapshot_step_indices(nt, 32);

    const SpatialMesh rmesh(1.0, nx * 4);
    const TimeGrid rtg(spec.horizon, nt * 16);
    std::vector<int> rsteps = steps;
    for (int& s : rsteps) s *= 16;
    const ProblemSetup rp = build_problem(spec, rmesh);
    const KSRun ref = restrict_ks(run_ks(rp, rmesh, rtg, q, rsteps), 4);

    auto combined_at = [&](double eps) {
        ScenarioSpec s = spec;
        s.epsilon = eps;
        const ProblemSetup p = build_problem(s, mesh);
        const auto kin = run_kinetic(p, mesh, tg, q, SolverOptions{}, steps);
        return decompose_remainders(kin, ref, p, mesh, tg, q).combined_error;
    };
    const double ratio = combined_at(0.25) / combined_at(0.125);
    INFO("combined error ratio " << ratio);
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.4);
}
