#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "slabtax/grid.hpp"
#include "slabtax/norms.hpp"
#include "slabtax/quadrature.hpp"
#include "support/oracles.hpp"

using namespace slabtax;

TEST_CASE("gauss_legendre small rules") {
    const auto q1 = gauss_legendre(1);
    REQUIRE(q1.n() == 1);
    CHECK(q1.nodes[0] == 0.0);
    CHECK(q1.weights[0] == 2.0);

    const auto q2 = gauss_legendre(2);
    CHECK(q2.nodes[0] == Catch::Approx(-1.0 / std::sqrt(3.0)).margin(1e-15));
    CHECK(q2.nodes[1] == Catch::Approx(1.0 / std::sqrt(3.0)).margin(1e-15));
    CHECK(q2.weights[0] == Catch::Approx(1.0).margin(1e-15));
    CHECK(q2.weights[1] == Catch::Approx(1.0).margin(1e-15));

    const auto q4 = gauss_legendre(4);
    CHECK(q4.second_moment() == Catch::Approx(1.0 / 3.0).margin(1e-14));
}

TEST_CASE("gauss_legendre out-of-range n") {
    CHECK_THROWS_AS(gauss_legendre(0), ConfigError);
    CHECK_THROWS_AS(gauss_legendre(257), ConfigError);
}

TEST_CASE("gauss_legendre matches the Golub-Welsch oracle") {
    for (int n : {3, 4, 8, 16, 33}) {
        const auto mine = gauss_legendre(n);
        const auto ref = oracle::gauss_legendre_golub_welsch(n);
        for (int k = 0; k < n; ++k) {
            CHECK(mine.nodes[static_cast<std::size_t>(k)] ==
                  Catch::Approx(ref.nodes[static_cast<std::size_t>(k)]).margin(1e-13));
            CHECK(mine.weights[static_cast<std::size_t>(k)] ==
                  Catch::Approx(ref.weights[static_cast<std::size_t>(k)]).margin(1e-13));
        }
    }
}

TEST_CASE("quadrature structural invariants") {
    for (int n : {2, 3, 4, 8, 12, 16}) {
        const auto q = gauss_legendre(n);
        double wsum = 0.0, vsum = 0.0;
        for (int k = 0; k < n; ++k) {
            REQUIRE(q.weights[static_cast<std::size_t>(k)] > 0.0);
            CHECK(std::abs(q.nodes[static_cast<std::size_t>(k)]) < 1.0);
            wsum += q.weights[static_cast<std::size_t>(k)];
            vsum += q.weights[static_cast<std::size_t>(k)] * q.nodes[static_cast<std::size_t>(k)];
        }
        CHECK(wsum == Catch::Approx(2.0).margin(1e-14));
        CHECK(std::abs(vsum) < 1e-14);
        if (n >= 2) CHECK(q.second_moment() == Catch::Approx(1.0 / 3.0).margin(1e-14));
        // node symmetry: sorted nodes satisfy v_k = -v_{n-1-k} bitwise
        for (int k = 0; k < n; ++k)
            CHECK(q.nodes[static_cast<std::size_t>(k)] ==
                  -q.nodes[static_cast<std::size_t>(n - 1 - k)]);
        if (n % 2 == 0)
            for (int k = 0; k < n; ++k) CHECK(q.nodes[static_cast<std::size_t>(k)] != 0.0);
    }
}

TEST_CASE("quadrature exactness on random polynomials of degree <= 2n-1") {
    auto rng = oracle::seeded_rng();
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int n : {2, 4, 8}) {
        const auto q = gauss_legendre(n);
        for (int trial = 0; trial < 20; ++trial) {
            const int deg = 2 * n - 1;
            std::vector<double> c(static_cast<std::size_t>(deg) + 1);
            double cnorm = 0.0;
            for (auto& ci : c) {
                ci = coef(rng);
                cnorm += std::abs(ci);
            }
            double quad = 0.0;
            for (int k = 0; k < n; ++k) {
                double p = 0.0;
                for (std::size_t j = c.size(); j-- > 0;)
                    p = p * q.nodes[static_cast<std::size_t>(k)] + c[j];
                quad += q.weights[static_cast<std::size_t>(k)] * p;
            }
            double exact = 0.0; // int_{-1}^{1} x^j dx = 2/(j+1) for even j
            for (std::size_t j = 0; j < c.size(); j += 2) exact += 2.0 * c[j] / (j + 1.0);
            CHECK(std::abs(quad - exact) <= 1e-12 * std::max(1.0, cnorm));
        }
    }
}

TEST_CASE("velocity_average examples") {
    const auto q = gauss_legendre(8);
    const SpatialMesh mesh(1.0, 4);

    KineticField c7(mesh.n_nodes(), q.n(), 7.0);
    const ScalarField a7 = velocity_average(c7, q);
    for (double v : a7.values) CHECK(v == 7.0); // constants reproduce exactly

    KineticField vv(mesh.n_nodes(), q.n());
    for (int i = 0; i < mesh.n_nodes(); ++i)
        for (int k = 0; k < q.n(); ++k) vv(i, k) = q.nodes[static_cast<std::size_t>(k)];
    for (double v : velocity_average(vv, q).values) CHECK(std::abs(v) < 1e-15);

    KineticField v2(mesh.n_nodes(), q.n());
    for (int i = 0; i < mesh.n_nodes(); ++i)
        for (int k = 0; k < q.n(); ++k)
            v2(i, k) = q.nodes[static_cast<std::size_t>(k)] * q.nodes[static_cast<std::size_t>(k)];
    for (double v : velocity_average(v2, q).values)
        CHECK(v == Catch::Approx(1.0 / 3.0).margin(1e-15));

    KineticField bad(mesh.n_nodes(), 4);
    CHECK_THROWS_AS(velocity_average(bad, q), DimensionError);
}

TEST_CASE("velocity_average is a bitwise projection") {
    const auto q = gauss_legendre(8);
    const SpatialMesh mesh(1.0, 8);
    auto rng = oracle::seeded_rng(7u);
    std::uniform_real_distribution<double> val(-3.0, 5.0);
    KineticField u(mesh.n_nodes(), q.n());
    for (int i = 0; i < mesh.n_nodes(); ++i)
        for (int k = 0; k < q.n(); ++k) u(i, k) = val(rng);

    const ScalarField once = velocity_average(u, q);
    const ScalarField twice = velocity_average(extend_in_velocity(once, q), q);
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == once[i]);
}

TEST_CASE("mesh and time grid examples") {
    const SpatialMesh m(1.0, 4);
    CHECK(m.dx() == 0.25);
    CHECK(m.n_nodes() == 5);
    const TimeGrid tg(0.2, 10);
    CHECK(tg.dt() == Catch::Approx(0.02).margin(1e-18));

    // dx = 2/3 is not representable; the endpoint is still exact by design
    const SpatialMesh m2(2.0, 3);
    CHECK(m2.node(0) == 0.0);
    CHECK(m2.node(3) == 2.0);
    for (int i = 0; i < 3; ++i) CHECK(m2.node(i) < m2.node(i + 1));

    CHECK_THROWS_AS(make_mesh(0.0, 4), ConfigError);
    CHECK_THROWS_AS(make_mesh(1.0, 1), ConfigError);
    CHECK_THROWS_AS(make_timegrid(-1.0, 4), ConfigError);
    CHECK_THROWS_AS(make_timegrid(1.0, 0), ConfigError);
}

TEST_CASE("discrete norm examples") {
    const auto q = gauss_legendre(8);
    const SpatialMesh mesh(1.0, 16);

    KineticField ones(mesh.n_nodes(), q.n(), 1.0);
    CHECK(l2_q(ones, mesh, q) == Catch::Approx(std::sqrt(2.0)).margin(1e-14));

    // constant trace: GammaOut = |c| sqrt(sum w|v|); the quadrature of |v|
    // carries a small kink error, so the continuum value |c| holds to ~1%
    double wv = 0.0;
    for (int k = 0; k < q.n(); ++k)
        wv += q.weights[static_cast<std::size_t>(k)] * std::abs(q.nodes[static_cast<std::size_t>(k)]);
    KineticField c3(mesh.n_nodes(), q.n(), -3.0);
    CHECK(gamma_out(c3, mesh, q) == Catch::Approx(3.0 * std::sqrt(wv)).margin(1e-14));
    CHECK(gamma_out(c3, mesh, q) == Catch::Approx(3.0).epsilon(0.01));
}

TEST_CASE("H1 norm against a dense-summation oracle") {
    const SpatialMesh mesh(1.0, 64);
    ScalarField f(static_cast<std::size_t>(mesh.n_nodes()));
    for (int i = 0; i < mesh.n_nodes(); ++i) f[static_cast<std::size_t>(i)] = mesh.node(i);

    // oracle: trapezoid sum of x^2 plus exact unit derivative energy
    double l2sq = 0.0;
    for (int i = 0; i < mesh.n_nodes(); ++i)
        l2sq += node_weight(mesh, i) * mesh.node(i) * mesh.node(i);
    const double h1 = h1_x(f, mesh);
    CHECK(h1 * h1 == Catch::Approx(l2sq + 1.0).margin(1e-13));
    CHECK(h1 * h1 == Catch::Approx(1.0 / 3.0 + 1.0).epsilon(2e-4));
}

TEST_CASE("L2_Q of a velocity-independent field is sqrt(2) L2_X") {
    const auto q = gauss_legendre(6);
    for (double ell : {1.0, 2.5}) {
        const SpatialMesh mesh(ell, 12);
        ScalarField f(static_cast<std::size_t>(mesh.n_nodes()));
        for (int i = 0; i < mesh.n_nodes(); ++i)
            f[static_cast<std::size_t>(i)] = std::sin(3.0 * mesh.node(i)) + 0.5;
        const KineticField u = extend_in_velocity(f, q);
        CHECK(l2_q(u, mesh, q) ==
              Catch::Approx(std::sqrt(2.0) * l2_x(f, mesh)).epsilon(1e-14));
    }
}

TEST_CASE("norm kind dispatch rejects mismatched kinds") {
    const auto q = gauss_legendre(4);
    const SpatialMesh mesh(1.0, 8);
    const KineticField u(mesh.n_nodes(), q.n(), 1.0);
    const ScalarField f(static_cast<std::size_t>(mesh.n_nodes()), 1.0);

    CHECK(discrete_norm(NormKind::L2_Q, u, mesh, q) > 0.0);
    CHECK(discrete_norm(NormKind::GammaOut, u, mesh, q) > 0.0);
    CHECK_THROWS_AS(discrete_norm(NormKind::H1_X, u, mesh, q), ConfigError);
    CHECK(discrete_norm(NormKind::L2_X, f, mesh) > 0.0);
    CHECK(discrete_norm(NormKind::H1_X, f, mesh) > 0.0);
    CHECK_THROWS_AS(discrete_norm(NormKind::GammaOut, f, mesh), ConfigError);

    const std::vector<double> series{1.0, -2.0, 0.5};
    CHECK(discrete_norm(NormKind::LinfT_composed, series, 0.1) == 2.0);
    CHECK_THROWS_AS(discrete_norm(NormKind::H1_X, series, 0.1), ConfigError);
}

TEST_CASE("time composition helpers") {
    const std::vector<double> vals{3.0, 4.0};
    CHECK(time_l2(vals, 0.5) == Catch::Approx(std::sqrt(0.5 * (9.0 + 16.0))).margin(1e-15));
    CHECK(time_linf(vals) == 4.0);
    CHECK(time_l4(vals, 0.5) == Catch::Approx(std::pow(0.5 * (81.0 + 256.0), 0.25)).margin(1e-12));
}
