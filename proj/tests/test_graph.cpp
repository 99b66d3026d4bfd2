#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlsg/dynamics.hpp"
#include "nlsg/graph.hpp"
#include "nlsg/stationary.hpp"

using namespace nlsg;

namespace {
const double r2 = std::sqrt(2.0);
StarGraph g4() { return validate_graph(4, 2, {1, 1, 1, 1}, 1.0); }
StarGraph g3() { return validate_graph(3, 1, {1, r2, r2}, 1.0); }
} // namespace

TEST_CASE("graph validation accepts the balanced examples") {
    CHECK(g4().n_edges == 4);
    CHECK(g3().constraint_residual() < 1e-15);
    CHECK_THROWS_AS(validate_graph(4, 2, {1, 1, 1, 2}, 1.0),
                    constraint_violated);
    CHECK_THROWS_AS(validate_graph(4, 0, {1, 1, 1, 1}, 1.0),
                    invalid_topology);
    CHECK_THROWS_AS(validate_graph(4, 4, {1, 1, 1, 1}, 1.0),
                    invalid_topology);
    CHECK_THROWS_AS(validate_graph(3, 1, {1, -r2, r2}, 1.0),
                    nonpositive_weight);
    CHECK_THROWS_AS(validate_graph(3, 1, {1, r2, r2}, -1.0),
                    nonpositive_weight);
}

TEST_CASE("mass of known states") {
    CHECK(mass(GraphField::zeros(3, EdgeGrid{20.0, 401})) == 0.0);

    // three unit edges carrying sech: total mass 3 * int_0^inf sech^2 = 3
    const StarGraph g = StarGraph::make_unchecked(3, 1, {1, 1, 1}, 1.0);
    const ShiftedState hs = half_soliton(g, make_grid(1.0, 0.0, 0.005));
    CHECK(mass(hs.field) == doctest::Approx(3.0).epsilon(1e-7));

    // shifted state on four unit edges: 2 * ||phi||^2_{L2(R)} = 4
    const ShiftedState st =
        shifted_state(g4(), make_grid(1.0, 0.7, 0.005), 0.7);
    CHECK(mass(st.field) == doctest::Approx(4.0).epsilon(1e-7));
}

TEST_CASE("energy of shifted states matches the closed-form integrals") {
    // E = (sum_in alpha^{-2}) (||phi'||^2 - ||phi||^4) = A (2/3 - 4/3)
    const ShiftedState s4 =
        shifted_state(g4(), make_grid(1.0, 0.7, 0.005), 0.7);
    CHECK(energy(g4(), s4.field) ==
          doctest::Approx(-4.0 / 3.0).epsilon(1e-4));

    const ShiftedState s3 =
        shifted_state(g3(), make_grid(1.0, 0.7, 0.005), 0.7);
    CHECK(energy(g3(), s3.field) ==
          doctest::Approx(-2.0 / 3.0).epsilon(1e-4));

    CHECK(energy(g3(), GraphField::zeros(3, EdgeGrid{20.0, 401})) == 0.0);
}

TEST_CASE("momentum vanishes for real fields and tracks traveling waves") {
    const ShiftedState st =
        shifted_state(g3(), make_grid(1.0, 0.7, 0.01), -0.7);
    CHECK(std::abs(momentum(st.field, st.pattern)) < 1e-14);

    // soliton moving toward the vertex: P = (c/2)(sum_in alpha^{-2})||U||^2
    const double c = 0.8;
    const EdgeGrid grid = make_grid(1.0, 7.0, 0.02);
    const GraphField f = traveling_soliton_field(g3(), grid, c, -5.0);
    const SignPattern m = canonical_pattern(g3(), -1.0);
    CHECK(momentum(f, m) == doctest::Approx(c).epsilon(2e-4));
}

TEST_CASE("vertex residuals") {
    const StarGraph g = g3();
    const ShiftedState hs = half_soliton(g);
    const auto vr = vertex_residuals(g, hs.field);
    CHECK(vr.continuity < 1e-14);
    CHECK(vr.kirchhoff < 1e-5);

    const ShiftedState st = shifted_state(g, 0.9);
    const auto vr2 = vertex_residuals(g, st.field);
    CHECK(vr2.continuity < 1e-13);
    CHECK(vr2.kirchhoff < 1e-3);

    // doubling one edge breaks weighted continuity by alpha^{1/p} phi(0) = 1
    GraphField broken = hs.field;
    for (auto& z : broken.edges[0]) z *= 2.0;
    CHECK(vertex_residuals(g, broken).continuity ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadrature converges at second order") {
    // The admissibility constraint cancels the h^2 boundary terms in the
    // total mass of exact states (those converge at h^4), so probe the
    // trapezoid order on a single off-center bump where the term survives,
    // the energy of a shifted state, and the momentum of a traveling wave.
    const StarGraph g = g4();
    const StarGraph g1 = g3();
    double err_q[3], err_e[3], err_p[3];
    const double hs[3] = {0.04, 0.02, 0.01};
    for (int i = 0; i < 3; ++i) {
        const EdgeGrid grid = make_grid(1.0, 1.0, hs[i]);
        GraphField bump = GraphField::zeros(1, grid);
        for (int k = 0; k < grid.n_points; ++k)
            bump.edges[0][k] = soliton_profile(1.0, grid.x(k) - 1.0);
        err_q[i] = std::abs(mass(bump) - (1.0 + std::tanh(1.0)));

        const ShiftedState st =
            shifted_state(g, make_grid(1.0, 0.7, hs[i]), 0.7);
        err_e[i] = std::abs(energy(g, st.field) + 4.0 / 3.0);

        const GraphField tw = traveling_soliton_field(
            g1, make_grid(1.0, 6.0, hs[i]), 0.8, -4.0);
        err_p[i] = std::abs(
            momentum(tw, canonical_pattern(g1, -1.0)) - 0.8);
    }
    for (int i = 0; i + 1 < 3; ++i) {
        const double oq = std::log2(err_q[i] / err_q[i + 1]);
        const double oe = std::log2(err_e[i] / err_e[i + 1]);
        const double op = std::log2(err_p[i] / err_p[i + 1]);
        CHECK(oq > 1.8);
        CHECK(oq < 2.2);
        CHECK(oe > 1.8);
        CHECK(oe < 2.2);
        CHECK(op > 1.8);
        CHECK(op < 2.4);
    }
}

TEST_CASE("permutation equivariance of mass and energy") {
    // two distinct incoming weights that still balance the outgoing pair
    // sum_in 1/a^2: 1/1 + 1/4 = 1.25 ; outgoing: 2/alpha^2 = 1.25
    const double ao = std::sqrt(2.0 / 1.25);
    const StarGraph g = validate_graph(4, 2, {1.0, 2.0, ao, ao}, 1.0);
    const EdgeGrid grid = make_grid(1.0, 0.6, 0.02);
    const ShiftedState st = shifted_state(g, grid, 0.6);

    StarGraph gp = g;
    std::swap(gp.alphas[0], gp.alphas[1]);
    GraphField fp = st.field;
    std::swap(fp.edges[0], fp.edges[1]);

    CHECK(mass(fp) == doctest::Approx(mass(st.field)).epsilon(1e-14));
    CHECK(energy(gp, fp) ==
          doctest::Approx(energy(g, st.field)).epsilon(1e-14));
    SignPattern m = st.pattern;
    std::swap(m.m[0], m.m[1]);
    CHECK(momentum(fp, m) ==
          doctest::Approx(momentum(st.field, st.pattern)).epsilon(1e-14));
}

TEST_CASE("doubling the truncation length changes the mass negligibly") {
    const StarGraph g = g4();
    const EdgeGrid grid = make_grid(1.0, 0.7, 0.01);
    const EdgeGrid twice{2.0 * grid.length, 2 * grid.n_points - 1};
    const double q1 = mass(shifted_state(g, grid, 0.7).field);
    const double q2 = mass(shifted_state(g, twice, 0.7).field);
    CHECK(std::abs(q2 - q1) / q1 < 1e-10);
}

TEST_CASE("sign patterns") {
    const StarGraph g = g3();
    const SignPattern up = canonical_pattern(g, 0.7);
    CHECK(up.m == std::vector<std::uint8_t>{0, 1, 1});
    const SignPattern dn = canonical_pattern(g, -0.7);
    CHECK(dn.m == std::vector<std::uint8_t>{1, 0, 0});
    CHECK(pattern_admissible(g, up));
    CHECK(std::abs(pattern_balance(g, up)) < 1e-15);
    SignPattern bad{{1, 1, 0}};
    CHECK(!pattern_admissible(g, bad));
}
