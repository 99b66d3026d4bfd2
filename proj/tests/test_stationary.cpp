#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlsg/graph.hpp"
#include "nlsg/stationary.hpp"

using namespace nlsg;

namespace {
const double r2 = std::sqrt(2.0);
StarGraph g4() { return validate_graph(4, 2, {1, 1, 1, 1}, 1.0); }
StarGraph g3() { return validate_graph(3, 1, {1, r2, r2}, 1.0); }
} // namespace

TEST_CASE("profile values") {
    CHECK(soliton_profile(1.0, 0.0) == 1.0);
    CHECK(soliton_profile(2.0, 0.0) == 1.0);
    // sech(1) = 2/(e + 1/e)
    const double sech1 = 2.0 / (std::exp(1.0) + std::exp(-1.0));
    CHECK(soliton_profile(1.0, 1.0) == doctest::Approx(sech1).epsilon(1e-15));
    CHECK(sech1 == doctest::Approx(0.64805427366388540).epsilon(1e-15));
    // even, decaying, stable for large arguments
    CHECK(soliton_profile(0.5, -3.0) == soliton_profile(0.5, 3.0));
    CHECK(soliton_profile(1.0, 400.0) > 0.0);
    CHECK(soliton_profile(1.0, 400.0) < 1e-170);
    // derivative matches a central difference
    const double d = soliton_profile_derivative(0.7, 1.3);
    const double fd = (soliton_profile(0.7, 1.3 + 1e-6) -
                       soliton_profile(0.7, 1.3 - 1e-6)) /
                      2e-6;
    CHECK(d == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("half-soliton vertex values") {
    const ShiftedState hs = half_soliton(g3());
    CHECK(hs.field.edges[0][0].real() == doctest::Approx(1.0));
    CHECK(hs.field.edges[1][0].real() == doctest::Approx(1.0 / r2));
    CHECK(hs.field.edges[2][0].real() == doctest::Approx(1.0 / r2));
    CHECK(hs.shift == 0.0);
}

TEST_CASE("shifted state profiles and admissibility") {
    const EdgeGrid grid = make_grid(1.0, 0.7, 0.01);
    const ShiftedState st = shifted_state(g4(), grid, 0.7);
    // incoming edges monotone (profile sech(x + 0.7)), outgoing peaked at 0.7
    const auto& in = st.field.edges[0];
    for (int i = 0; i + 1 < 200; ++i) CHECK(in[i].real() > in[i + 1].real());
    const auto& out = st.field.edges[3];
    const int ipk = static_cast<int>(std::llround(0.7 / grid.spacing()));
    CHECK(out[ipk].real() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(out[0].real() < out[ipk].real());

    // a = 0 reduces to the half-soliton
    const ShiftedState z = shifted_state(g4(), grid, 0.0);
    const ShiftedState hs = half_soliton(g4(), grid);
    for (int i = 0; i < grid.n_points; i += 100)
        CHECK(z.field.edges[0][i].real() ==
              doctest::Approx(hs.field.edges[0][i].real()).epsilon(1e-15));

    // rearranged case-(i) pattern is admissible, unbalanced one is not
    CHECK_NOTHROW(shifted_state(g4(), grid, 0.7, SignPattern{{1, 0, 1, 0}}));
    CHECK_THROWS_AS(shifted_state(g4(), grid, 0.7, SignPattern{{1, 1, 1, 0}}),
                    inadmissible_pattern);
    // positivity
    for (const auto& e : st.field.edges)
        for (const auto& v : e) CHECK(v.real() > 0.0);
}

TEST_CASE("reflection carries the complementary pattern") {
    const EdgeGrid grid = make_grid(1.0, 0.5, 0.02);
    // a -> -a flips to the complementary canonical pattern
    const ShiftedState plus = shifted_state(g4(), grid, 0.5);
    const ShiftedState minus = shifted_state(g4(), grid, -0.5);
    CHECK(minus.pattern.m == complement(plus.pattern).m);
    // for unit weights the two branches carry the same profiles with the
    // incoming and outgoing groups exchanged
    for (int j = 0; j < 4; ++j) {
        const int jr = (j + 2) % 4;
        for (int i = 0; i < grid.n_points; i += 50)
            CHECK(plus.field.edges[j][i].real() ==
                  doctest::Approx(minus.field.edges[jr][i].real())
                      .epsilon(1e-15));
    }
}

TEST_CASE("frequency scaling") {
    const ShiftedState hs = half_soliton(g4());
    CHECK_THROWS_AS(scale_state(hs, -1.0), nonpositive_omega);
    const ShiftedState s1 = scale_state(hs, 1.0);
    CHECK(s1.field.edges[0][0].real() == doctest::Approx(1.0));
    const ShiftedState s4 = scale_state(hs, 4.0);
    CHECK(s4.field.edges[0][0].real() == doctest::Approx(2.0).epsilon(1e-14));
    // Q(omega)/Q(1) = omega^{(2-p)/(2p)} = sqrt(omega) at p = 1
    const double ratio = mass(s4.field) / mass(s1.field);
    CHECK(ratio == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(stationary_residual(s4) < 5e-2); // coarser constant at omega = 4
}

TEST_CASE("stationary residual vanishes at second order") {
    const StarGraph g = g4();
    double err[2];
    const double hs[2] = {0.02, 0.01};
    for (int i = 0; i < 2; ++i) {
        const ShiftedState st =
            shifted_state(g, make_grid(1.0, 0.7, hs[i]), 0.7);
        err[i] = stationary_residual(st);
        CHECK(err[i] < 1e-3);
    }
    CHECK(std::log2(err[0] / err[1]) > 1.7);

    const ShiftedState hals = half_soliton(g, make_grid(1.0, 0.0, 0.01));
    CHECK(stationary_residual(hals) < 1e-3);

    // a perturbed field is not a solution: residual stays O(1)
    ShiftedState bad = shifted_state(g, make_grid(1.0, 0.7, 0.01), 0.7);
    for (int i = 0; i < bad.field.grid.n_points; ++i)
        bad.field.edges[0][i] +=
            0.1 * soliton_profile(1.0, bad.field.grid.x(i));
    CHECK(stationary_residual(bad) > 0.05);
}

TEST_CASE("family counts") {
    CHECK(count_families(2) == 1);
    CHECK(count_families(4) == 3);
    CHECK(count_families(6) == 10);
    CHECK(count_families(8) == 35);
    CHECK_THROWS_AS(count_families(5), odd_edge_count);
}

TEST_CASE("pattern enumeration") {
    const StarGraph u4 = validate_graph(4, 2, {1, 1, 1, 1}, 1.0);
    CHECK(enumerate_patterns(u4).size() == 6);
    const StarGraph u2 = validate_graph(2, 1, {1, 1}, 1.0);
    const auto p2 = enumerate_patterns(u2);
    REQUIRE(p2.size() == 2);
    CHECK(p2[0].m == std::vector<std::uint8_t>{1, 0});
    CHECK(p2[1].m == std::vector<std::uint8_t>{0, 1});
    const auto p3 = enumerate_patterns(g3());
    REQUIRE(p3.size() == 2);
    CHECK(p3[0].m == std::vector<std::uint8_t>{1, 0, 0});
    CHECK(p3[1].m == std::vector<std::uint8_t>{0, 1, 1});
}
