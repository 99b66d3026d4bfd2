#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlsg/graph.hpp"
#include "nlsg/shooting.hpp"

using namespace nlsg;

namespace {
const double r2 = std::sqrt(2.0);
StarGraph g4() { return validate_graph(4, 2, {1, 1, 1, 1}, 1.0); }
StarGraph g3() { return validate_graph(3, 1, {1, r2, r2}, 1.0); }
StarGraph g2() { return validate_graph(2, 1, {1, 1}, 1.0); }
} // namespace

TEST_CASE("decaying solution against the p=1 closed form") {
    for (double lam : {-3.0, -1.0, 0.0, 0.5}) {
        const DecayingSolution ds = decaying_solution(1.0, lam, -8.5, 20.0);
        CHECK(std::abs(ds.w(ds.x_max()) - 1.0) < 1e-14);
        for (double x = -8.0; x <= 8.0; x += 0.37) {
            CHECK(std::abs(ds.w(x) - closed_form_w(x, lam)) < 2e-9);
            if (x >= 0.0)
                CHECK(std::abs(ds.v(x) - closed_form_v(x, lam)) < 2e-9);
        }
    }
    // eigenfunction values at the origin: v = sech^2/4 and tanh sech / 2
    const DecayingSolution ground = decaying_solution(1.0, -3.0);
    CHECK(ground.v(0.0) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(std::abs(ground.v_prime(0.0)) < 1e-9);
    const DecayingSolution neutral = decaying_solution(1.0, 0.0);
    CHECK(std::abs(neutral.v(0.0)) < 1e-9);
    // v = tanh(x) sech(x) / 2, so 2 v' = sech^3 - sech tanh^2
    const double sech1 = 1.0 / std::cosh(1.0), tanh1 = std::tanh(1.0);
    CHECK(neutral.v_prime(1.0) * 2.0 ==
          doctest::Approx(sech1 * sech1 * sech1 - sech1 * tanh1 * tanh1)
              .epsilon(1e-7));

    CHECK_THROWS_AS(decaying_solution(1.0, 0.9999999), lambda_in_continuum);
}

TEST_CASE("scalar ground states match 1 - (p+1)^2") {
    CHECK(scalar_ground_state(0.5) == doctest::Approx(-1.25).epsilon(1e-9));
    CHECK(scalar_ground_state(1.0) == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(scalar_ground_state(1.5) == doctest::Approx(-5.25).epsilon(1e-9));
}

TEST_CASE("matching values and symmetry of the case functions") {
    // at the even ground state the case-(c) combination vanishes
    const MatchingValues m0 = matching_values(g4(), 0.5, -3.0);
    CHECK(m0.v_a > 0.0);
    CHECK(m0.v_minus_a > 0.0);
    CHECK(std::abs(m0.case_c) < 1e-9);
    // at the odd zero mode it vanishes for every a
    const MatchingValues m1 = matching_values(g4(), 0.5, 0.0);
    CHECK(std::abs(m1.case_c) < 1e-9);
    const MatchingValues m2 = matching_values(g4(), 1.3, 0.0);
    CHECK(std::abs(m2.case_c) < 1e-9);
    // a = 0 collapses case (c) to 2 v(0) v'(0)
    const MatchingValues m3 = matching_values(g4(), 0.0, -1.0);
    CHECK(m3.case_c ==
          doctest::Approx(2.0 * m3.v_a * m3.dv_a).epsilon(1e-12));
}

TEST_CASE("determinant reduces to the case-(c) factor for N=2") {
    const double lam = -1.7, a = 0.4;
    const MatchingValues m = matching_values(g2(), a, lam);
    CHECK(determinant(g2(), a, lam) ==
          doctest::Approx(m.case_c).epsilon(1e-12));
}

TEST_CASE("determinant roots coincide with the case-function roots") {
    const StarGraph g = g3();
    const double a = 0.7;
    const SpectralReport rep =
        find_point_spectrum(g, a, SpectrumWindow{-6.9, 0.5});
    // scan the determinant directly and refine its sign changes
    auto det = [&](double lam) { return determinant(g, a, lam); };
    const int n = 400;
    double prev = det(-6.9);
    int found = 0;
    for (int i = 1; i < n; ++i) {
        const double lam = -6.9 + i * (0.5 + 6.9) / (n - 1);
        const double cur = det(lam);
        if ((prev > 0) != (cur > 0)) {
            const double root = detail::brent(
                det, lam - (0.5 + 6.9) / (n - 1), lam, prev, cur, 1e-11);
            ++found;
            double best = 1e300;
            for (const SpectralEntry& e : rep.entries)
                best = std::min(best, std::abs(e.lambda - root));
            CHECK(best < 1e-8);
        }
        prev = cur;
    }
    CHECK(found >= 3); // ground state, inner eigenvalue, zero mode
}

TEST_CASE("point spectrum for the theorem configurations") {
    // N=4, K=2, a=0.7: ground + inner (multiplicity 1) + zero
    const SpectralReport r4 = find_point_spectrum(g4(), 0.7);
    REQUIRE(r4.entries.size() >= 3);
    CHECK(r4.morse_index == 2);
    CHECK(r4.zero_multiplicity == 1);
    CHECK(r4.entries[0].lambda == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(r4.entries[1].lambda ==
          doctest::Approx(closed_form_lambda1(0.7)).epsilon(1e-8));
    CHECK(r4.entries[1].tag == MatchCase::B);

    // K=1: case (a) carries no multiplicity, so a < 0 keeps only the ground
    const SpectralReport r3m = find_point_spectrum(g3(), -0.7);
    CHECK(r3m.morse_index == 1);
    CHECK(r3m.zero_multiplicity == 1);
    const SpectralReport r3p = find_point_spectrum(g3(), 0.7);
    CHECK(r3p.morse_index == 2);
    CHECK(r3p.zero_multiplicity == 1);

    // half-soliton: zero eigenvalue of multiplicity N-1
    const SpectralReport rh = find_point_spectrum(g4(), 0.0);
    CHECK(rh.morse_index == 1);
    CHECK(rh.zero_multiplicity == 3);

    // p < 1 has one extra positive point eigenvalue at 1 - (1-p)^2
    const StarGraph gp = validate_graph(2, 1, {1, 1}, 0.5);
    const SpectralReport rp = find_point_spectrum(gp, 0.0);
    bool saw = false;
    for (const SpectralEntry& e : rp.entries)
        saw |= std::abs(e.lambda - 0.75) < 1e-8;
    CHECK(saw);
}

TEST_CASE("multiplicity bookkeeping matches the index theorem") {
    // total non-positive multiplicity: K + 1 for a < 0, N - K + 1 for a > 0
    for (const auto& [graph, a] :
         {std::pair{g4(), 0.7}, {g4(), -0.7}, {g3(), 0.7}, {g3(), -0.7}}) {
        const SpectralReport rep = find_point_spectrum(graph, a);
        const int total = rep.morse_index + rep.zero_multiplicity;
        const int want = a < 0 ? graph.n_incoming + 1
                               : graph.n_edges - graph.n_incoming + 1;
        CHECK(total == want);
    }
}

TEST_CASE("wronskian of two independent solutions is constant") {
    const double lam = -1.3, p = 1.0;
    const auto one =
        detail::integrate_linearized(p, lam, 3.0, -3.0, 1.0, 0.3);
    const auto two =
        detail::integrate_linearized(p, lam, 3.0, -3.0, 0.2, -1.0);
    // both integrations land exactly on the window ends
    const double w0 = one.vs.front() * two.dvs.front() -
                      one.dvs.front() * two.vs.front();
    const double w1 = one.vs.back() * two.dvs.back() -
                      one.dvs.back() * two.vs.back();
    CHECK(w0 != 0.0);
    CHECK(w1 == doctest::Approx(w0).epsilon(1e-9));
}

TEST_CASE("zero path is strictly increasing and ends at the origin") {
    const auto path = zero_path(1.0, -2.9, -0.05, 25);
    REQUIRE(path.size() == 25);
    for (std::size_t i = 1; i < path.size(); ++i)
        CHECK(path[i].second > path[i - 1].second);
    CHECK(path.back().second < 0.0);
    CHECK(path.back().second > -0.1);
    // inverting the closed form: v(-a) = 0 at lambda1(a), so x0 = -a
    const double lam = closed_form_lambda1(0.5);
    const auto single = zero_path(1.0, lam, lam, 1);
    CHECK(single.front().second == doctest::Approx(-0.5).epsilon(1e-8));

    CHECK_THROWS_AS(zero_path(1.0, -3.5, -3.4, 2), no_zero_found);
}
