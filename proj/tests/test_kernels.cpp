#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "nlsg/kernels.hpp"

using nlsg::kernels::cplx;

namespace {

std::uint64_t rng_state = 0x123456789abcdef0ull;
double urand() {
    rng_state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = rng_state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-52 - 1.0;
}

std::vector<double> rand_real(std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = urand();
    return v;
}

std::vector<cplx> rand_cplx(std::size_t n) {
    std::vector<cplx> v(n);
    for (cplx& z : v) z = cplx(urand(), urand());
    return v;
}

} // namespace

TEST_CASE("scalar kernels match simple references") {
    const auto& k = nlsg::kernels::scalar_backend();
    const std::vector<double> x = {1.0, -2.0, 3.0};
    const std::vector<double> y = {0.5, 0.25, -1.0};
    CHECK(k.sum_sq(x.data(), 3) == doctest::Approx(14.0));
    CHECK(k.dot(x.data(), y.data(), 3) == doctest::Approx(-3.0));

    std::vector<cplx> z = {{3.0, 4.0}, {0.0, -1.0}};
    CHECK(k.sum_abs2(z.data(), 2) == doctest::Approx(26.0));
    CHECK(k.sum_abs2_pow(z.data(), 2, 2.0) == doctest::Approx(626.0));
    // Im(a conj(b)) for a = i, b = 1 is 1
    const cplx a{0.0, 1.0}, b{1.0, 0.0};
    CHECK(k.imdot(&a, &b, 1) == doctest::Approx(1.0));
}

TEST_CASE("avx2 variants agree with the scalar reference") {
    const auto* avx = nlsg::kernels::avx2_backend();
    if (!avx) {
        MESSAGE("AVX2 unavailable on this CPU; dispatch covered by scalar");
        return;
    }
    const auto& ref = nlsg::kernels::scalar_backend();
    for (std::size_t n : {0u, 1u, 2u, 3u, 5u, 8u, 13u, 64u, 257u, 1000u}) {
        const auto x = rand_real(n), y = rand_real(n);
        const auto za = rand_cplx(n), zb = rand_cplx(n);
        const double tol = 1e-12 * (1.0 + static_cast<double>(n));

        CHECK(avx->sum_sq(x.data(), n) ==
              doctest::Approx(ref.sum_sq(x.data(), n)).epsilon(tol));
        CHECK(avx->dot(x.data(), y.data(), n) ==
              doctest::Approx(ref.dot(x.data(), y.data(), n)).epsilon(tol));
        CHECK(avx->sum_abs2(za.data(), n) ==
              doctest::Approx(ref.sum_abs2(za.data(), n)).epsilon(tol));
        for (double q : {1.0, 2.0, 1.5})
            CHECK(avx->sum_abs2_pow(za.data(), n, q) ==
                  doctest::Approx(ref.sum_abs2_pow(za.data(), n, q))
                      .epsilon(tol));
        CHECK(avx->imdot(za.data(), zb.data(), n) ==
              doctest::Approx(ref.imdot(za.data(), zb.data(), n))
                  .epsilon(tol));
        CHECK(avx->sum_sq_absdiff(za.data(), zb.data(), n) ==
              doctest::Approx(ref.sum_sq_absdiff(za.data(), zb.data(), n))
                  .epsilon(tol));
        CHECK(avx->sum_abs2_lincomb(0.7, za.data(), -1.3, zb.data(), n) ==
              doctest::Approx(
                  ref.sum_abs2_lincomb(0.7, za.data(), -1.3, zb.data(), n))
                  .epsilon(tol));

        std::vector<double> y1 = y, y2 = y;
        ref.axpy(0.37, x.data(), y1.data(), n);
        avx->axpy(0.37, x.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(y1[i] == doctest::Approx(y2[i]).epsilon(1e-14));

        std::vector<cplx> o1(n), o2(n);
        const cplx ca{0.3, -0.8}, cb{-1.1, 0.2};
        ref.zlincomb(ca, za.data(), cb, zb.data(), o1.data(), n);
        avx->zlincomb(ca, za.data(), cb, zb.data(), o2.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(o1[i] - o2[i]) < 1e-13);

        for (double p : {1.0, 0.5}) {
            std::vector<cplx> r1(n), r2(n);
            const cplx ifac{0.0, 2000.0};
            ref.cn_nonlinear_rhs(za.data(), zb.data(), ifac, -2.0, p,
                                 r1.data(), n);
            avx->cn_nonlinear_rhs(za.data(), zb.data(), ifac, -2.0, p,
                                  r2.data(), n);
            for (std::size_t i = 0; i < n; ++i)
                CHECK(std::abs(r1[i] - r2[i]) <
                      1e-12 * (1.0 + std::abs(r1[i])));
        }
    }
}

TEST_CASE("backend override hook") {
    const auto& scalar = nlsg::kernels::scalar_backend();
    nlsg::kernels::force_backend(&scalar);
    CHECK(std::string(nlsg::kernels::active().name) == "scalar");
    nlsg::kernels::force_backend(nullptr);
    const auto& def = nlsg::kernels::active();
    if (nlsg::kernels::avx2_backend())
        CHECK(std::string(def.name) == "avx2");
}
