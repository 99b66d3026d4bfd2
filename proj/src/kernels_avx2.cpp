// AVX2/FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; callers reach it only through avx2_backend(), which
// checks CPU support at runtime before handing out the table.

#include "nlsg/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace nlsg::kernels {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

double sum_sq_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i),
                              acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double sum_abs2_avx2(const cplx* z, std::size_t n) {
    return sum_sq_avx2(reinterpret_cast<const double*>(z), 2 * n);
}

// abs2 of two interleaved complex values per vector: [m0 m0 m1 m1]
inline __m256d abs2_pairs(__m256d v) {
    __m256d sq = _mm256_mul_pd(v, v);
    return _mm256_add_pd(sq, _mm256_permute_pd(sq, 0x5));
}

double sum_abs2_pow_avx2(const cplx* z, std::size_t n, double q) {
    if (q == 1.0) return sum_abs2_avx2(z, n);
    if (q == 2.0) {
        const double* d = reinterpret_cast<const double*>(z);
        __m256d acc = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 2 <= n; i += 2) {
            __m256d m = abs2_pairs(_mm256_loadu_pd(d + 2 * i));
            acc = _mm256_fmadd_pd(m, m, acc);
        }
        double s = 0.5 * hsum(acc); // every |z|^4 counted twice
        for (; i < n; ++i) {
            const double m = std::norm(z[i]);
            s += m * m;
        }
        return s;
    }
    double s = 0.0; // general exponent stays in libm
    for (std::size_t i = 0; i < n; ++i) s += std::pow(std::norm(z[i]), q);
    return s;
}

double imdot_avx2(const cplx* a, const cplx* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    const __m256d signs = _mm256_set_pd(1.0, -1.0, 1.0, -1.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d va = _mm256_loadu_pd(pa + 2 * i);
        __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        // [ar*bi, ai*br, ...] with alternating signs gives Im(a*conj(b))
        __m256d prod = _mm256_mul_pd(va, _mm256_permute_pd(vb, 0x5));
        acc = _mm256_fmadd_pd(prod, signs, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i)
        s += a[i].imag() * b[i].real() - a[i].real() * b[i].imag();
    return s;
}

// complex multiply of interleaved pairs by a broadcast scalar (cr, ci):
// even lanes get x*cr - y*ci, odd lanes y*cr + x*ci
inline __m256d cmul_scalar(__m256d v, __m256d cr, __m256d ci) {
    __m256d t = _mm256_mul_pd(_mm256_permute_pd(v, 0x5), ci);
    return _mm256_fmaddsub_pd(v, cr, t);
}

void zlincomb_avx2(cplx a, const cplx* x, cplx b, const cplx* y, cplx* out,
                   std::size_t n) {
    const double* px = reinterpret_cast<const double*>(x);
    const double* py = reinterpret_cast<const double*>(y);
    double* po = reinterpret_cast<double*>(out);
    const __m256d ar = _mm256_set1_pd(a.real()), ai = _mm256_set1_pd(a.imag());
    const __m256d br = _mm256_set1_pd(b.real()), bi = _mm256_set1_pd(b.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d vx = cmul_scalar(_mm256_loadu_pd(px + 2 * i), ar, ai);
        __m256d vy = cmul_scalar(_mm256_loadu_pd(py + 2 * i), br, bi);
        _mm256_storeu_pd(po + 2 * i, _mm256_add_pd(vx, vy));
    }
    for (; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

double sum_sq_absdiff_avx2(const cplx* a, const cplx* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d ma = _mm256_sqrt_pd(abs2_pairs(_mm256_loadu_pd(pa + 2 * i)));
        __m256d mb = _mm256_sqrt_pd(abs2_pairs(_mm256_loadu_pd(pb + 2 * i)));
        __m256d d = _mm256_sub_pd(ma, mb);
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = 0.5 * hsum(acc);
    for (; i < n; ++i) {
        const double d = std::abs(a[i]) - std::abs(b[i]);
        s += d * d;
    }
    return s;
}

double sum_abs2_lincomb_avx2(double sa, const cplx* a, double sb,
                             const cplx* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    const __m256d va = _mm256_set1_pd(sa), vb = _mm256_set1_pd(sb);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(pa + 2 * i));
        t = _mm256_fmadd_pd(vb, _mm256_loadu_pd(pb + 2 * i), t);
        acc = _mm256_fmadd_pd(t, t, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += std::norm(sa * a[i] + sb * b[i]);
    return s;
}

void cn_nonlinear_rhs_avx2(const cplx* u_old, const cplx* u_mid, cplx ifac,
                           double coeff, double power, cplx* rhs,
                           std::size_t n) {
    if (power != 1.0) {
        for (std::size_t i = 0; i < n; ++i)
            rhs[i] = ifac * u_old[i] +
                     coeff * std::pow(std::norm(u_mid[i]), power) * u_mid[i];
        return;
    }
    const double* po = reinterpret_cast<const double*>(u_old);
    const double* pm = reinterpret_cast<const double*>(u_mid);
    double* pr = reinterpret_cast<double*>(rhs);
    const __m256d fr = _mm256_set1_pd(ifac.real());
    const __m256d fi = _mm256_set1_pd(ifac.imag());
    const __m256d vc = _mm256_set1_pd(coeff);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d vm = _mm256_loadu_pd(pm + 2 * i);
        __m256d g = _mm256_mul_pd(vc, abs2_pairs(vm));
        __m256d t = cmul_scalar(_mm256_loadu_pd(po + 2 * i), fr, fi);
        _mm256_storeu_pd(pr + 2 * i, _mm256_fmadd_pd(g, vm, t));
    }
    for (; i < n; ++i)
        rhs[i] = ifac * u_old[i] + coeff * std::norm(u_mid[i]) * u_mid[i];
}

const Backend avx2 = {
    "avx2",        sum_sq_avx2,        dot_avx2,
    axpy_avx2,     sum_abs2_avx2,      sum_abs2_pow_avx2,
    imdot_avx2,    zlincomb_avx2,      sum_sq_absdiff_avx2,
    sum_abs2_lincomb_avx2, cn_nonlinear_rhs_avx2,
};

} // namespace

const Backend* avx2_backend() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")
               ? &avx2
               : nullptr;
}

} // namespace nlsg::kernels
