#include "nlsg/kernels.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace nlsg::kernels {

namespace {

double sum_sq_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double sum_abs2_scalar(const cplx* z, std::size_t n) {
    // |z|^2 over interleaved re/im is a plain sum of squares
    return sum_sq_scalar(reinterpret_cast<const double*>(z), 2 * n);
}

double sum_abs2_pow_scalar(const cplx* z, std::size_t n, double q) {
    double s = 0.0;
    if (q == 1.0) return sum_abs2_scalar(z, n);
    if (q == 2.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double m = std::norm(z[i]);
            s += m * m;
        }
        return s;
    }
    for (std::size_t i = 0; i < n; ++i) s += std::pow(std::norm(z[i]), q);
    return s;
}

double imdot_scalar(const cplx* a, const cplx* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += a[i].imag() * b[i].real() - a[i].real() * b[i].imag();
    return s;
}

void zlincomb_scalar(cplx a, const cplx* x, cplx b, const cplx* y, cplx* out,
                     std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

double sum_sq_absdiff_scalar(const cplx* a, const cplx* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::abs(a[i]) - std::abs(b[i]);
        s += d * d;
    }
    return s;
}

double sum_abs2_lincomb_scalar(double sa, const cplx* a, double sb,
                               const cplx* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::norm(sa * a[i] + sb * b[i]);
    return s;
}

void cn_nonlinear_rhs_scalar(const cplx* u_old, const cplx* u_mid, cplx ifac,
                             double coeff, double power, cplx* rhs,
                             std::size_t n) {
    if (power == 1.0) {
        for (std::size_t i = 0; i < n; ++i)
            rhs[i] = ifac * u_old[i] + coeff * std::norm(u_mid[i]) * u_mid[i];
        return;
    }
    for (std::size_t i = 0; i < n; ++i)
        rhs[i] = ifac * u_old[i] +
                 coeff * std::pow(std::norm(u_mid[i]), power) * u_mid[i];
}

const Backend scalar = {
    "scalar",        sum_sq_scalar,        dot_scalar,
    axpy_scalar,     sum_abs2_scalar,      sum_abs2_pow_scalar,
    imdot_scalar,    zlincomb_scalar,      sum_sq_absdiff_scalar,
    sum_abs2_lincomb_scalar, cn_nonlinear_rhs_scalar,
};

std::atomic<const Backend*> forced{nullptr};

const Backend* pick() {
    if (const char* env = std::getenv("NLSG_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return &scalar;
    }
    if (const Backend* b = avx2_backend()) return b;
    return &scalar;
}

} // namespace

const Backend& scalar_backend() { return scalar; }

const Backend& active() {
    if (const Backend* f = forced.load(std::memory_order_relaxed)) return *f;
    static const Backend* selected = pick();
    return *selected;
}

void force_backend(const Backend* b) {
    forced.store(b, std::memory_order_relaxed);
}

#ifndef NLSG_HAVE_AVX2_TU
const Backend* avx2_backend() { return nullptr; }
#endif

} // namespace nlsg::kernels
