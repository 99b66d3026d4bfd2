#pragma once

#include <complex>
#include <cstddef>

namespace nlsg::kernels {

using cplx = std::complex<double>;

// Data-parallel inner loops behind the quadratures, norms and time-stepping
// updates. A scalar reference implementation is always present; on x86-64
// an AVX2/FMA variant is selected at runtime when the CPU supports it.
// The two variants are equivalence-tested against each other.
//
// cn_nonlinear_rhs is the hot loop of the implicit midpoint stepper:
//   rhs[i] = ifac*u_old[i] + coeff*|u_mid[i]|^(2*power)*u_mid[i]
// with a fast path for power == 1.
struct Backend {
    const char* name;

    double (*sum_sq)(const double* x, std::size_t n);
    double (*dot)(const double* x, const double* y, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);

    double (*sum_abs2)(const cplx* z, std::size_t n);
    // sum of (|z_i|^2)^q, fast paths q = 1 and q = 2
    double (*sum_abs2_pow)(const cplx* z, std::size_t n, double q);
    // sum of Im(a_i * conj(b_i))
    double (*imdot)(const cplx* a, const cplx* b, std::size_t n);
    // out = a*x + b*y (aliasing with x or y allowed)
    void (*zlincomb)(cplx a, const cplx* x, cplx b, const cplx* y, cplx* out,
                     std::size_t n);
    // sum of (|a_i| - |b_i|)^2
    double (*sum_sq_absdiff)(const cplx* a, const cplx* b, std::size_t n);
    // sum of |sa*a_i + sb*b_i|^2
    double (*sum_abs2_lincomb)(double sa, const cplx* a, double sb,
                               const cplx* b, std::size_t n);
    void (*cn_nonlinear_rhs)(const cplx* u_old, const cplx* u_mid, cplx ifac,
                             double coeff, double power, cplx* rhs,
                             std::size_t n);
};

const Backend& scalar_backend();
const Backend* avx2_backend(); // nullptr when unsupported by CPU or build

// Active backend: AVX2 when available unless NLSG_KERNELS=scalar is set.
const Backend& active();

// Testing hook; pass nullptr to restore automatic selection.
void force_backend(const Backend* b);

} // namespace nlsg::kernels
