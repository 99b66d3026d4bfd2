#include "nlsg/eigensolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlsg/errors.hpp"

namespace nlsg::eig {

namespace {

// Householder reduction of a (row-major, symmetric) to tridiagonal form;
// the orthogonal transform accumulates into a.
void tridiagonalize(int n, std::vector<double>& a, std::vector<double>& d,
                    std::vector<double>& e) {
    for (int i = n - 1; i >= 1; --i) {
        const int l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (int k = 0; k <= l; ++k) scale += std::abs(a[i * n + k]);
            if (scale == 0.0) {
                e[i] = a[i * n + l];
            } else {
                for (int k = 0; k <= l; ++k) {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                double f = a[i * n + l];
                double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                f = 0.0;
                for (int j = 0; j <= l; ++j) {
                    a[j * n + i] = a[i * n + j] / h;
                    g = 0.0;
                    for (int k = 0; k <= j; ++k)
                        g += a[j * n + k] * a[i * n + k];
                    for (int k = j + 1; k <= l; ++k)
                        g += a[k * n + j] * a[i * n + k];
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                const double hh = f / (h + h);
                for (int j = 0; j <= l; ++j) {
                    f = a[i * n + j];
                    e[j] = g = e[j] - hh * f;
                    for (int k = 0; k <= j; ++k)
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        const int l = i - 1;
        if (d[i] != 0.0) {
            for (int j = 0; j <= l; ++j) {
                double g = 0.0;
                for (int k = 0; k <= l; ++k)
                    g += a[i * n + k] * a[k * n + j];
                for (int k = 0; k <= l; ++k)
                    a[k * n + j] -= g * a[k * n + i];
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for (int j = 0; j <= l; ++j) a[j * n + i] = a[i * n + j] = 0.0;
    }
}

} // namespace

void tridiag_ql(std::vector<double>& d, std::vector<double>& e,
                std::vector<double>& z, int n) {
    const bool vectors = !z.empty();
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-18 * dd || e[m] == 0.0) break;
            }
            if (m != l) {
                if (iter++ == 50)
                    throw no_convergence("tridiagonal QL exceeded 50 sweeps");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] +
                    e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    e[i + 1] = r = std::hypot(f, g);
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    d[i + 1] = g + (p = s * r);
                    g = c * r - b;
                    if (vectors) {
                        for (int k = 0; k < n; ++k) {
                            f = z[k * n + i + 1];
                            z[k * n + i + 1] = s * z[k * n + i] + c * f;
                            z[k * n + i] = c * z[k * n + i] - s * f;
                        }
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

void symmetric_eigen(int n, std::vector<double>& a,
                     std::vector<double>& values) {
    values.assign(n, 0.0);
    if (n == 0) return;
    if (n == 1) {
        values[0] = a[0];
        a[0] = 1.0;
        return;
    }
    std::vector<double> e(n, 0.0);
    tridiagonalize(n, a, values, e);
    tridiag_ql(values, e, a, n);

    // sort ascending, permuting eigenvector columns along
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int i, int j) { return values[i] < values[j]; });
    std::vector<double> vs(n), col(n);
    std::vector<double> sorted(a.size());
    for (int j = 0; j < n; ++j) {
        vs[j] = values[idx[j]];
        for (int i = 0; i < n; ++i) sorted[i * n + j] = a[i * n + idx[j]];
    }
    values.swap(vs);
    a.swap(sorted);
}

} // namespace nlsg::eig
