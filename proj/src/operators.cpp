#include "nlsg/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "nlsg/eigensolve.hpp"
#include "nlsg/kernels.hpp"

namespace nlsg {

namespace {

double splitmix64_unit(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
}

GraphOperator assemble_core(const StarGraph& g, const EdgeGrid& grid,
                            HessianKind kind, double omega,
                            const GraphField* state_field, double power) {
    GraphOperator op;
    op.graph = g;
    op.grid = grid;
    op.kind = kind;
    op.omega = omega;
    op.per_edge = grid.n_points - 2;
    const double h = grid.spacing();
    const double c =
        kind == HessianKind::plus
            ? (2.0 * power + 1.0) * (power + 1.0)
            : (power + 1.0);

    double wsum = 0.0;
    std::vector<double> beta(g.n_edges);
    for (int j = 0; j < g.n_edges; ++j) {
        beta[j] = g.alpha_pow(j, -1.0 / g.power);
        wsum += beta[j] * beta[j];
    }
    op.vertex_mass = 0.5 * h * wsum;
    op.interior_mass = h;

    // potential alpha_j^2 |Phi_j|^{2p}; zero when no state is supplied
    auto pot = [&](int j, int i) -> double {
        if (!state_field) return 0.0;
        const double a2 = g.alphas[j] * g.alphas[j];
        const double m = std::norm(state_field->edges[j][i]);
        return c * a2 * std::pow(m, power);
    };

    op.offdiag = -1.0 / (h * h);
    op.diag.assign(g.n_edges, std::vector<double>(op.per_edge));
    op.coupling.resize(g.n_edges);
    double qbar = 0.0;
    for (int j = 0; j < g.n_edges; ++j) {
        const double pj = pot(j, 0);
        op.pot_inf = std::max(op.pot_inf, pj);
        qbar += beta[j] * beta[j] * (omega - pj);
        op.coupling[j] = -beta[j] * std::sqrt(2.0 / wsum) / (h * h);
        for (int i = 1; i <= op.per_edge; ++i) {
            const double p_ji = pot(j, i);
            op.pot_inf = std::max(op.pot_inf, p_ji);
            op.diag[j][i - 1] = 2.0 / (h * h) + omega - p_ji;
        }
    }
    op.vertex_diag = 2.0 / (h * h) + qbar / wsum;
    return op;
}

} // namespace

GraphOperator assemble(const ShiftedState& state, HessianKind kind) {
    const StarGraph& g = state.graph;
    if (state.field.n_edges() != g.n_edges ||
        state.field.edges.empty() ||
        static_cast<int>(state.field.edges[0].size()) !=
            state.field.grid.n_points)
        throw grid_mismatch("state field does not match its grid");
    return assemble_core(g, state.field.grid, kind, state.omega, &state.field,
                         g.power);
}

GraphOperator assemble_free(const StarGraph& g, const EdgeGrid& grid,
                            HessianKind kind, double omega) {
    return assemble_core(g, grid, kind, omega, nullptr, g.power);
}

void GraphOperator::apply(const double* x, double* y) const {
    const int n = graph.n_edges, m = per_edge;
    double yg = vertex_diag * x[0];
    for (int j = 0; j < n; ++j) {
        const double* xe = x + 1 + j * m;
        double* ye = y + 1 + j * m;
        const std::vector<double>& d = diag[j];
        yg += coupling[j] * xe[0];
        for (int i = 0; i < m; ++i) {
            double s = d[i] * xe[i];
            if (i > 0) s += offdiag * xe[i - 1];
            if (i + 1 < m) s += offdiag * xe[i + 1];
            ye[i] = s;
        }
        ye[0] += coupling[j] * x[0];
    }
    y[0] = yg;
}

double GraphOperator::zero_tolerance() const {
    const double h = grid.spacing();
    return 10.0 * h * h * (1.0 + pot_inf);
}

GraphField GraphOperator::to_field(const std::vector<double>& dof) const {
    GraphField f = GraphField::zeros(graph.n_edges, grid);
    const double vs = 1.0 / std::sqrt(vertex_mass);
    const double is = 1.0 / std::sqrt(interior_mass);
    for (int j = 0; j < graph.n_edges; ++j) {
        f.edges[j][0] = graph.alpha_pow(j, -1.0 / graph.power) * dof[0] * vs;
        for (int i = 0; i < per_edge; ++i)
            f.edges[j][i + 1] = dof[1 + j * per_edge + i] * is;
    }
    return f;
}

std::vector<double> GraphOperator::from_field(const GraphField& f) const {
    std::vector<double> dof(dimension());
    // gamma is the common weighted vertex value
    dof[0] = graph.alpha_pow(0, 1.0 / graph.power) * f.edges[0][0].real() *
             std::sqrt(vertex_mass);
    const double is = std::sqrt(interior_mass);
    for (int j = 0; j < graph.n_edges; ++j)
        for (int i = 0; i < per_edge; ++i)
            dof[1 + j * per_edge + i] = f.edges[j][i + 1].real() * is;
    return dof;
}

namespace {

// LDL^T factorization of (A - sigma I) exploiting the arrow structure:
// independent tridiagonal edge blocks plus a rank-one vertex border.
struct ArrowFactor {
    const GraphOperator* op;
    double sigma;
    std::vector<std::vector<double>> piv;  // pivots per edge
    std::vector<std::vector<double>> sub;  // subdiagonal multipliers
    std::vector<std::vector<double>> vsol; // T_j^{-1} e_1 per edge
    double schur = 0.0;
    bool ok = false;

    void factor(const GraphOperator& o, double s) {
        op = &o;
        sigma = s;
        const int n = o.graph.n_edges, m = o.per_edge;
        piv.assign(n, std::vector<double>(m));
        sub.assign(n, std::vector<double>(m > 0 ? m - 1 : 0));
        vsol.assign(n, std::vector<double>(m));
        ok = true;
        schur = o.vertex_diag - s;
        for (int j = 0; j < n && ok; ++j) {
            auto& d = piv[j];
            auto& l = sub[j];
            const auto& diag = o.diag[j];
            d[0] = diag[0] - s;
            if (d[0] <= 0.0) { ok = false; break; }
            for (int i = 1; i < m; ++i) {
                l[i - 1] = o.offdiag / d[i - 1];
                d[i] = diag[i] - s - l[i - 1] * o.offdiag;
                if (d[i] <= 0.0) { ok = false; break; }
            }
            if (!ok) break;
            // T_j^{-1} e_1 for the Schur complement and back-substitution
            auto& g = vsol[j];
            g[0] = 1.0;
            for (int i = 1; i < m; ++i) g[i] = -l[i - 1] * g[i - 1];
            for (int i = 0; i < m; ++i) g[i] /= d[i];
            for (int i = m - 2; i >= 0; --i) g[i] -= l[i] * g[i + 1];
            schur -= o.coupling[j] * o.coupling[j] * g[0];
        }
        if (ok && schur <= 0.0) ok = false;
    }

    void tri_solve(int j, double* r) const {
        const int m = op->per_edge;
        const auto& d = piv[j];
        const auto& l = sub[j];
        for (int i = 1; i < m; ++i) r[i] -= l[i - 1] * r[i - 1];
        for (int i = 0; i < m; ++i) r[i] /= d[i];
        for (int i = m - 2; i >= 0; --i) r[i] -= l[i] * r[i + 1];
    }

    // in-place solve of (A - sigma I) x = r
    void solve(std::vector<double>& r) const {
        const int n = op->graph.n_edges, m = op->per_edge;
        double rg = r[0];
        for (int j = 0; j < n; ++j) {
            double* rj = r.data() + 1 + j * m;
            tri_solve(j, rj);
            rg -= op->coupling[j] * rj[0];
        }
        const double gamma = rg / schur;
        r[0] = gamma;
        for (int j = 0; j < n; ++j) {
            double* rj = r.data() + 1 + j * m;
            const auto& g = vsol[j];
            const double f = op->coupling[j] * gamma;
            for (int i = 0; i < m; ++i) rj[i] -= f * g[i];
        }
    }
};

} // namespace

int eigenvalue_count_below(const GraphOperator& op, double sigma) {
    // Sylvester inertia of (A - sigma): the leading block of the arrow
    // matrix is block tridiagonal, so every pivot is explicit. Pivots are
    // floored away from zero, the standard spectrum-slicing guard.
    const int n = op.graph.n_edges, m = op.per_edge;
    const double floor_piv = 1e-300;
    int below = 0;
    double schur = op.vertex_diag - sigma;
    for (int j = 0; j < n; ++j) {
        const auto& diag = op.diag[j];
        double prev = 0.0;
        std::vector<double> d(m);
        for (int i = 0; i < m; ++i) {
            double di = diag[i] - sigma;
            if (i > 0) di -= op.offdiag * op.offdiag / prev;
            if (std::abs(di) < floor_piv) di = -floor_piv;
            if (di < 0.0) ++below;
            d[i] = di;
            prev = di;
        }
        // (T_j^{-1})_{11} feeds the vertex Schur pivot
        std::vector<double> g(m, 0.0);
        g[0] = 1.0;
        for (int i = 1; i < m; ++i)
            g[i] = -(op.offdiag / d[i - 1]) * g[i - 1];
        for (int i = 0; i < m; ++i) g[i] /= d[i];
        for (int i = m - 2; i >= 0; --i)
            g[i] -= (op.offdiag / d[i]) * g[i + 1];
        schur -= op.coupling[j] * op.coupling[j] * g[0];
    }
    if (schur < 0.0) ++below;
    return below;
}

namespace detail {

std::vector<EigenPair> lanczos_lowest(const GraphOperator& op, int m,
                                      double strict_below,
                                      double relaxed_tol) {
    const auto& ker = kernels::active();
    const int dim = op.dimension();
    m = std::min(m, dim);

    // shift strictly below the spectrum keeps the factorization definite
    double sigma = op.omega - op.pot_inf - 0.5;
    ArrowFactor fac;
    for (int attempt = 0;; ++attempt) {
        fac.factor(op, sigma);
        if (fac.ok) break;
        if (attempt >= 4)
            throw factorization_singular(
                "shifted operator not positive definite after reshifts");
        sigma -= 1.0 + 0.5 * std::abs(sigma);
    }

    const int max_iter =
        std::min(dim, m < 16 ? 150 + 40 * m : m + 450);
    std::vector<std::vector<double>> basis;
    basis.reserve(max_iter + 1);
    std::vector<double> alpha, beta;

    std::vector<double> v(dim);
    std::uint64_t rng = 0x2545f4914f6cdd1dull ^ (std::uint64_t)dim;
    for (double& x : v) x = splitmix64_unit(rng);
    double nrm = std::sqrt(ker.sum_sq(v.data(), dim));
    for (double& x : v) x /= nrm;
    basis.push_back(v);

    std::vector<double> w(dim);
    std::vector<EigenPair> result;
    std::vector<double> prev_vals;

    // Ritz values of the inverse from the small tridiagonal, cheap probe
    auto ritz_values = [&](int k) {
        std::vector<double> d(alpha.begin(), alpha.begin() + k);
        std::vector<double> e(k, 0.0);
        for (int i = 1; i < k; ++i) e[i] = beta[i - 1];
        std::vector<double> none;
        eig::tridiag_ql(d, e, none, k);
        std::sort(d.begin(), d.end(), std::greater<>());
        d.resize(std::min<std::size_t>(d.size(), m));
        for (double& th : d) th = sigma + 1.0 / th;
        std::sort(d.begin(), d.end());
        return d;
    };

    auto extract = [&](int k) -> bool {
        std::vector<double> d(alpha.begin(), alpha.begin() + k);
        std::vector<double> e(k, 0.0);
        for (int i = 1; i < k; ++i) e[i] = beta[i - 1];
        std::vector<double> z(static_cast<std::size_t>(k) * k, 0.0);
        for (int i = 0; i < k; ++i) z[i * k + i] = 1.0;
        eig::tridiag_ql(d, e, z, k);
        std::vector<int> idx(k);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&](int i, int j) { return d[i] > d[j]; });
        const int want = std::min(m, k);
        std::vector<EigenPair> pairs;
        pairs.reserve(want);
        for (int t = 0; t < want; ++t) {
            const int col = idx[t];
            EigenPair p;
            p.value = sigma + 1.0 / d[col];
            p.vector.assign(dim, 0.0);
            for (int i = 0; i < k; ++i)
                ker.axpy(z[i * k + col], basis[i].data(), p.vector.data(),
                         dim);
            const double vn = std::sqrt(ker.sum_sq(p.vector.data(), dim));
            for (double& x : p.vector) x /= vn;
            pairs.push_back(std::move(p));
        }
        std::vector<double> au(dim);
        for (const EigenPair& p : pairs) {
            op.apply(p.vector.data(), au.data());
            ker.axpy(-p.value, p.vector.data(), au.data(), dim);
            const double res = std::sqrt(ker.sum_sq(au.data(), dim));
            const double tol =
                p.value < strict_below ? 1e-9 : relaxed_tol;
            if (res > tol * std::max(1.0, std::abs(p.value))) return false;
        }
        std::sort(pairs.begin(), pairs.end(),
                  [](const EigenPair& a, const EigenPair& b) {
                      return a.value < b.value;
                  });
        // slicing guard: no eigenvalue below the strictly converged range
        // may be missing (a degenerate copy Lanczos has not surfaced yet)
        double probe = -1e300;
        int covered = 0;
        for (const EigenPair& p : pairs)
            if (p.value < strict_below) {
                probe = p.value;
                ++covered;
            }
        if (covered > 0 && covered < want) {
            const double eps = 1e-7 * (1.0 + std::abs(probe));
            if (eigenvalue_count_below(op, probe + eps) > covered)
                return false;
        }
        result = std::move(pairs);
        return true;
    };

    for (int k = 0; k < max_iter; ++k) {
        w = basis[k];
        fac.solve(w);
        if (k > 0) ker.axpy(-beta[k - 1], basis[k - 1].data(), w.data(), dim);
        double a = ker.dot(w.data(), basis[k].data(), dim);
        ker.axpy(-a, basis[k].data(), w.data(), dim);
        alpha.push_back(a);
        // full reorthogonalization, second pass on heavy cancellation
        for (int pass = 0; pass < 2; ++pass) {
            double before = std::sqrt(ker.sum_sq(w.data(), dim));
            for (const auto& b : basis) {
                const double c = ker.dot(w.data(), b.data(), dim);
                ker.axpy(-c, b.data(), w.data(), dim);
            }
            double after = std::sqrt(ker.sum_sq(w.data(), dim));
            if (after > 0.7 * before) break;
        }
        double b = std::sqrt(ker.sum_sq(w.data(), dim));
        bool restarted = false;
        if (b < 1e-13) {
            // invariant subspace exhausted; continue from a fresh vector
            for (double& x : w) x = splitmix64_unit(rng);
            for (const auto& bb : basis) {
                const double c = ker.dot(w.data(), bb.data(), dim);
                ker.axpy(-c, bb.data(), w.data(), dim);
            }
            b = std::sqrt(ker.sum_sq(w.data(), dim));
            if (b < 1e-13) break;
            restarted = true;
        }
        beta.push_back(restarted ? 0.0 : b);
        for (double& x : w) x /= b;
        basis.push_back(w);

        const int kk = k + 1;
        if (kk >= std::min(dim, m + 8) && kk % 20 == 0) {
            std::vector<double> vals = ritz_values(kk);
            bool stable = prev_vals.size() == vals.size();
            if (stable)
                for (std::size_t i = 0; i < vals.size(); ++i)
                    stable &= std::abs(vals[i] - prev_vals[i]) <=
                              1e-11 * (1.0 + std::abs(vals[i]));
            prev_vals = std::move(vals);
            if (stable && extract(kk)) return result;
        }
    }
    if (extract(static_cast<int>(alpha.size()))) return result;
    throw no_convergence("shift-invert iteration did not reach the "
                         "requested residual");
}

} // namespace detail

std::vector<EigenPair> lowest_eigenpairs(const GraphOperator& op, int k) {
    if (k < 1 || k > 12)
        throw error("lowest_eigenpairs serves 1 <= k <= 12");
    return detail::lanczos_lowest(op, k);
}

std::pair<int, int> morse_index(const GraphOperator& op) {
    const double tol = op.zero_tolerance();
    const int neg = eigenvalue_count_below(op, -tol);
    const int below_band = eigenvalue_count_below(op, tol);
    return {neg, below_band - neg};
}

StabilityReport stability_spectrum(const GraphOperator& plus,
                                   const GraphOperator& minus, int subspace) {
    const auto& ker = kernels::active();
    if (!(plus.grid == minus.grid) ||
        plus.graph.n_edges != minus.graph.n_edges)
        throw grid_mismatch("operators must share grid and graph");
    const int dim = minus.dimension();
    const int m = std::min(subspace, dim);

    auto low = detail::lanczos_lowest(minus, m, minus.omega - 0.05, 1e-6);
    const double tolz = minus.zero_tolerance();
    if (!low.empty() && low.front().value < -tolz)
        throw lminus_indefinite(
            "imag-part Hessian has a genuinely negative eigenvalue; "
            "discretization too coarse");

    std::vector<const EigenPair*> kept;
    for (const auto& p : low)
        if (p.value > tolz) kept.push_back(&p);
    const int mk = static_cast<int>(kept.size());
    if (mk == 0) return StabilityReport{};

    // S = D^{1/2} V^T (plus) V D^{1/2}
    std::vector<double> s(static_cast<std::size_t>(mk) * mk);
    std::vector<double> au(dim);
    std::vector<std::vector<double>> av(mk);
    for (int b = 0; b < mk; ++b) {
        plus.apply(kept[b]->vector.data(), au.data());
        av[b] = au;
    }
    for (int i = 0; i < mk; ++i)
        for (int j = i; j < mk; ++j) {
            double gij = ker.dot(kept[i]->vector.data(), av[j].data(), dim);
            double gji = ker.dot(kept[j]->vector.data(), av[i].data(), dim);
            const double val = 0.5 * (gij + gji) *
                               std::sqrt(kept[i]->value) *
                               std::sqrt(kept[j]->value);
            s[i * mk + j] = s[j * mk + i] = val;
        }

    // deflate the translation kernel of `plus` from the reduced problem
    auto plus_low = detail::lanczos_lowest(
        plus, std::min(10, plus.dimension()));
    const double tolzp = plus.zero_tolerance();
    for (const auto& p : plus_low) {
        if (std::abs(p.value) > tolzp) continue;
        std::vector<double> z(mk);
        for (int i = 0; i < mk; ++i)
            z[i] = ker.dot(kept[i]->vector.data(), p.vector.data(), dim) /
                   std::sqrt(kept[i]->value);
        double zn = std::sqrt(ker.sum_sq(z.data(), mk));
        if (zn < 1e-8) continue;
        for (double& x : z) x /= zn;
        // S <- (I - zz^T) S (I - zz^T)
        std::vector<double> sz(mk, 0.0);
        for (int i = 0; i < mk; ++i)
            sz[i] = ker.dot(s.data() + i * mk, z.data(), mk);
        const double zsz = ker.dot(z.data(), sz.data(), mk);
        for (int i = 0; i < mk; ++i)
            for (int j = 0; j < mk; ++j)
                s[i * mk + j] += -z[i] * sz[j] - sz[i] * z[j] +
                                 z[i] * z[j] * zsz;
    }

    std::vector<double> mu;
    eig::symmetric_eigen(mk, s, mu);

    StabilityReport rep;
    const double band = std::max(1e-8, 100.0 * tolz * tolz);
    std::vector<double> growth;
    for (double v : mu) {
        if (v < -band)
            growth.push_back(std::sqrt(-v));
        else if (v > band)
            ++rep.purely_imaginary_count;
    }
    std::sort(growth.begin(), growth.end(),
              [](double a, double b) { return a > b; });
    for (std::size_t i = 0; i < growth.size();) {
        std::size_t j = i + 1;
        while (j < growth.size() &&
               growth[i] - growth[j] <= 1e-6 * std::max(1.0, growth[i]))
            ++j;
        rep.real_positive.emplace_back(growth[i], static_cast<int>(j - i));
        i = j;
    }
    rep.max_growth_rate = growth.empty() ? 0.0 : growth.front();
    return rep;
}

} // namespace nlsg
