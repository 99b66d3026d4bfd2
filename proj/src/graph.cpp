#include "nlsg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlsg/kernels.hpp"

namespace nlsg {

double StarGraph::alpha_pow(int j, double e) const {
    return std::pow(alphas[j], e);
}

double StarGraph::weight_minus_2p(int j) const {
    return alpha_pow(j, -2.0 / power);
}

double StarGraph::incoming_weight_sum() const {
    double s = 0.0;
    for (int j = 0; j < n_incoming; ++j) s += weight_minus_2p(j);
    return s;
}

double StarGraph::constraint_residual() const {
    double in = 0.0, out = 0.0;
    for (int j = 0; j < n_edges; ++j)
        (j < n_incoming ? in : out) += weight_minus_2p(j);
    return std::abs(in - out) / in;
}

StarGraph StarGraph::make_unchecked(int n_edges, int n_incoming,
                                    std::vector<double> alphas, double power) {
    return StarGraph{n_edges, n_incoming, std::move(alphas), power};
}

StarGraph validate_graph(int n_edges, int n_incoming,
                         std::vector<double> alphas, double power,
                         double tol) {
    if (n_edges < 2 || n_incoming <= 0 || n_incoming >= n_edges)
        throw invalid_topology("need 0 < K < N, got K=" +
                               std::to_string(n_incoming) +
                               ", N=" + std::to_string(n_edges));
    if (static_cast<int>(alphas.size()) != n_edges)
        throw invalid_topology("expected " + std::to_string(n_edges) +
                               " edge weights, got " +
                               std::to_string(alphas.size()));
    if (!(power > 0.0) || !std::isfinite(power))
        throw nonpositive_weight("nonlinearity exponent must be positive");
    for (double a : alphas)
        if (!(a > 0.0) || !std::isfinite(a))
            throw nonpositive_weight("edge weights must be positive finite");

    StarGraph g{n_edges, n_incoming, std::move(alphas), power};
    const double res = g.constraint_residual();
    if (res > tol) {
        std::ostringstream os;
        os << "vertex weight constraint violated, relative residual " << res;
        throw constraint_violated(os.str());
    }
    return g;
}

EdgeGrid make_grid(double power, double max_abs_shift, double target_h) {
    const double a = std::abs(max_abs_shift);
    // floor from the truncation rule, then extend until
    // sech^{1/p}(p x) tails at x = L - |a| drop below 1e-12
    double length = std::max(20.0, a + 20.0) / std::min(1.0, power);
    const double tail = a + 27.7 + std::log(2.0) / power;
    length = std::max({length, tail, 25.0});
    const int n = static_cast<int>(std::ceil(length / target_h)) + 1;
    return EdgeGrid{target_h * (n - 1), n};
}

SignPattern canonical_pattern(const StarGraph& g, double a) {
    SignPattern p;
    p.m.resize(g.n_edges);
    for (int j = 0; j < g.n_edges; ++j) {
        const bool monotone = g.incoming(j) == (a >= 0.0);
        p.m[j] = monotone ? 0 : 1;
    }
    return p;
}

SignPattern complement(SignPattern p) {
    for (auto& b : p.m) b ^= 1;
    return p;
}

double pattern_balance(const StarGraph& g, const SignPattern& p) {
    double s = 0.0;
    for (int j = 0; j < g.n_edges; ++j)
        s += p.sign(j) * g.weight_minus_2p(j);
    return s;
}

bool pattern_admissible(const StarGraph& g, const SignPattern& p,
                        double tol) {
    double scale = 0.0;
    for (int j = 0; j < g.n_edges; ++j) scale += g.weight_minus_2p(j);
    return std::abs(pattern_balance(g, p)) <= tol * scale;
}

GraphField GraphField::zeros(int n_edges, const EdgeGrid& grid) {
    GraphField f;
    f.grid = grid;
    f.edges.assign(n_edges, std::vector<cplx>(grid.n_points, cplx{}));
    return f;
}

bool GraphField::finite() const {
    for (const auto& e : edges)
        for (const cplx& z : e)
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                return false;
    return true;
}

void differentiate(const std::vector<cplx>& f, double h,
                   std::vector<cplx>& df) {
    const std::size_t n = f.size();
    df.resize(n);
    df[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i)
        df[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    df[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
}

cplx vertex_derivative(const std::vector<cplx>& f, double h) {
    return (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
}

double trapezoid(const std::vector<double>& f, double h) {
    double s = 0.0;
    for (double v : f) s += v;
    return h * (s - 0.5 * (f.front() + f.back()));
}

namespace {

// trapezoid of a pointwise map over an edge without materialising the array
template <class F>
double trapz_map(const std::vector<cplx>& e, double h, F&& f) {
    const std::size_t n = e.size();
    double s = 0.5 * (f(e[0]) + f(e[n - 1]));
    for (std::size_t i = 1; i + 1 < n; ++i) s += f(e[i]);
    return h * s;
}

} // namespace

double mass(const GraphField& f) {
    const auto& k = kernels::active();
    const double h = f.grid.spacing();
    double q = 0.0;
    for (const auto& e : f.edges) {
        const double full = k.sum_abs2(e.data(), e.size());
        q += h * (full - 0.5 * (std::norm(e.front()) + std::norm(e.back())));
    }
    return q;
}

double energy(const StarGraph& g, const GraphField& f) {
    const auto& k = kernels::active();
    const double h = f.grid.spacing();
    const double q = g.power + 1.0;
    double e_total = 0.0;
    std::vector<cplx> df;
    for (int j = 0; j < f.n_edges(); ++j) {
        const auto& e = f.edges[j];
        differentiate(e, h, df);
        const double grad =
            h * (k.sum_abs2(df.data(), df.size()) -
                 0.5 * (std::norm(df.front()) + std::norm(df.back())));
        const double nl =
            h * (k.sum_abs2_pow(e.data(), e.size(), q) -
                 0.5 * (std::pow(std::norm(e.front()), q) +
                        std::pow(std::norm(e.back()), q)));
        e_total += grad - g.alphas[j] * g.alphas[j] * nl;
    }
    return e_total;
}

double momentum(const GraphField& f, const SignPattern& pattern) {
    const auto& k = kernels::active();
    const double h = f.grid.spacing();
    double p_total = 0.0;
    std::vector<cplx> df;
    for (int j = 0; j < f.n_edges(); ++j) {
        const auto& e = f.edges[j];
        differentiate(e, h, df);
        const auto im = [](const cplx& d, const cplx& v) {
            return d.imag() * v.real() - d.real() * v.imag();
        };
        const double full = k.imdot(df.data(), e.data(), e.size());
        const double integral =
            h * (full - 0.5 * (im(df.front(), e.front()) +
                               im(df.back(), e.back())));
        p_total += pattern.sign(j) * integral;
    }
    return p_total;
}

VertexResiduals vertex_residuals(const StarGraph& g, const GraphField& f) {
    const double h = f.grid.spacing();
    double cmax = 0.0;
    cplx flux{};
    std::vector<cplx> weighted(f.n_edges());
    for (int j = 0; j < f.n_edges(); ++j) {
        weighted[j] = g.alpha_pow(j, 1.0 / g.power) * f.edges[j][0];
        flux += g.alpha_pow(j, -1.0 / g.power) *
                vertex_derivative(f.edges[j], h);
    }
    for (int i = 0; i < f.n_edges(); ++i)
        for (int j = i + 1; j < f.n_edges(); ++j)
            cmax = std::max(cmax, std::abs(weighted[i] - weighted[j]));
    return VertexResiduals{cmax, std::abs(flux)};
}

} // namespace nlsg
