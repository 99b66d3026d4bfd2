#include "nlsg/stationary.hpp"

#include <cmath>
#include <string>

namespace nlsg {

double soliton_profile(double power, double x) {
    // sech^{1/p}(p x) = exp((log 2 - t - log1p(exp(-2t))) / p), t = |p x|
    const double t = std::abs(power * x);
    return std::exp((std::log(2.0) - t - std::log1p(std::exp(-2.0 * t))) /
                    power);
}

double soliton_profile_derivative(double power, double x) {
    return -soliton_profile(power, x) * std::tanh(power * x);
}

namespace {

ShiftedState build_state(const StarGraph& g, const EdgeGrid& grid, double a,
                         double omega, SignPattern pattern) {
    ShiftedState s;
    s.graph = g;
    s.shift = a;
    s.omega = omega;
    s.pattern = std::move(pattern);
    s.field = GraphField::zeros(g.n_edges, grid);
    const double root_omega = std::sqrt(omega);
    const double amp = std::pow(omega, 1.0 / (2.0 * g.power));
    const double abs_a = std::abs(a);
    for (int j = 0; j < g.n_edges; ++j) {
        const double scale = amp * g.alpha_pow(j, -1.0 / g.power);
        const double shift_j = s.pattern.sign(j) * abs_a;
        auto& e = s.field.edges[j];
        for (int i = 0; i < grid.n_points; ++i)
            e[i] = scale * soliton_profile(g.power,
                                           root_omega * (grid.x(i) + shift_j));
    }
    return s;
}

} // namespace

ShiftedState half_soliton(const StarGraph& g, const EdgeGrid& grid) {
    return build_state(g, grid, 0.0, 1.0, canonical_pattern(g, 0.0));
}

ShiftedState half_soliton(const StarGraph& g) {
    return half_soliton(g, make_grid(g.power, 0.0));
}

ShiftedState shifted_state(const StarGraph& g, const EdgeGrid& grid,
                           double a) {
    return build_state(g, grid, a, 1.0, canonical_pattern(g, a));
}

ShiftedState shifted_state(const StarGraph& g, double a) {
    return shifted_state(g, make_grid(g.power, std::abs(a)), a);
}

ShiftedState shifted_state(const StarGraph& g, const EdgeGrid& grid, double a,
                           SignPattern pattern) {
    if (pattern.size() != g.n_edges)
        throw inadmissible_pattern("pattern length does not match edge count");
    if (a != 0.0 && !pattern_admissible(g, pattern))
        throw inadmissible_pattern(
            "signed weight sum nonzero; pattern admits no shifted state");
    return build_state(g, grid, a, 1.0, std::move(pattern));
}

ShiftedState scale_state(const ShiftedState& s, double omega) {
    if (!(omega > 0.0))
        throw nonpositive_omega("frequency must be positive");
    return build_state(s.graph, s.field.grid, s.shift, omega, s.pattern);
}

double stationary_residual(const ShiftedState& s) {
    const StarGraph& g = s.graph;
    const EdgeGrid& grid = s.field.grid;
    const double h = grid.spacing();
    const double c = g.power + 1.0;
    double r = 0.0;
    for (int j = 0; j < g.n_edges; ++j) {
        const auto& e = s.field.edges[j];
        const double a2 = g.alphas[j] * g.alphas[j];
        for (int i = 1; i + 1 < grid.n_points; ++i) {
            const double u = e[i].real();
            const double lap =
                (e[i - 1].real() - 2.0 * u + e[i + 1].real()) / (h * h);
            const double res = -lap + s.omega * u -
                               c * a2 * std::pow(u * u, g.power) * u;
            r = std::max(r, std::abs(res));
        }
    }
    const VertexResiduals vr = vertex_residuals(g, s.field);
    return r + vr.continuity + vr.kirchhoff;
}

std::uint64_t count_families(int n_edges) {
    if (n_edges < 2 || n_edges % 2 != 0)
        throw odd_edge_count("family count requires even N >= 2");
    // binomial(N, N/2) / 2 stays well inside 64 bits for N <= 60
    std::uint64_t binom = 1;
    for (int i = 1; i <= n_edges / 2; ++i)
        binom = binom * (n_edges / 2 + i) / i;
    return binom / 2;
}

std::vector<SignPattern> enumerate_patterns(const StarGraph& g, double tol) {
    if (g.n_edges > 20)
        throw error("pattern enumeration is exhaustive and capped at N=20");
    std::vector<SignPattern> found;
    const int n = g.n_edges;
    std::vector<double> w(n);
    double scale = 0.0;
    for (int j = 0; j < n; ++j) {
        w[j] = g.weight_minus_2p(j);
        scale += w[j];
    }
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        double bal = 0.0;
        for (int j = 0; j < n; ++j)
            bal += (mask >> j) & 1u ? -w[j] : w[j];
        if (std::abs(bal) <= tol * scale) {
            SignPattern p;
            p.m.resize(n);
            for (int j = 0; j < n; ++j) p.m[j] = (mask >> j) & 1u;
            found.push_back(std::move(p));
        }
    }
    return found;
}

} // namespace nlsg
