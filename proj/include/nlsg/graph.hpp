#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "nlsg/errors.hpp"

namespace nlsg {

using cplx = std::complex<double>;

// Star graph: N half-line edges meeting at one vertex. Edges 0..K-1 are the
// incoming group, K..N-1 the outgoing group. The edge weights enter the
// vertex conditions as alpha_j^{1/p} (continuity) and alpha_j^{-1/p}
// (flux balance) and must satisfy
//   sum_{j<K} alpha_j^{-2/p} == sum_{j>=K} alpha_j^{-2/p}
// for shifted stationary states to exist.
struct StarGraph {
    int n_edges = 0;
    int n_incoming = 0;
    std::vector<double> alphas;
    double power = 1.0; // nonlinearity exponent p

    bool incoming(int j) const { return j < n_incoming; }
    double alpha_pow(int j, double e) const; // alpha_j^e
    double weight_minus_2p(int j) const;     // alpha_j^{-2/p}
    double incoming_weight_sum() const;      // sum_{j<K} alpha_j^{-2/p}
    double constraint_residual() const;      // relative residual of the constraint

    // Bypass validation; used for negative-control experiments only.
    static StarGraph make_unchecked(int n_edges, int n_incoming,
                                    std::vector<double> alphas, double power);
};

// Throws invalid_topology / nonpositive_weight / constraint_violated.
StarGraph validate_graph(int n_edges, int n_incoming,
                         std::vector<double> alphas, double power,
                         double tol = 1e-12);

// Uniform grid shared by every edge; point 0 is the vertex.
struct EdgeGrid {
    double length = 0.0;
    int n_points = 0;

    double spacing() const { return length / (n_points - 1); }
    double x(int i) const { return spacing() * i; }
    bool operator==(const EdgeGrid&) const = default;
};

// Grid long enough that sech-type tails of states shifted by up to
// max_abs_shift stay below 1e-12 at the far end.
EdgeGrid make_grid(double power, double max_abs_shift, double target_h = 0.01);

// One bit per edge; edge j of a shifted state carries the profile
// translated by (-1)^{m_j} |a|.
struct SignPattern {
    std::vector<std::uint8_t> m;

    int size() const { return static_cast<int>(m.size()); }
    int sign(int j) const { return m[j] ? -1 : +1; }
};

// The two patterns of the existence lemma: a >= 0 puts the monotone
// profile on the incoming group, a < 0 the reverse.
SignPattern canonical_pattern(const StarGraph& g, double a);
SignPattern complement(SignPattern p);
// sum_j (-1)^{m_j} alpha_j^{-2/p}; zero iff the pattern admits shifts
double pattern_balance(const StarGraph& g, const SignPattern& p);
bool pattern_admissible(const StarGraph& g, const SignPattern& p,
                        double tol = 1e-12);

struct GraphField {
    EdgeGrid grid;
    std::vector<std::vector<cplx>> edges;

    static GraphField zeros(int n_edges, const EdgeGrid& grid);
    int n_edges() const { return static_cast<int>(edges.size()); }
    bool finite() const;
};

// Conserved functionals, composite trapezoid with second-order one-sided
// derivative stencils at the ends.
double mass(const GraphField& f);
double energy(const StarGraph& g, const GraphField& f);
double momentum(const GraphField& f, const SignPattern& pattern);

struct VertexResiduals {
    double continuity; // max pairwise deviation of alpha_j^{1/p} psi_j(0)
    double kirchhoff;  // |sum_j alpha_j^{-1/p} psi_j'(0)|
};
VertexResiduals vertex_residuals(const StarGraph& g, const GraphField& f);

// Stencil helpers shared across modules.
void differentiate(const std::vector<cplx>& f, double h, std::vector<cplx>& df);
cplx vertex_derivative(const std::vector<cplx>& f, double h);
double trapezoid(const std::vector<double>& f, double h);

} // namespace nlsg
