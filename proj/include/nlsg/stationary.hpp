#pragma once

#include <cstdint>
#include <vector>

#include "nlsg/graph.hpp"

namespace nlsg {

// sech^{1/p}(p x) and its derivative, stable for large |x|
double soliton_profile(double power, double x);
double soliton_profile_derivative(double power, double x);

// Stationary state of frequency omega: edge j carries
//   alpha_j^{-1/p} omega^{1/(2p)} phi(sqrt(omega) (x + (-1)^{m_j} |a|)).
struct ShiftedState {
    StarGraph graph;
    double shift = 0.0; // a, signed; the field depends on |a| and the pattern
    double omega = 1.0;
    SignPattern pattern;
    GraphField field; // real-valued samples

    double edge_shift(int j) const { return pattern.sign(j) * std::abs(shift); }
};

ShiftedState half_soliton(const StarGraph& g, const EdgeGrid& grid);
ShiftedState half_soliton(const StarGraph& g);

// Canonical pattern inferred from the sign of a.
ShiftedState shifted_state(const StarGraph& g, const EdgeGrid& grid, double a);
ShiftedState shifted_state(const StarGraph& g, double a);
// Explicit pattern; throws inadmissible_pattern when a != 0 and the
// pattern's signed weight sum is nonzero.
ShiftedState shifted_state(const StarGraph& g, const EdgeGrid& grid, double a,
                           SignPattern pattern);

ShiftedState scale_state(const ShiftedState& s, double omega);

// Max interior residual of the stationary equation
//   -Phi'' + omega Phi - (p+1) alpha^2 Phi^{2p+1} = 0
// plus the vertex residuals; O(h^2) for exactly constructed states.
double stationary_residual(const ShiftedState& s);

// Number of one-parameter families for unit weights and even N:
// N! / (2 ((N/2)!)^2)
std::uint64_t count_families(int n_edges);

// All sign patterns whose signed weight sum vanishes (brute force, N <= 20).
std::vector<SignPattern> enumerate_patterns(const StarGraph& g,
                                            double tol = 1e-12);

} // namespace nlsg
