#pragma once

#include <utility>
#include <vector>

#include "nlsg/graph.hpp"
#include "nlsg/stationary.hpp"

namespace nlsg {

// Second-variation operators of the action at a stationary state:
// `plus` acts on the real perturbation part (potential factor (2p+1)(p+1)),
// `minus` on the imaginary part (factor (p+1)).
enum class HessianKind { plus, minus };

// Second-order discretization on the shared edge grid with one vertex DOF.
// The weighted continuity condition is built into the unknowns
// (psi_j(0) = alpha_j^{-1/p} * gamma) and the flux condition emerges as the
// natural boundary condition of the symmetric form. Entries are stored in
// the mass-scaled basis, so the matrix is exactly symmetric:
// tridiagonal blocks per edge plus one row/column for the vertex DOF.
struct GraphOperator {
    StarGraph graph;
    EdgeGrid grid;
    HessianKind kind = HessianKind::plus;
    double omega = 1.0;

    int per_edge = 0;    // interior DOFs per edge (n_points - 2)
    double vertex_diag = 0.0;
    double offdiag = 0.0;                   // -1/h^2, within-edge coupling
    std::vector<double> coupling;           // vertex <-> first interior, per edge
    std::vector<std::vector<double>> diag;  // interior diagonal per edge
    double pot_inf = 0.0;                   // max potential magnitude

    // mass weights for DOF <-> field conversion
    double vertex_mass = 0.0;  // (h/2) sum_j alpha_j^{-2/p}
    double interior_mass = 0.0;

    int dimension() const { return 1 + graph.n_edges * per_edge; }
    void apply(const double* x, double* y) const;
    // separates O(h^2)-perturbed analytic zero modes from real negatives
    double zero_tolerance() const;

    GraphField to_field(const std::vector<double>& dof) const;
    std::vector<double> from_field(const GraphField& f) const;
};

GraphOperator assemble(const ShiftedState& state, HessianKind kind);
// zero-potential operator (free Laplacian + omega), for testing
GraphOperator assemble_free(const StarGraph& g, const EdgeGrid& grid,
                            HessianKind kind, double omega = 1.0);

struct EigenPair {
    double value;
    std::vector<double> vector; // DOF basis, unit norm
};

// k smallest eigenpairs (k <= 12) by shift-invert Lanczos with full
// reorthogonalization; residuals ||A u - lambda u|| <= 1e-9 max(1,|lambda|).
// An inertia cross-check guards against missed copies of clustered values.
std::vector<EigenPair> lowest_eigenpairs(const GraphOperator& op, int k);

// Number of eigenvalues strictly below sigma, by the pivot signs of the
// arrow LDL^T factorization (spectrum slicing); exact integer answer.
int eigenvalue_count_below(const GraphOperator& op, double sigma);

// (negatives, zeros) counted against zero_tolerance() via inertia counts
std::pair<int, int> morse_index(const GraphOperator& op);

struct StabilityReport {
    std::vector<std::pair<double, int>> real_positive; // (lambda, multiplicity)
    double max_growth_rate = 0.0;
    int purely_imaginary_count = 0; // number of +-i nu pairs
};

// Linearized (spectral stability) eigenproblem
//   lambda [U; W] = [[0, minus], [-plus, 0]] [U; W]
// solved by the symmetric reduction on the non-negative spectral subspace of
// the `minus` operator: with minus = V D V^T (kernel deflated), negative
// eigenvalues mu of S = D^{1/2} V^T plus V D^{1/2} give real pairs
// +-sqrt(-mu), positive mu imaginary pairs. The translation zero mode of
// `plus` is deflated explicitly before counting.
StabilityReport stability_spectrum(const GraphOperator& plus,
                                   const GraphOperator& minus,
                                   int subspace = 200);

namespace detail {
// Lowest m eigenpairs without the public k cap. Pairs below strict_below
// meet the 1e-9 residual; values above it (the discretized continuum
// cluster, whose exact rotation is irrelevant for subspace projections)
// are accepted at relaxed_tol.
std::vector<EigenPair> lanczos_lowest(const GraphOperator& op, int m,
                                      double strict_below = 1e300,
                                      double relaxed_tol = 1e-9);
} // namespace detail

} // namespace nlsg
