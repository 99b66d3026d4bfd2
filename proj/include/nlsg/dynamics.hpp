#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "nlsg/graph.hpp"
#include "nlsg/stationary.hpp"

namespace nlsg {

struct EvolveOptions {
    double tau = 1e-3;
    double t_end = 1.0;
    // momentum bookkeeping; empty -> incoming edges get the minus sign
    SignPattern pattern;
    int functional_stride = 1; // cadence of full functional records
    int record_stride = 10;    // cadence of deviation records / CSV rows
    int snapshot_stride = 0;   // 0 keeps only the initial and final fields
    double fp_tol = 1e-12;
    int fp_max_iter = 60;
    // when set, tracks || |Psi(t)| - |reference| ||_{L2} at the
    // functional cadence
    const GraphField* deviation_reference = nullptr;
    double stop_when_deviation_above = 0.0; // 0 disables early stop
};

struct StepRecord {
    double t;
    double mass_q, energy_e, momentum_p;
    double vertex_flux;          // sum_j (-1)^{m_j} |psi_j'(0)|^2
    double vertex_flux_pairwise; // K=1 equivalent quadratic form, else NaN
    double deviation;            // distance from reference, NaN if untracked
};

// Time series produced by the implicit midpoint (Crank-Nicolson) stepper.
// One linear stage per step is solved with the nonlinear coefficient frozen
// at the converged midpoint, which conserves the discrete mass to roundoff.
struct Trajectory {
    StarGraph graph;
    EdgeGrid grid;
    SignPattern pattern;
    double tau = 0.0;

    std::vector<StepRecord> steps; // every step including t = 0
    std::vector<std::pair<double, double>> group_deviation; // (t, dev)
    std::vector<std::pair<double, GraphField>> snapshots;
    GraphField final_field;

    double q_drift_rel = 0.0;
    double e_drift_rel = 0.0;
    double max_tail_amplitude = 0.0;
    int max_fp_iterations = 0;
    bool stopped_early = false;
};

Trajectory evolve(const StarGraph& g, const GraphField& initial, double tau,
                  double t_end);
Trajectory evolve(const StarGraph& g, const GraphField& initial,
                  const EvolveOptions& opt);

// Newton refinement of a sampled state onto the exact equilibrium of the
// spatial discretization (the sampled profile is O(h^2) off it, which
// otherwise shows up as a small orbit wobble). The Jacobian is the
// real-part Hessian in the same vertex-DOF layout.
ShiftedState discrete_stationary_state(const ShiftedState& sampled);

// max over same-group edge pairs of || a_i^{1/p} psi_i - a_j^{1/p} psi_j ||,
// recorded during the run
std::vector<std::pair<double, double>>
reduction_deviation(const Trajectory& traj);

struct MomentumBalance {
    std::vector<double> t;             // interior record times
    std::vector<double> dp_dt;         // centered difference of P
    std::vector<double> flux;          // signed vertex flux
    std::vector<double> flux_pairwise; // K=1 pairwise form
    double max_mismatch = 0.0;         // max |dp_dt - flux|
};
MomentumBalance momentum_balance(const Trajectory& traj);

// Soliton launched on the incoming group at x = center (< 0 on the line
// picture) with speed c; grid inferred unless supplied.
GraphField traveling_soliton_field(const StarGraph& g, const EdgeGrid& grid,
                                   double speed, double center);
GraphField traveling_soliton_exact(const StarGraph& g, const EdgeGrid& grid,
                                   double speed, double center, double t);

struct TransitResult {
    double profile_error;            // relative L2 against the exact transit
    double transmitted_mass_fraction;
    Trajectory trajectory;
};
TransitResult transit_test(const StarGraph& g, double speed, double x_start,
                           double tau = 1e-3, double target_h = 0.01);

// Smooth seeded perturbation vanishing at the vertex, projected off the
// phase, scaling and translation directions, scaled to the given relative
// amplitude.
GraphField perturbed_state_field(const ShiftedState& state,
                                 std::uint64_t seed, double amplitude);

struct GrowthResult {
    bool detected = false;
    double rate = 0.0;
    double r_squared = 0.0;
    double window_t0 = 0.0, window_t1 = 0.0;
    double max_deviation = 0.0;
};
// Evolves the perturbed state and fits log-growth of the modulus distance
// on the window 1e-5 < d < 1e-2. The state is refined to the discrete
// equilibrium first so the window sees the perturbation alone. No growth
// is an outcome, not an error.
GrowthResult growth_rate(const ShiftedState& state, std::uint64_t seed,
                         double t_window, double tau = 2e-3,
                         double amplitude = 1e-6);

// Energy of the line soliton of mass mu carried by an edge of weight
// alpha_j, evaluated by quadrature; scales as -C alpha^{4/(2-p)} mu^{(p+2)/(2-p)}.
double free_wave_energy(double alpha_j, double power, double mu);

} // namespace nlsg
