#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "nlsg/graph.hpp"

namespace nlsg {

// Solution of the half-line linearized equation
//   -v'' + v - (2p+1)(p+1) sech^2(p x) v = lambda v,   lambda < 1,
// normalized so that v(x) e^{sqrt(1-lambda) x} -> 1 as x -> +infinity.
//
// Integration runs in the bounded variable w(x) = v(x) e^{sqrt(1-lambda) x},
// whose left-going error modes do not grow; v and v' are recovered through
// the exact exponential factor. Values between the stored integration nodes
// come from two-point quintic Taylor interpolation (w, w', w'' at both ends).
class DecayingSolution {
  public:
    double power() const { return power_; }
    double lambda() const { return lambda_; }
    double decay_rate() const { return s_; } // sqrt(1 - lambda)
    double x_min() const { return xs_.front(); }
    double x_max() const { return xs_.back(); }

    double w(double x) const;
    double w_prime(double x) const;
    double v(double x) const;
    double v_prime(double x) const;
    std::pair<double, double> eval(double x) const; // (v, v')

    // sign changes of v between stored nodes, left to right
    std::vector<std::pair<double, double>> sign_change_brackets() const;

    friend DecayingSolution decaying_solution(double, double, double, double);

  private:
    double power_ = 1, lambda_ = 0, s_ = 1;
    std::vector<double> xs_, ws_, dws_, d2ws_; // ascending in x
    std::pair<double, double> eval_w(double x) const;
};

// Window defaults to [-x_max, x_max] with x_max = max(20, |a|+15)/min(1,p);
// throws lambda_in_continuum for lambda >= 1 - 1e-6.
DecayingSolution decaying_solution(double power, double lambda);
DecayingSolution decaying_solution(double power, double lambda, double x_left,
                                   double x_right);

struct MatchingValues {
    double v_a, v_minus_a;   // v(a), v(-a)
    double dv_a, dv_minus_a; // v'(a), v'(-a)
    double case_c;           // v(-a) v'(a) + v(a) v'(-a)
};
MatchingValues matching_values(const StarGraph& g, double a, double lambda);

// Determinant whose zeros in lambda are the point spectrum of the
// real-part Hessian on the graph:
//   (prod_j alpha_j^{1/p}) (sum_{j<K} alpha_j^{-2/p})
//     v(a)^{K-1} v(-a)^{N-K-1} [v(-a) v'(a) + v(a) v'(-a)]
double determinant(const StarGraph& g, double a, double lambda);

enum class MatchCase { A, B, C, Combined };
const char* match_case_name(MatchCase c);

struct SpectralEntry {
    double lambda;
    int multiplicity;
    MatchCase tag;
};

struct SpectralReport {
    std::vector<SpectralEntry> entries; // ascending, all below 1
    int morse_index = 0;                // sum of multiplicities, lambda < -tol
    int zero_multiplicity = 0;          // |lambda| <= tol
};

struct SpectrumWindow {
    double lo, hi;
};

SpectrumWindow default_window(double power);
SpectralReport find_point_spectrum(const StarGraph& g, double a);
SpectralReport find_point_spectrum(const StarGraph& g, double a,
                                   SpectrumWindow window,
                                   int grid_points = 2000);

// Lowest eigenvalue of the scalar line operator, 1 - (p+1)^2 analytically;
// computed here by shooting on the even-mode condition v'(0) = 0.
double scalar_ground_state(double power);

// Zero x0(lambda) of the decaying solution for lambda in (ground state, 0);
// strictly increasing in lambda with x0(0) = 0.
std::vector<std::pair<double, double>> zero_path(double power, double lo,
                                                 double hi, int n_samples);

// p = 1 closed forms used as oracles for the integrator.
double closed_form_w(double x, double lambda);
double closed_form_v(double x, double lambda);
// second negative eigenvalue of the shifted-state Hessian at p = 1:
// -(3/2) tanh|a| (tanh|a| + sqrt(1 + 3 sech^2 a))
double closed_form_lambda1(double a);

namespace detail {

// Raw integration of the v-equation with arbitrary terminal data,
// for cross-checks (Wronskian tests). Nodes ascending.
struct RawSolution {
    std::vector<double> xs, vs, dvs;
};
RawSolution integrate_linearized(double power, double lambda, double x_from,
                                 double x_to, double v0, double dv0,
                                 double rtol = 1e-12);

// Bracketed root refinement (Brent); throws root_refinement_failure.
double brent(const std::function<double(double)>& f, double a, double b,
             double fa, double fb, double xtol, int max_iter = 200);

} // namespace detail

} // namespace nlsg
