#pragma once

#include <stdexcept>
#include <string>

namespace nlsg {

// Common base so callers can catch toolkit failures in one clause.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// graph construction
struct invalid_topology : error { using error::error; };
struct nonpositive_weight : error { using error::error; };
struct constraint_violated : error { using error::error; };

// stationary states
struct inadmissible_pattern : error { using error::error; };
struct nonpositive_omega : error { using error::error; };
struct odd_edge_count : error { using error::error; };

// shooting
struct lambda_in_continuum : error { using error::error; };
struct integrator_failure : error { using error::error; };
struct window_invalid : error { using error::error; };
struct root_refinement_failure : error { using error::error; };
struct no_zero_found : error { using error::error; };

// discrete operators
struct grid_mismatch : error { using error::error; };
struct factorization_singular : error { using error::error; };
struct no_convergence : error { using error::error; };
struct lminus_indefinite : error { using error::error; };

// dynamics
struct nonlinear_solve_diverged : error { using error::error; };
struct continuity_violated : error { using error::error; };
struct supercritical_power : error { using error::error; };

} // namespace nlsg
