#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "owi/params.hpp"

namespace owi {

// The four-level optical Bloch equations close only up to one subtlety: the
// commonly written ground-exchange term feeds |2> from |1> without the
// reverse flow, so summing the population equations leaves a trace drift of
// rate w12*(rho22 - rho11). Literal mode keeps that equation set verbatim
// (useful for auditing the transcription); TraceConserving restores the
// symmetric exchange and is the default everywhere.
enum class EquationMode { Literal, TraceConserving };

// Matrix form of the equations of motion: d(vec rho)/dt = matrix * vec rho,
// where vec is column stacking (component (i,j) of rho sits at index i + 4j,
// 0-based). Entries are rad/s.
struct Liouvillian {
    Eigen::Matrix<std::complex<double>, 16, 16> matrix;
    EquationMode mode = EquationMode::TraceConserving;
    SystemParams params; // snapshot of the inputs, for downstream consumers
};

// Builds the generator for the given parameters. Conventions:
//  - collisional transfer is directional: population leaves |3> at r34 and
//    |4> at r43, while every coherence decay uses the mean (r34 + r43) / 2;
//  - gamma_laser adds to the optical coherences rho_13, rho_31, rho_14,
//    rho_41 only;
//  - a nonzero pump detuning enters through the standard rotating-frame
//    phases: rho_14/rho_41 rotate at delta_pu, the excited-state coherences
//    rho_34/rho_43 at the difference delta_pr - delta_pu.
Liouvillian build_liouvillian(const SystemParams& params, EquationMode mode);

// d(rho)/dt via the 16x16 matrix.
DensityMatrix rhs(const DensityMatrix& rho, const Liouvillian& liouvillian);

// d(rho)/dt by evaluating the sixteen component equations directly, term by
// term, with no matrix in sight. This is a deliberately independent second
// code path kept as the oracle for build_liouvillian (and vice versa); the
// two must agree to near machine precision on arbitrary states.
DensityMatrix rhs_direct(const DensityMatrix& rho, const SystemParams& params,
                         EquationMode mode);

struct EvolveControls {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    // Hard cap on the adaptive step. 0 selects the default guard
    // 1 / (50 * fastest rate in the problem), which keeps the explicit
    // stepper honest through the fast Rabi oscillation.
    double max_step = 0.0;
    // Keep every k-th accepted step in the trajectory (the final state is
    // always kept).
    int store_every = 1;
    // Stop before t_end once ||d(rho)/dt||_inf falls below the stop
    // threshold: residual_stop when > 0, otherwise the same
    // 1e-6 * max(gamma3, 1) used for the convergence flag.
    bool stop_when_converged = false;
    double residual_stop = 0.0; // rad/s; 0 selects the default threshold
};

struct Trajectory {
    std::vector<double> times;          // s, strictly increasing
    std::vector<DensityMatrix> states;  // same length as times
    bool converged = false; // ||d(rho)/dt||_inf < 1e-6 * max(gamma3, 1) at end
    double final_residual = 0.0; // ||d(rho)/dt||_inf at the final state, rad/s
};

// Adaptive explicit integration (Cash-Karp 4/5 with step-size control) of
// d(vec rho)/dt = L * vec rho from rho0 to t_end. Throws solver_error on
// step-size underflow (stiffness failure), reporting the time reached.
Trajectory evolve(const DensityMatrix& rho0, const Liouvillian& liouvillian,
                  double t_end, const EvolveControls& controls = {});

// Steady state of the conserving generator: solves L x = 0 with the
// redundant rho_11 row replaced by the unit-trace constraint. Throws
// solver_error for Literal-mode input (that generator has no stationary
// unit-trace state in general) and when the constrained system is
// ill-conditioned (condition estimate above 1e14). The conditioning guard
// is an estimate, not a rank test: a degenerate generator whose stationary
// family is multi-dimensional (e.g. no fields and no ground exchange) can
// factor cleanly, in which case one valid member of the family is returned
// (the residual check still holds).
DensityMatrix steady_state(const Liouvillian& liouvillian);

// The weak-probe closed form of the probe coherence: the stationary
// rho_13 component equation solved for rho_13,
//   rho_13 = [2i om_pr (rho33 - rho11) + 2i om_pu rho43]
//            / (rbar + w12 + gamma3 + 2i delta_pr),   rbar = (r34 + r43)/2.
// Applied to a full steady state it reproduces that state's rho_13 entry
// exactly (it *is* the stationary rho_13 row when gamma_laser = 0); its
// value is diagnostic — the gain channel is the om_pu * rho43 term.
std::complex<double> probe_coherence_closed_form(const DensityMatrix& steady,
                                                 const SystemParams& params);

} // namespace owi
