#pragma once

#include <string>
#include <vector>

#include "owi/params.hpp"

namespace owi {

// Velocity-resolved dimensionless susceptibility of the probe: solves the
// full steady state with both detunings Doppler-shifted for an atom moving
// at velocity v along the (copropagating) beams,
//   delta_pr_eff = delta_pr - k_pr v,  delta_pu_eff = params.delta_pu - k_pu v,
// with k = 2*pi/lambda for each field, and returns
//   chi = (3 lambda_pr^2 N L gamma3 / 4 pi) * Im(rho_13) / omega_pr.
// Positive chi is gain, negative is absorption. The delta_pr argument
// replaces params.delta_pr; params.delta_pu is kept and shifted.
// Requires omega_pr > 0; steady-state solver errors propagate.
double susceptibility_at(const SystemParams& params, const SpectrumParams& sp,
                         double delta_pr, double v);

// Weak-probe closed form of the same quantity: solves the steady state at
// the shifted detunings, then evaluates the stationary probe-coherence
// expression instead of reading rho_13 off the solved state. By default the
// full complex combination om_pr*(rho33 - rho11) + om_pu*rho43 is kept and
// the imaginary part taken at the end; with strict_literal the combination
// is truncated to its real part (Re(rho43)) and weighted by the bare
// Lorentzian 2D/(D^2 + (2 delta)^2), D = (r34+r43)/2 + w12 + gamma3 — a
// historically common shorthand that is only exact on resonance.
double closed_form_susceptibility(const SystemParams& params,
                                  const SpectrumParams& sp, double delta_pr,
                                  double v, bool strict_literal = false);

struct AverageResult {
    double value = 0.0;       // the Doppler-averaged gain G
    bool converged = false;   // node-doubling changed G by < 1e-6 relative
    int nodes_used = 0;       // node count of the accepted evaluation
    double last_rel_change = 0.0; // |G_2n - G_n| / max(|G_2n|, floor) at the end
};

// Doppler average of the susceptibility at one probe detuning:
//   G = (1/(u sqrt(pi))) * integral chi(delta_pr, v) exp(-v^2/u^2) dv,
// evaluated by Gauss-Hermite quadrature in x = v/u starting from
// sp.quadrature_nodes nodes. The node count doubles until the value moves
// by less than 1e-6 relative (with a 1e-12 absolute floor for values at the
// numerical-noise level) or node_cap is reached; the caller learns which
// through the result. The normalization makes G a weighted mean of chi, so
// a chi constant in v comes back unchanged; literal_integral instead
// returns the raw integral (the normalized value times u*sqrt(pi)).
// u = 0 is the degenerate limit: G = chi(delta_pr, 0), trivially converged.
AverageResult doppler_average(const SystemParams& params,
                              const SpectrumParams& sp, double delta_pr,
                              int node_cap = 1024,
                              bool literal_integral = false);

struct SpectrumResult {
    std::vector<double> detunings;     // rad/s, copy of the input grid
    std::vector<double> gain;          // G at each grid point
    std::vector<double> transmission;  // exp(gain)
    SystemParams params;               // snapshot of the inputs
    SpectrumParams spectrum_params;
    std::vector<std::string> warnings; // accuracy warnings, grid order
};

// Maps doppler_average over sp.detuning_grid and sets
// transmission = exp(gain). Grid points are independent pure functions of
// (params, sp, delta); with jobs > 1 they are distributed over a thread
// pool, and results are identical to the sequential evaluation regardless
// of scheduling. Per-point solver failures are collected and rethrown as a
// single solver_error naming the failing grid indices; per-point accuracy
// warnings are attached to the result instead.
SpectrumResult spectrum(const SystemParams& params, const SpectrumParams& sp,
                        int jobs = 1);

} // namespace owi
