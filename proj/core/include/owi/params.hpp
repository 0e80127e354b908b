#pragma once

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <vector>

#include "owi/constants.hpp"

namespace owi {

// Physical parameters of the four-level system. Levels are numbered the way
// the solver rows are: |1>,|2> are the two ground hyperfine states, |3> is
// the probe-coupled excited state (D1), |4> the pump-coupled one (D2); both
// optical fields couple out of |1>.
//
// Everything oscillatory is an angular rate in rad/s; mixing rad/s and
// ordinary Hz in equations that add rates to detunings is the classic 2*pi
// bug, so the boundary (config parsing) owns all unit conversion.
struct SystemParams {
    double omega_pr = 0.0;  // probe Rabi frequency, rad/s
    double omega_pu = 0.0;  // pump Rabi frequency, rad/s
    double delta_pr = 0.0;  // probe detuning, rad/s
    double delta_pu = 0.0;  // pump detuning, rad/s
    double delta_hfs = 0.0; // ground-state hyperfine splitting, rad/s

    double gamma3 = 0.0; // |3> spontaneous decay rate, rad/s
    // |4> spontaneous decay rate. The two excited states' lifetimes are close
    // enough that a single symbol is often used for both; when unset we
    // default to gamma3 and keep the distinct parameter for sensitivity work.
    std::optional<double> gamma4;

    double w12 = 0.0; // ground-state exchange (wall-collision) rate, rad/s
    double r34 = 0.0; // |3> -> |4> collisional transfer rate, rad/s
    double r43 = 0.0; // |4> -> |3> collisional transfer rate, rad/s

    double lambda_pr = constants::d1_wavelength; // probe wavelength, m
    double lambda_pu = constants::d2_wavelength; // pump wavelength, m

    // Most probable thermal speed for Doppler averaging, m/s. u = 0 disables
    // Doppler shifting (every velocity node collapses onto v = 0).
    double u = 0.0;

    // Extra dephasing applied to the optical coherences only (rho_13, rho_31,
    // rho_14, rho_41): a knob modeling finite laser linewidth.
    double gamma_laser = 0.0;

    double gamma4_value() const { return gamma4.value_or(gamma3); }
    bool operator==(const SystemParams&) const = default;
};

// Validates all SystemParams invariants; throws validation_error naming the
// first offending field. Returns its argument so call sites can chain.
const SystemParams& validate(const SystemParams& p);

// Density matrix of the four-level system, states ordered |1>..|4>.
// Physically meaningful instances are Hermitian with unit trace.
using DensityMatrix = Eigen::Matrix4cd;

// Largest absolute deviation from Hermiticity, max_ij |rho_ij - conj(rho_ji)|.
double hermiticity_deviation(const DensityMatrix& rho);

// Checks Hermiticity (<= herm_tol), unit trace (<= trace_tol) and that the
// diagonal is real-positive within the same tolerance band; throws
// validation_error describing the first violation.
void check_density_matrix(const DensityMatrix& rho, double herm_tol = 1e-12,
                          double trace_tol = 1e-9);

// Parameters of a gain/absorption spectrum computation.
struct SpectrumParams {
    double number_density = 0.0; // absorber number density N, m^-3
    double path_length = 0.0;    // optical path L through the medium, m
    std::vector<double> detuning_grid; // probe detunings, rad/s, increasing
    int quadrature_nodes = 64; // starting node count for velocity averaging
    bool operator==(const SpectrumParams&) const = default;
};

// Validates SpectrumParams; throws validation_error naming the violation.
// number_density and path_length may be zero (the spectrum degenerates to
// exactly zero gain), but never negative.
const SpectrumParams& validate(const SpectrumParams& sp);

} // namespace owi
