#pragma once

#include <string>
#include <utility>
#include <vector>

namespace owi {

// Buffer-gas data controlling collisional transfer between the two excited
// fine-structure states: |3> -> |4> goes with sigma1, |4> -> |3> with sigma2.
struct BufferGasSpec {
    double number_density = 0.0; // buffer molecules per m^3
    double sigma1 = 0.0;         // |3> -> |4> transfer cross-section, m^2
    double sigma2 = 0.0;         // |4> -> |3> transfer cross-section, m^2
    double molecule_mass = 0.0;  // kg
    bool operator==(const BufferGasSpec&) const = default;
};

// Rectangular vapor-cell geometry for the ballistic wall-relaxation estimate.
struct CellSpec {
    double length = 0.0;      // m
    double width = 0.0;       // m
    double thickness = 0.0;   // m (along the optical path)
    double temperature = 0.0; // K
    double atom_mass = 0.0;   // kg
    // The wall-relaxation formula below carries a 2*pi factor that promotes
    // the kinetic 1/T1 collision rate into the angular-rate regime used by
    // every other coefficient. Its physical status is debatable, so it can be
    // switched off for sensitivity studies.
    bool angular_factor = true;
    bool operator==(const CellSpec&) const = default;
};

// mu = m_a * m_b / (m_a + m_b). Both masses in kg, > 0.
double reduced_mass(double m_a, double m_b);

// Mean relative thermal speed sqrt(8 k_B T / (pi * mu)), m/s.
double mean_relative_speed(double temperature, double mu);

// Most probable speed of a Maxwell-Boltzmann distribution,
// sqrt(2 k_B T / m), m/s. This is the width parameter u of the Doppler
// velocity weight exp(-v^2/u^2).
double most_probable_speed(double temperature, double mass);

// Collisional transfer rates (r34, r43) = n * (sigma1, sigma2) * v_av where
// v_av uses the reduced mass of the atom/buffer-molecule pair. rad/s.
std::pair<double, double> collisional_transfer_rates(const BufferGasSpec& gas,
                                                     double temperature,
                                                     double atom_mass);

// Ballistic wall-relaxation rate of the ground-state populations: the mean
// wall-collision rate v_bar * S / (4 V) for the rectangular cell, times 2*pi
// when cell.angular_factor is set (see CellSpec). rad/s.
double wall_relaxation(const CellSpec& cell);

// Ideal-gas pressure -> number density, n = P / (k_B T). Pa, K -> m^-3.
double pressure_to_density(double pressure, double temperature);

// Plausibility warnings for a buffer-gas spec. The classic unit slip is
// entering a cross-section in cm^2 where m^2 is expected (4 orders of
// magnitude); any sigma outside [1e-22, 1e-17] m^2 earns a warning naming the
// field. Returns human-readable messages; empty means nothing suspicious.
std::vector<std::string> sanity_warnings(const BufferGasSpec& gas);

// Measured cross-section presets for Rb*-H2 fine-structure transfer, by
// measurement temperature. Values in m^2.
struct CrossSectionRow {
    double sigma1; // m^2
    double sigma2; // m^2
    double temperature; // K at which the row was measured
};
// 330 K row; the default used by the bundled scenario presets.
CrossSectionRow h2_cross_sections_330K();
// 340 K alternate row.
CrossSectionRow h2_cross_sections_340K();
// 1720 K row. The source quotes these as lower bounds; stored as-is.
CrossSectionRow h2_cross_sections_1720K();

} // namespace owi
