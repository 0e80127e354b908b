#pragma once

#include <numbers>

namespace owi::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA SI values. k_B is exact by definition since the 2019 SI revision.
inline constexpr double k_boltzmann = 1.380649e-23;        // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg

// Pressure conversion: 1 Torr = 1/760 of a standard atmosphere.
inline constexpr double pascal_per_torr = 101325.0 / 760.0;

// Isotope and molecule masses (atomic mass evaluation values, in u -> kg).
inline constexpr double rb85_mass = 84.911789738 * atomic_mass_unit;  // kg
inline constexpr double rb87_mass = 86.909180527 * atomic_mass_unit;  // kg
inline constexpr double h2_mass = 2.01588 * atomic_mass_unit;         // kg

// Rubidium D-line wavelengths: the probe couples on D1, the pump on D2.
inline constexpr double d1_wavelength = 795e-9; // m (5S1/2 - 5P1/2)
inline constexpr double d2_wavelength = 780e-9; // m (5S1/2 - 5P3/2)

// Natural decay rate of the 5P1/2 probe level, as an angular rate.
inline constexpr double d1_decay_rate = two_pi * 5.75e6; // rad/s

} // namespace owi::constants
