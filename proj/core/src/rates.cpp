#include "owi/rates.hpp"

#include <cmath>
#include <sstream>

#include "owi/constants.hpp"
#include "owi/errors.hpp"

namespace owi {

namespace {

void require_positive(double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0))
        throw validation_error(std::string(name) + " must be finite and > 0");
}

} // namespace

double reduced_mass(double m_a, double m_b) {
    require_positive(m_a, "m_a");
    require_positive(m_b, "m_b");
    return m_a * m_b / (m_a + m_b);
}

double mean_relative_speed(double temperature, double mu) {
    require_positive(temperature, "temperature");
    require_positive(mu, "mu");
    return std::sqrt(8.0 * constants::k_boltzmann * temperature /
                     (constants::pi * mu));
}

double most_probable_speed(double temperature, double mass) {
    require_positive(temperature, "temperature");
    require_positive(mass, "mass");
    return std::sqrt(2.0 * constants::k_boltzmann * temperature / mass);
}

std::pair<double, double> collisional_transfer_rates(const BufferGasSpec& gas,
                                                     double temperature,
                                                     double atom_mass) {
    require_positive(gas.number_density, "number_density");
    require_positive(gas.sigma1, "sigma1");
    require_positive(gas.sigma2, "sigma2");
    require_positive(gas.molecule_mass, "molecule_mass");
    require_positive(atom_mass, "atom_mass");
    const double mu = reduced_mass(atom_mass, gas.molecule_mass);
    const double v_av = mean_relative_speed(temperature, mu);
    return {gas.number_density * gas.sigma1 * v_av,
            gas.number_density * gas.sigma2 * v_av};
}

double wall_relaxation(const CellSpec& cell) {
    require_positive(cell.length, "length");
    require_positive(cell.width, "width");
    require_positive(cell.thickness, "thickness");
    require_positive(cell.atom_mass, "atom_mass");
    // Mean speed (not the most probable speed) of the vapor atoms: the wall
    // collision rate is a flux average, v_bar = sqrt(8 k_B T / (pi m)).
    const double v_bar =
        mean_relative_speed(cell.temperature, cell.atom_mass);
    const double L = cell.length, W = cell.width, H = cell.thickness;
    // Ballistic mean time of flight between wall hits: T1 = 4V / (v_bar * S)
    // for a convex cavity, so the rate is v_bar * S / (4 V).
    const double surface = 2.0 * (L * W + L * H + W * H);
    const double volume = L * W * H;
    const double rate = v_bar * surface / (4.0 * volume);
    return cell.angular_factor ? constants::two_pi * rate : rate;
}

double pressure_to_density(double pressure, double temperature) {
    require_positive(pressure, "pressure");
    require_positive(temperature, "temperature");
    return pressure / (constants::k_boltzmann * temperature);
}

std::vector<std::string> sanity_warnings(const BufferGasSpec& gas) {
    std::vector<std::string> warnings;
    const auto check = [&](double sigma, const char* name) {
        if (sigma > 0.0 && (sigma < 1e-22 || sigma > 1e-17)) {
            std::ostringstream os;
            os << name << " = " << sigma
               << " m^2 is outside the plausible band [1e-22, 1e-17] m^2; "
                  "check for a cm^2/m^2 mix-up";
            warnings.push_back(os.str());
        }
    };
    check(gas.sigma1, "sigma1");
    check(gas.sigma2, "sigma2");
    return warnings;
}

// Rb*-H2 fine-structure transfer cross sections by measurement temperature,
// stored exactly as published (units converted from 1e-16 cm^2 to m^2).
CrossSectionRow h2_cross_sections_330K() { return {10.0e-20, 13.9e-20, 330.0}; }
CrossSectionRow h2_cross_sections_340K() { return {11.0e-20, 15.0e-20, 340.0}; }
CrossSectionRow h2_cross_sections_1720K() { return {50.0e-20, 30.0e-20, 1720.0}; }

} // namespace owi
