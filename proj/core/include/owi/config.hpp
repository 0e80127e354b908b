#pragma once

#include <optional>
#include <string>
#include <vector>

#include "owi/liouville.hpp"
#include "owi/params.hpp"
#include "owi/rates.hpp"

namespace owi {

enum class OutputFormat { Csv, Json };

// Buffer-gas entry of a run configuration: the gas spec plus the
// temperature used both for pressure -> density conversion and for the
// thermal relative speed in the transfer rates, and the mass of the vapor
// atom the gas collides with (defaulted from [cell] when one is present).
struct BufferSection {
    BufferGasSpec gas;
    double temperature = 0.0; // K
    double atom_mass = 0.0;   // kg
    bool operator==(const BufferSection&) const = default;
};

// Spectrum entry as configured (the grid is kept in min/max/points form so
// a serialized config stays readable; the expanded grid is built on demand).
struct SpectrumSection {
    double grid_min = 0.0;  // rad/s
    double grid_max = 0.0;  // rad/s
    int grid_points = 0;
    int quadrature_nodes = 64;
    double number_density = 0.0; // m^-3
    double path_length = 0.0;    // m
    bool operator==(const SpectrumSection&) const = default;

    SpectrumParams to_spectrum_params() const; // expands the linear grid
};

struct EvolveSection {
    double t_end = 0.0;     // s; parse_config defaults this to 1000 / gamma3
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = 0.0;  // s; 0 = automatic cap
    int store_every = 1;
    bool operator==(const EvolveSection&) const = default;
};

struct OutputSection {
    std::string path;        // empty = stdout
    OutputFormat format = OutputFormat::Csv;
    bool emit_plot_script = false;
    // Freezes the metadata timestamp so two identical runs produce
    // byte-identical output (used by determinism tests).
    bool fixed_clock = false;
    bool operator==(const OutputSection&) const = default;
};

// A fully resolved run description. Invariant maintained by parse_config and
// the preset factory: each relaxation rate has exactly one source — w12 is
// either direct or derived from `cell`, r34/r43 are either direct or derived
// from `buffer` — and the derived values are already folded into `sys`, so
// solvers never look at the geometry again.
struct RunConfig {
    std::string scenario = "custom";
    EquationMode mode = EquationMode::TraceConserving;
    SystemParams sys;
    std::optional<CellSpec> cell;      // w12 source when present
    std::optional<BufferSection> buffer; // r34/r43 source when present
    std::optional<SpectrumSection> spectrum;
    EvolveSection evolve;
    OutputSection output;
    bool operator==(const RunConfig&) const = default;
};

// Parses the line-oriented `key = value` config dialect:
//   - `#` starts a comment, blank lines are skipped;
//   - `scenario = <preset|custom>` and `mode = <literal|conserving>` appear
//     before any section header;
//   - sections: [system] [cell] [buffer] [spectrum] [evolve] [output];
//   - every physical value carries a mandatory unit suffix (`gamma3 =
//     5.75 MHz_x2pi`, `thickness = 30 um`, `sigma1 = 10e-16 cm2`);
//   - unknown sections or keys, duplicate keys, missing suffixes, and
//     wrong-dimension suffixes are errors, each reported with its line
//     number and (for units) the expected dimension.
// A scenario line loads the named preset first; explicit keys then override
// individual values. Geometry-derived rates are resolved here, at parse
// time, so downstream consumers and output metadata always see final rad/s
// values. Throws config_error.
RunConfig parse_config(const std::string& text);

// Renders a RunConfig back into the config dialect, canonically (fixed key
// order, full precision). parse_config(serialize_config(c)) == c for every
// valid c; geometry sections are emitted as geometry, not as their derived
// rates, so the one-source-per-rate structure survives the round trip.
std::string serialize_config(const RunConfig& config);

// Bundled scenario presets; throws config_error for an unknown name.
// See preset_names() for the list.
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

} // namespace owi
