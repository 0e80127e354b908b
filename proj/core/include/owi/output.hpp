#pragma once

#include <string>
#include <vector>

#include "owi/config.hpp"
#include "owi/liouville.hpp"
#include "owi/params.hpp"
#include "owi/spectrum.hpp"

namespace owi {

// Everything a result file's metadata header records: what ran, under which
// fully resolved configuration, and any warnings the run produced. The
// header embeds the complete serialized config, so a result file can always
// be re-run bit-identically (config.output.fixed_clock freezes the
// timestamp for byte-stable comparisons).
struct RunMetadata {
    std::string command;
    RunConfig config;
    std::vector<std::string> warnings;
};

// Each renderer returns the full file body in the format selected by
// config.output.format: CSV with '#'-prefixed metadata lines, or a JSON
// object {"metadata": ..., "columns": [...], "rows": [[...], ...]}.
// Numbers are written in scientific notation with 16 significant digits.

// Derived relaxation rates and speeds (requires cell and buffer sections).
std::string render_rates(const RunMetadata& meta);

// Time series of all sixteen density-matrix components (re/im pairs) plus
// the derived probe_im_rho13 and probe_inversion (rho33 - rho11) columns.
std::string render_trajectory(const RunMetadata& meta, const Trajectory& traj);

// The 4x4 steady state as (i, j, re, im) rows, with the closed-form
// probe-coherence cross-check residual recorded in the metadata.
std::string render_steady(const RunMetadata& meta, const DensityMatrix& rho,
                          double closed_form_residual);

// detuning_radps, gain, transmission rows.
std::string render_spectrum(const RunMetadata& meta, const SpectrumResult& result);

// Gnuplot script rendering a result file: kind "trajectory" plots the four
// populations and the probe coherence; kind "spectrum" plots transmission
// against detuning with a unity baseline. The script bytes depend only on
// (result_path, kind), never on the data. Unknown kinds are config_errors.
std::string plot_script_text(const std::string& result_path,
                             const std::string& kind);

// Validates that result_path exists and carries the header the kind
// expects, then writes plot_script_text next to it as "<result_path>.gp".
// Returns the script path. Throws config_error on a missing or garbled
// result file or an unknown kind.
std::string emit_plot_script(const std::string& result_path,
                             const std::string& kind);

} // namespace owi
