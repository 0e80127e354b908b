// owi-sim: four-level vapor simulation driver.
//
//   owi-sim <command> --config <path> [--out <path>] [--format csv|json]
//           [--jobs N] [--mode literal|conserving] [--plot]
//
// Commands: rates, evolve, steady, spectrum. Exit codes: 0 success,
// 1 configuration error, 2 solver error. Errors are reported to stderr as a
// single-line JSON record.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "owi/config.hpp"
#include "owi/errors.hpp"
#include "owi/liouville.hpp"
#include "owi/output.hpp"
#include "owi/rates.hpp"
#include "owi/spectrum.hpp"

namespace {

struct Options {
    std::string config_path;
    std::string out;
    std::string format;
    std::string mode;
    int jobs = 1;
    bool plot = false;
};

void add_common_options(CLI::App& cmd, Options& opt) {
    cmd.add_option("--config", opt.config_path, "Path to the run configuration")
        ->required();
    cmd.add_option("--out", opt.out, "Output file (default: stdout)");
    cmd.add_option("--format", opt.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd.add_option("--jobs", opt.jobs, "Worker threads for grid evaluation")
        ->check(CLI::Range(1, 4096));
    cmd.add_option("--mode", opt.mode, "Equation mode")
        ->check(CLI::IsMember({"literal", "conserving"}));
    cmd.add_flag("--plot", opt.plot, "Also emit a gnuplot script for the result");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw owi::config_error("cannot read config file '" + path + "'");
    }
    std::ostringstream contents;
    contents << in.rdbuf();
    return contents.str();
}

owi::RunConfig load_config(const Options& opt) {
    owi::RunConfig config = owi::parse_config(read_file(opt.config_path));
    if (!opt.out.empty()) {
        config.output.path = opt.out;
    }
    if (!opt.format.empty()) {
        config.output.format = opt.format == "json" ? owi::OutputFormat::Json
                                                    : owi::OutputFormat::Csv;
    }
    if (!opt.mode.empty()) {
        config.mode = opt.mode == "literal" ? owi::EquationMode::Literal
                                            : owi::EquationMode::TraceConserving;
    }
    if (opt.plot) {
        config.output.emit_plot_script = true;
    }
    return config;
}

owi::RunMetadata make_metadata(const std::string& command,
                               const owi::RunConfig& config) {
    owi::RunMetadata meta;
    meta.command = command;
    meta.config = config;
    if (config.buffer) {
        meta.warnings = owi::sanity_warnings(config.buffer->gas);
    }
    return meta;
}

void deliver(const owi::RunConfig& config, const owi::RunMetadata& meta,
             const std::string& body, const std::string& plot_kind) {
    for (const auto& warning : meta.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    if (config.output.path.empty()) {
        std::cout << body;
    } else {
        std::ofstream out(config.output.path, std::ios::binary);
        if (!out) {
            throw owi::config_error("cannot write output file '" +
                                    config.output.path + "'");
        }
        out << body;
        if (!out.good()) {
            throw owi::config_error("short write to '" + config.output.path + "'");
        }
    }

    if (config.output.emit_plot_script) {
        if (plot_kind.empty()) {
            throw owi::config_error(
                "plot scripts are available for the evolve and spectrum "
                "commands only");
        }
        if (config.output.path.empty()) {
            throw owi::config_error(
                "plot scripts need a result file; give --out (or [output] path)");
        }
        if (config.output.format != owi::OutputFormat::Csv) {
            throw owi::config_error("plot scripts read csv results; use "
                                    "--format csv");
        }
        const std::string script =
            owi::emit_plot_script(config.output.path, plot_kind);
        std::cerr << "plot script written to " << script << "\n";
    }
}

owi::DensityMatrix initial_state() {
    // Thermal ground-state mixture: population equally split between the two
    // ground hyperfine states, excited states empty, no coherences.
    owi::DensityMatrix rho = owi::DensityMatrix::Zero();
    rho(0, 0) = 0.5;
    rho(1, 1) = 0.5;
    return rho;
}

int run_command(const std::string& command, const Options& opt) {
    const owi::RunConfig config = load_config(opt);
    owi::RunMetadata meta = make_metadata(command, config);

    if (command == "rates") {
        deliver(config, meta, owi::render_rates(meta), "");
        return 0;
    }

    if (command == "evolve") {
        const owi::Liouvillian liouvillian =
            owi::build_liouvillian(config.sys, config.mode);
        owi::EvolveControls controls;
        controls.rel_tol = config.evolve.rel_tol;
        controls.abs_tol = config.evolve.abs_tol;
        controls.max_step = config.evolve.max_step;
        controls.store_every = config.evolve.store_every;
        const owi::Trajectory traj =
            owi::evolve(initial_state(), liouvillian, config.evolve.t_end, controls);
        deliver(config, meta, owi::render_trajectory(meta, traj), "trajectory");
        return 0;
    }

    if (command == "steady") {
        const owi::Liouvillian liouvillian =
            owi::build_liouvillian(config.sys, config.mode);
        const owi::DensityMatrix rho = owi::steady_state(liouvillian);
        const std::complex<double> closed_form =
            owi::probe_coherence_closed_form(rho, config.sys);
        const double residual = std::abs(closed_form - rho(0, 2));
        deliver(config, meta, owi::render_steady(meta, rho, residual), "");
        return 0;
    }

    if (command == "spectrum") {
        if (!config.spectrum) {
            throw owi::config_error(
                "the spectrum command needs a [spectrum] section (or a "
                "scenario that provides one, e.g. fig4_walls)");
        }
        const owi::SpectrumParams sp = config.spectrum->to_spectrum_params();
        const owi::SpectrumResult result =
            owi::spectrum(config.sys, sp, opt.jobs);
        deliver(config, meta, owi::render_spectrum(meta, result), "spectrum");
        return 0;
    }

    throw owi::config_error("unknown command '" + command + "'");
}

int report_error(const char* category, const std::exception& e, int code) {
    nlohmann::json record;
    record["error"] = category;
    record["message"] = e.what();
    std::cerr << record.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Four-level vapor simulator: population dynamics, steady "
                 "states, and Doppler-averaged probe gain spectra"};
    app.require_subcommand(1);

    Options opt;
    const char* commands[] = {"rates", "evolve", "steady", "spectrum"};
    const char* descriptions[] = {
        "Print geometry- and gas-derived relaxation rates",
        "Integrate the equations of motion from the thermal ground state",
        "Solve the steady state directly",
        "Compute a Doppler-averaged gain/transmission spectrum",
    };
    for (int i = 0; i < 4; ++i) {
        CLI::App* cmd = app.add_subcommand(commands[i], descriptions[i]);
        add_common_options(*cmd, opt);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run_command(command, opt);
    } catch (const owi::config_error& e) {
        return report_error("config", e, 1);
    } catch (const owi::solver_error& e) {
        return report_error("solver", e, 2);
    } catch (const std::exception& e) {
        return report_error("internal", e, 2);
    }
}
