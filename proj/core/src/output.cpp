#include "owi/output.hpp"

#include <json.hpp>

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>

#include "owi/errors.hpp"
#include "owi/rates.hpp"
#include "owi/version.hpp"

namespace owi {

namespace {

using nlohmann::json;

std::string sci(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.15e", v);
    return buf;
}

std::string timestamp(const RunConfig& config) {
    if (config.output.fixed_clock) {
        return "1970-01-01T00:00:00Z";
    }
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

const char* mode_name(EquationMode mode) {
    return mode == EquationMode::Literal ? "literal" : "conserving";
}

// A tabular payload: every renderer reduces to one of these plus metadata.
struct Table {
    std::vector<std::string> columns;
    std::vector<json> rows; // each row is a json array (numbers/strings)
};

std::string render_csv(const RunMetadata& meta, const Table& table,
                       const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ostringstream out;
    out << "# artifact_version = " << version << "\n";
    out << "# command = " << meta.command << "\n";
    out << "# scenario = " << meta.config.scenario << "\n";
    out << "# mode = " << mode_name(meta.config.mode) << "\n";
    out << "# timestamp = " << timestamp(meta.config) << "\n";
    for (const auto& [key, value] : extra) {
        out << "# " << key << " = " << value << "\n";
    }
    for (const auto& w : meta.warnings) {
        out << "# warning = " << w << "\n";
    }
    out << "# config-begin\n";
    std::istringstream config_text(serialize_config(meta.config));
    std::string line;
    while (std::getline(config_text, line)) {
        out << "# " << line << "\n";
    }
    out << "# config-end\n";

    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << (i == 0 ? "" : ",") << table.columns[i];
    }
    out << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) {
                out << ",";
            }
            const json& cell = row[i];
            if (cell.is_number_float()) {
                out << sci(cell.get<double>());
            } else if (cell.is_number_integer()) {
                out << cell.get<long long>();
            } else {
                out << cell.get<std::string>();
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string render_json(const RunMetadata& meta, const Table& table,
                        const std::vector<std::pair<std::string, std::string>>& extra,
                        const std::vector<std::pair<std::string, double>>& extra_numeric) {
    json metadata;
    metadata["artifact_version"] = version;
    metadata["command"] = meta.command;
    metadata["scenario"] = meta.config.scenario;
    metadata["mode"] = mode_name(meta.config.mode);
    metadata["timestamp"] = timestamp(meta.config);
    metadata["warnings"] = meta.warnings;
    metadata["config"] = serialize_config(meta.config);
    for (const auto& [key, value] : extra) {
        metadata[key] = value;
    }
    for (const auto& [key, value] : extra_numeric) {
        metadata[key] = value;
    }

    json doc;
    doc["metadata"] = metadata;
    doc["columns"] = table.columns;
    doc["rows"] = table.rows;
    return doc.dump(2) + "\n";
}

std::string render(const RunMetadata& meta, const Table& table,
                   std::vector<std::pair<std::string, std::string>> extra = {},
                   std::vector<std::pair<std::string, double>> extra_numeric = {}) {
    if (meta.config.output.format == OutputFormat::Json) {
        return render_json(meta, table, extra, extra_numeric);
    }
    // CSV gets the numeric extras as formatted text lines.
    for (const auto& [key, value] : extra_numeric) {
        extra.emplace_back(key, sci(value));
    }
    return render_csv(meta, table, extra);
}

} // namespace

std::string render_rates(const RunMetadata& meta) {
    const RunConfig& c = meta.config;
    if (!c.cell || !c.buffer) {
        throw config_error(
            "the rates command needs both [cell] and [buffer] sections (or a "
            "scenario that provides them, e.g. rb85_cell)");
    }
    const CellSpec& cell = *c.cell;
    const BufferSection& buffer = *c.buffer;

    const double w12 = wall_relaxation(cell);
    const auto transfer = collisional_transfer_rates(
        buffer.gas, buffer.temperature, buffer.atom_mass);
    const double u = most_probable_speed(cell.temperature, cell.atom_mass);
    const double mu = reduced_mass(buffer.atom_mass, buffer.gas.molecule_mass);
    const double v_av = mean_relative_speed(buffer.temperature, mu);

    Table table;
    table.columns = {"quantity", "value", "unit"};
    auto row = [&table](const char* name, double value, const char* unit) {
        table.rows.push_back(json::array({name, value, unit}));
    };
    row("w12", w12, "radps");
    row("r34", transfer.first, "radps");
    row("r43", transfer.second, "radps");
    row("u", u, "mps");
    row("v_av", v_av, "mps");
    return render(meta, table);
}

std::string render_trajectory(const RunMetadata& meta, const Trajectory& traj) {
    Table table;
    table.columns.push_back("t_s");
    for (int i = 1; i <= 4; ++i) {
        for (int j = 1; j <= 4; ++j) {
            const std::string suffix = std::to_string(i) + std::to_string(j);
            table.columns.push_back("re_rho_" + suffix);
            table.columns.push_back("im_rho_" + suffix);
        }
    }
    table.columns.push_back("probe_im_rho13");
    table.columns.push_back("probe_inversion");

    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const DensityMatrix& rho = traj.states[k];
        json row = json::array();
        row.push_back(traj.times[k]);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                row.push_back(rho(i, j).real());
                row.push_back(rho(i, j).imag());
            }
        }
        row.push_back(rho(0, 2).imag());
        row.push_back(rho(2, 2).real() - rho(0, 0).real());
        table.rows.push_back(std::move(row));
    }

    std::vector<std::pair<std::string, std::string>> extra = {
        {"converged", traj.converged ? "true" : "false"},
    };
    return render(meta, table, extra, {{"final_residual", traj.final_residual}});
}

std::string render_steady(const RunMetadata& meta, const DensityMatrix& rho,
                          double closed_form_residual) {
    Table table;
    table.columns = {"i", "j", "re", "im"};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            table.rows.push_back(json::array(
                {i + 1, j + 1, rho(i, j).real(), rho(i, j).imag()}));
        }
    }
    return render(meta, table, {},
                  {{"closed_form_residual", closed_form_residual}});
}

std::string render_spectrum(const RunMetadata& meta, const SpectrumResult& result) {
    Table table;
    table.columns = {"detuning_radps", "gain", "transmission"};
    for (std::size_t i = 0; i < result.detunings.size(); ++i) {
        table.rows.push_back(json::array(
            {result.detunings[i], result.gain[i], result.transmission[i]}));
    }
    RunMetadata merged = meta;
    merged.warnings.insert(merged.warnings.end(), result.warnings.begin(),
                           result.warnings.end());
    return render(merged, table);
}

std::string plot_script_text(const std::string& result_path,
                             const std::string& kind) {
    std::ostringstream out;
    if (kind == "trajectory") {
        out << "#!/usr/bin/env gnuplot\n"
            << "# Populations and probe coherence from a trajectory result.\n"
            << "set datafile separator ','\n"
            << "set datafile commentschars '#'\n"
            << "result = '" << result_path << "'\n"
            << "set terminal pngcairo size 1000,800\n"
            << "set output result . '.png'\n"
            << "set multiplot layout 2,1\n"
            << "set xlabel 't (s)'\n"
            << "set ylabel 'population'\n"
            << "set key outside right\n"
            << "plot result using 1:2 with lines title 'rho11', \\\n"
            << "     result using 1:12 with lines title 'rho22', \\\n"
            << "     result using 1:22 with lines title 'rho33', \\\n"
            << "     result using 1:32 with lines title 'rho44'\n"
            << "set ylabel 'Im rho13'\n"
            << "plot result using 1:34 with lines title 'probe coherence'\n"
            << "unset multiplot\n";
        return out.str();
    }
    if (kind == "spectrum") {
        out << "#!/usr/bin/env gnuplot\n"
            << "# Transmission against probe detuning, unity baseline ruled.\n"
            << "set datafile separator ','\n"
            << "set datafile commentschars '#'\n"
            << "result = '" << result_path << "'\n"
            << "set terminal pngcairo size 1000,600\n"
            << "set output result . '.png'\n"
            << "set xlabel 'probe detuning (rad/s)'\n"
            << "set ylabel 'transmission'\n"
            << "set key outside right\n"
            << "plot 1 with lines dashtype 2 linecolor 'gray' title 'unity', \\\n"
            << "     result using 1:3 with lines title 'transmission'\n";
        return out.str();
    }
    throw config_error("unknown plot kind '" + kind +
                       "'; expected trajectory or spectrum");
}

std::string emit_plot_script(const std::string& result_path,
                             const std::string& kind) {
    const std::string script = plot_script_text(result_path, kind);

    std::ifstream result(result_path);
    if (!result) {
        throw config_error("plot script: result file '" + result_path +
                           "' does not exist");
    }
    // The result must carry the column header the kind expects, whether as
    // a CSV header line or a JSON columns list. A bare substring search is
    // not enough: embedded config lines contain e.g. "plot_script", whose
    // middle happens to read "t_s".
    const std::string marker =
        kind == "trajectory" ? "t_s" : "detuning_radps";
    std::string contents((std::istreambuf_iterator<char>(result)),
                         std::istreambuf_iterator<char>());
    bool has_marker = false;
    std::istringstream stream(contents);
    std::string line;
    while (std::getline(stream, line)) {
        if (line.empty() || line[0] == '#') continue;
        // First non-comment line: the CSV column header.
        has_marker = line.rfind(marker + ",", 0) == 0;
        break;
    }
    if (!has_marker) {
        has_marker = contents.find('"' + marker + '"') != std::string::npos;
    }
    if (!has_marker) {
        throw config_error("plot script: '" + result_path +
                           "' does not look like a " + kind + " result (no '" +
                           marker + "' column)");
    }

    const std::string script_path = result_path + ".gp";
    std::ofstream out(script_path, std::ios::binary);
    if (!out) {
        throw config_error("plot script: cannot write '" + script_path + "'");
    }
    out << script;
    return script_path;
}

} // namespace owi
