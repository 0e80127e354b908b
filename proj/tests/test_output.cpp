// Result rendering: CSV/JSON bodies, metadata headers, embedded configs,
// byte determinism under the fixed clock, and gnuplot script emission.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <owi/config.hpp>
#include <owi/errors.hpp>
#include <owi/output.hpp>
#include <owi/rates.hpp>
#include <owi/version.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace owi;

namespace {

std::string sci15(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.15e", v);
    return buf;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

// First line that is not a '#' metadata line: the CSV column header.
std::string csv_header(const std::string& text) {
    for (const auto& line : lines_of(text)) {
        if (!line.empty() && line[0] != '#') return line;
    }
    return {};
}

std::vector<std::string> csv_rows(const std::string& text) {
    std::vector<std::string> rows;
    bool past_header = false;
    for (const auto& line : lines_of(text)) {
        if (!line.empty() && line[0] == '#') continue;
        if (!past_header) {
            past_header = true;
            continue;
        }
        if (!line.empty()) rows.push_back(line);
    }
    return rows;
}

std::vector<std::string> split_csv(const std::string& row) {
    std::vector<std::string> fields;
    std::istringstream in(row);
    std::string field;
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

RunMetadata fixed_meta(const std::string& command,
                       const std::string& scenario = "fig2") {
    RunMetadata meta;
    meta.command = command;
    meta.config = preset(scenario);
    meta.config.output.fixed_clock = true;
    return meta;
}

DensityMatrix ground_mixture() {
    DensityMatrix rho = DensityMatrix::Zero();
    rho(0, 0) = 0.5;
    rho(1, 1) = 0.5;
    return rho;
}

Trajectory two_point_trajectory() {
    Trajectory traj;
    traj.times = {0.0, 1e-9};
    DensityMatrix second = ground_mixture();
    second(2, 2) = 0.125;
    second(0, 0) = 0.375;
    second(0, 2) = {1e-4, -2e-4};
    second(2, 0) = {1e-4, 2e-4};
    traj.states = {ground_mixture(), second};
    traj.converged = true;
    traj.final_residual = 3.5e-8;
    return traj;
}

SpectrumResult small_spectrum() {
    SpectrumResult r;
    r.detunings = {-1.0e9, 0.0, 1.0e9};
    r.gain = {-0.25, 0.125, -0.0625};
    for (double g : r.gain) r.transmission.push_back(std::exp(g));
    return r;
}

} // namespace

TEST_CASE("CSV metadata header records the run and embeds the config") {
    const RunMetadata meta = fixed_meta("steady");
    const std::string text = render_steady(meta, ground_mixture(), 1.25e-13);
    const auto lines = lines_of(text);
    REQUIRE(lines.size() > 10);

    CHECK(lines[0] == std::string("# artifact_version = ") + version);
    CHECK(lines[1] == "# command = steady");
    CHECK(lines[2] == "# scenario = fig2");
    CHECK(lines[3] == "# mode = conserving");
    CHECK(lines[4] == "# timestamp = 1970-01-01T00:00:00Z");
    CHECK(contains(text, "# closed_form_residual = " + sci15(1.25e-13)));

    // The embedded config reproduces serialize_config line for line.
    const std::string serialized = serialize_config(meta.config);
    std::string embedded;
    bool inside = false;
    for (const auto& line : lines) {
        if (line == "# config-begin") {
            inside = true;
            continue;
        }
        if (line == "# config-end") {
            inside = false;
            continue;
        }
        if (inside) {
            CHECK(line.rfind("# ", 0) == 0);
            embedded += line.size() > 2 ? line.substr(2) : "";
            embedded += "\n";
        }
    }
    // serialize_config may contain blank lines; the embedder writes them as
    // bare "# " which round-trips to an empty line here.
    CHECK(embedded == serialized);
    // And that embedded config must itself reparse to the same RunConfig.
    CHECK(parse_config(embedded) == meta.config);
}

TEST_CASE("fixed clock makes renders byte-identical") {
    const RunMetadata meta = fixed_meta("steady");
    const std::string a = render_steady(meta, ground_mixture(), 0.0);
    const std::string b = render_steady(meta, ground_mixture(), 0.0);
    CHECK(a == b);
}

TEST_CASE("steady-state table lists all sixteen components one-based") {
    const RunMetadata meta = fixed_meta("steady");
    DensityMatrix rho = ground_mixture();
    rho(0, 2) = {3.25e-5, -7.5e-6};
    rho(2, 0) = {3.25e-5, 7.5e-6};
    const std::string text = render_steady(meta, rho, 0.0);

    CHECK(csv_header(text) == "i,j,re,im");
    const auto rows = csv_rows(text);
    REQUIRE(rows.size() == 16);

    // Row order is row-major over (i, j); indices print as plain integers.
    const auto first = split_csv(rows[0]);
    REQUIRE(first.size() == 4);
    CHECK(first[0] == "1");
    CHECK(first[1] == "1");
    CHECK(first[2] == sci15(0.5));
    CHECK(first[3] == sci15(0.0));

    // (1,3) sits at row index 2 and carries the probe coherence.
    const auto coherence = split_csv(rows[2]);
    CHECK(coherence[0] == "1");
    CHECK(coherence[1] == "3");
    CHECK(coherence[2] == sci15(3.25e-5));
    CHECK(coherence[3] == sci15(-7.5e-6));

    // The scientific format keeps enough digits to round-trip the double.
    CHECK(std::strtod(coherence[2].c_str(), nullptr) == 3.25e-5);
}

TEST_CASE("trajectory table carries every component plus derived columns") {
    const RunMetadata meta = fixed_meta("evolve");
    const Trajectory traj = two_point_trajectory();
    const std::string text = render_trajectory(meta, traj);

    const auto header = split_csv(csv_header(text));
    REQUIRE(header.size() == 35); // t + 16 re/im pairs + 2 derived
    CHECK(header[0] == "t_s");
    CHECK(header[1] == "re_rho_11");
    CHECK(header[2] == "im_rho_11");
    CHECK(header[11] == "re_rho_22");
    CHECK(header[21] == "re_rho_33");
    CHECK(header[31] == "re_rho_44");
    CHECK(header[33] == "probe_im_rho13");
    CHECK(header[34] == "probe_inversion");

    const auto rows = csv_rows(text);
    REQUIRE(rows.size() == 2);
    const auto r0 = split_csv(rows[0]);
    REQUIRE(r0.size() == 35);
    CHECK(r0[0] == sci15(0.0));
    CHECK(r0[1] == sci15(0.5));

    const auto r1 = split_csv(rows[1]);
    CHECK(r1[0] == sci15(1e-9));
    CHECK(r1[33] == sci15(-2e-4));          // Im rho13 of the second state
    CHECK(r1[34] == sci15(0.125 - 0.375));  // rho33 - rho11

    CHECK(contains(text, "# converged = true"));
    CHECK(contains(text, "# final_residual = " + sci15(3.5e-8)));
}

TEST_CASE("spectrum table merges computation warnings into the header") {
    RunMetadata meta = fixed_meta("spectrum", "fig4_walls");
    meta.warnings = {"from the caller"};
    SpectrumResult result = small_spectrum();
    result.warnings = {"grid point 0: averaging note"};

    const std::string text = render_spectrum(meta, result);
    CHECK(csv_header(text) == "detuning_radps,gain,transmission");
    const auto rows = csv_rows(text);
    REQUIRE(rows.size() == 3);
    const auto r0 = split_csv(rows[0]);
    CHECK(r0[0] == sci15(-1.0e9));
    CHECK(r0[1] == sci15(-0.25));
    CHECK(r0[2] == sci15(std::exp(-0.25)));

    // Caller warnings come first, then the computation's own.
    const std::size_t caller = text.find("# warning = from the caller");
    const std::size_t average = text.find("# warning = grid point 0");
    REQUIRE(caller != std::string::npos);
    REQUIRE(average != std::string::npos);
    CHECK(caller < average);
}

TEST_CASE("rates table reports the derived kinetic chain") {
    const RunMetadata meta = fixed_meta("rates", "rb85_cell");
    const RunConfig& c = meta.config;
    const std::string text = render_rates(meta);

    CHECK(csv_header(text) == "quantity,value,unit");
    const auto rows = csv_rows(text);
    REQUIRE(rows.size() == 5);

    const double w12 = wall_relaxation(*c.cell);
    const auto transfer = collisional_transfer_rates(
        c.buffer->gas, c.buffer->temperature, c.buffer->atom_mass);
    const double u =
        most_probable_speed(c.cell->temperature, c.cell->atom_mass);
    const double mu =
        reduced_mass(c.buffer->atom_mass, c.buffer->gas.molecule_mass);
    const double v_av = mean_relative_speed(c.buffer->temperature, mu);

    CHECK(rows[0] == "w12," + sci15(w12) + ",radps");
    CHECK(rows[1] == "r34," + sci15(transfer.first) + ",radps");
    CHECK(rows[2] == "r43," + sci15(transfer.second) + ",radps");
    CHECK(rows[3] == "u," + sci15(u) + ",mps");
    CHECK(rows[4] == "v_av," + sci15(v_av) + ",mps");
}

TEST_CASE("rates rendering requires the geometry sections") {
    const RunMetadata meta = fixed_meta("rates", "fig2");
    CHECK_THROWS_WITH_AS(render_rates(meta),
                         doctest::Contains("[cell] and [buffer]"),
                         config_error);
}

TEST_CASE("JSON format produces a parseable document") {
    RunMetadata meta = fixed_meta("steady");
    meta.config.output.format = OutputFormat::Json;
    meta.warnings = {"w1", "w2"};
    const std::string text = render_steady(meta, ground_mixture(), 4.5e-11);

    const nlohmann::json doc = nlohmann::json::parse(text);
    CHECK(doc["metadata"]["command"] == "steady");
    CHECK(doc["metadata"]["scenario"] == "fig2");
    CHECK(doc["metadata"]["mode"] == "conserving");
    CHECK(doc["metadata"]["timestamp"] == "1970-01-01T00:00:00Z");
    CHECK(doc["metadata"]["warnings"].size() == 2);
    CHECK(doc["metadata"]["warnings"][1] == "w2");
    CHECK(doc["metadata"]["closed_form_residual"].get<double>() == 4.5e-11);

    // The embedded config string reparses to the exact configuration.
    const RunConfig embedded =
        parse_config(doc["metadata"]["config"].get<std::string>());
    CHECK(embedded == meta.config);

    REQUIRE(doc["columns"].size() == 4);
    CHECK(doc["columns"][2] == "re");
    REQUIRE(doc["rows"].size() == 16);
    CHECK(doc["rows"][0][0].get<int>() == 1);
    CHECK(doc["rows"][0][2].get<double>() == 0.5);
}

TEST_CASE("JSON trajectory rows mirror the CSV layout") {
    RunMetadata meta = fixed_meta("evolve");
    meta.config.output.format = OutputFormat::Json;
    const Trajectory traj = two_point_trajectory();
    const nlohmann::json doc =
        nlohmann::json::parse(render_trajectory(meta, traj));
    CHECK(doc["metadata"]["converged"] == "true");
    CHECK(doc["metadata"]["final_residual"].get<double>() == 3.5e-8);
    REQUIRE(doc["columns"].size() == 35);
    REQUIRE(doc["rows"].size() == 2);
    CHECK(doc["rows"][1][0].get<double>() == 1e-9);
    CHECK(doc["rows"][1][33].get<double>() == -2e-4);
}

TEST_CASE("plot scripts are a pure function of path and kind") {
    const std::string a = plot_script_text("out.csv", "trajectory");
    const std::string b = plot_script_text("out.csv", "trajectory");
    CHECK(a == b);
    CHECK(contains(a, "result = 'out.csv'"));
    CHECK(contains(a, "using 1:2"));   // rho11 column
    CHECK(contains(a, "using 1:34"));  // probe coherence column
    CHECK(contains(a, "multiplot"));

    const std::string s = plot_script_text("spec.csv", "spectrum");
    CHECK(contains(s, "using 1:3"));  // transmission column
    CHECK(contains(s, "title 'unity'"));
    CHECK(a != s);

    CHECK_THROWS_WITH_AS(plot_script_text("out.csv", "rates"),
                         doctest::Contains("unknown plot kind"),
                         config_error);
}

TEST_CASE("emit_plot_script validates the result file before writing") {
    const RunMetadata meta = fixed_meta("spectrum", "fig4_walls");
    const std::string body = render_spectrum(meta, small_spectrum());
    const std::string path = "owi_test_output_spectrum.csv";
    {
        std::ofstream out(path, std::ios::binary);
        REQUIRE(out.good());
        out << body;
    }

    SUBCASE("writes the script next to the result") {
        const std::string script_path = emit_plot_script(path, "spectrum");
        CHECK(script_path == path + ".gp");
        std::ifstream in(script_path, std::ios::binary);
        REQUIRE(in.good());
        std::ostringstream buf;
        buf << in.rdbuf();
        CHECK(buf.str() == plot_script_text(path, "spectrum"));
        std::remove(script_path.c_str());
    }
    SUBCASE("rejects a kind that does not match the file") {
        CHECK_THROWS_WITH_AS(emit_plot_script(path, "trajectory"),
                             doctest::Contains("does not look like"),
                             config_error);
    }
    SUBCASE("rejects a missing result file") {
        CHECK_THROWS_WITH_AS(
            emit_plot_script("no_such_result_file.csv", "spectrum"),
            doctest::Contains("does not exist"), config_error);
    }
    std::remove(path.c_str());
}
