#include "owi/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "owi/constants.hpp"
#include "owi/errors.hpp"

namespace owi {

namespace {

// ---------------------------------------------------------------------------
// Schema

enum class Dim {
    Rate,        // rad/s
    Length,      // m
    Area,        // m^2
    Temperature, // K
    Density,     // m^-3
    Velocity,    // m/s
    Time,        // s
    Mass,        // kg
    Pressure,    // Pa
    Integer,     // bare integer, no unit
    Real,        // bare real, no unit
    Token,       // one word from a fixed set
    Text,        // free text (paths)
};

struct KeySpec {
    const char* key;
    Dim dim;
};

struct SectionSpec {
    const char* name; // "" = top level
    std::vector<KeySpec> keys;
};

const std::vector<SectionSpec>& schema() {
    static const std::vector<SectionSpec> s = {
        {"",
         {{"scenario", Dim::Token}, {"mode", Dim::Token}}},
        {"system",
         {{"omega_pr", Dim::Rate},
          {"omega_pu", Dim::Rate},
          {"delta_pr", Dim::Rate},
          {"delta_pu", Dim::Rate},
          {"delta_hfs", Dim::Rate},
          {"gamma3", Dim::Rate},
          {"gamma4", Dim::Rate},
          {"w12", Dim::Rate},
          {"r34", Dim::Rate},
          {"r43", Dim::Rate},
          {"gamma_laser", Dim::Rate},
          {"lambda_pr", Dim::Length},
          {"lambda_pu", Dim::Length},
          {"u", Dim::Velocity}}},
        {"cell",
         {{"length", Dim::Length},
          {"width", Dim::Length},
          {"thickness", Dim::Length},
          {"temperature", Dim::Temperature},
          {"atom", Dim::Token},
          {"atom_mass", Dim::Mass},
          {"angular_factor", Dim::Token}}},
        {"buffer",
         {{"pressure", Dim::Pressure},
          {"number_density", Dim::Density},
          {"sigma1", Dim::Area},
          {"sigma2", Dim::Area},
          {"sigma_table", Dim::Token},
          {"molecule", Dim::Token},
          {"molecule_mass", Dim::Mass},
          {"atom", Dim::Token},
          {"atom_mass", Dim::Mass},
          {"temperature", Dim::Temperature}}},
        {"spectrum",
         {{"grid_min", Dim::Rate},
          {"grid_max", Dim::Rate},
          {"grid_points", Dim::Integer},
          {"quadrature_nodes", Dim::Integer},
          {"number_density", Dim::Density},
          {"path_length", Dim::Length}}},
        {"evolve",
         {{"t_end", Dim::Time},
          {"rel_tol", Dim::Real},
          {"abs_tol", Dim::Real},
          {"max_step", Dim::Time},
          {"store_every", Dim::Integer}}},
        {"output",
         {{"path", Dim::Text},
          {"format", Dim::Token},
          {"plot_script", Dim::Token},
          {"fixed_clock", Dim::Token}}},
    };
    return s;
}

const SectionSpec* find_section(const std::string& name) {
    for (const auto& s : schema()) {
        if (name == s.name) {
            return &s;
        }
    }
    return nullptr;
}

const KeySpec* find_key(const SectionSpec& section, const std::string& key) {
    for (const auto& k : section.keys) {
        if (key == k.key) {
            return &k;
        }
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Unit tables

struct UnitDef {
    const char* suffix;
    double factor;
    double offset = 0.0; // value_si = raw * factor + offset (degC)
    bool times_gamma3 = false;
    bool over_gamma3 = false;
};

struct DimInfo {
    const char* description;
    std::vector<UnitDef> units;
};

const DimInfo& dim_info(Dim dim) {
    static const std::map<Dim, DimInfo> infos = {
        {Dim::Rate,
         {"frequency/rate",
          {{"radps", 1.0},
           {"Hz_x2pi", constants::two_pi},
           {"kHz_x2pi", constants::two_pi * 1e3},
           {"MHz_x2pi", constants::two_pi * 1e6},
           {"GHz_x2pi", constants::two_pi * 1e9},
           {"x_gamma3", 1.0, 0.0, true, false}}}},
        {Dim::Length,
         {"length",
          {{"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}}}},
        {Dim::Area, {"area", {{"m2", 1.0}, {"cm2", 1e-4}}}},
        {Dim::Temperature, {"temperature", {{"K", 1.0}, {"degC", 1.0, 273.15}}}},
        {Dim::Density, {"number density", {{"m-3", 1.0}, {"cm-3", 1e6}}}},
        {Dim::Velocity, {"velocity", {{"mps", 1.0}}}},
        {Dim::Time,
         {"time",
          {{"s", 1.0},
           {"ms", 1e-3},
           {"us", 1e-6},
           {"ns", 1e-9},
           {"inv_gamma3", 1.0, 0.0, false, true}}}},
        {Dim::Mass, {"mass", {{"kg", 1.0}, {"amu", constants::atomic_mass_unit}}}},
        {Dim::Pressure,
         {"pressure", {{"Pa", 1.0}, {"Torr", constants::pascal_per_torr}}}},
    };
    return infos.at(dim);
}

std::string allowed_suffixes(Dim dim) {
    const DimInfo& info = dim_info(dim);
    std::string out;
    for (const auto& u : info.units) {
        if (!out.empty()) {
            out += ", ";
        }
        out += u.suffix;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Low-level text handling

[[noreturn]] void fail(int line, const std::string& message) {
    throw config_error("config line " + std::to_string(line) + ": " + message);
}

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return s.substr(a, b - a);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) {
        out.push_back(tok);
    }
    return out;
}

double parse_double(const std::string& token, int line, const std::string& key) {
    const char* begin = token.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end != begin + token.size() || token.empty()) {
        fail(line, "'" + key + "': '" + token + "' is not a number");
    }
    if (errno == ERANGE || !std::isfinite(v)) {
        fail(line, "'" + key + "': value '" + token + "' is out of range");
    }
    return v;
}

long parse_integer(const std::string& token, int line, const std::string& key) {
    const char* begin = token.c_str();
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(begin, &end, 10);
    if (end != begin + token.size() || token.empty()) {
        fail(line, "'" + key + "': '" + token + "' is not an integer");
    }
    if (errno == ERANGE) {
        fail(line, "'" + key + "': integer '" + token + "' is out of range");
    }
    return v;
}

struct RawEntry {
    int line = 0;
    std::string value;
};

// A dimensioned value after unit application; the gamma3-relative suffixes
// stay symbolic until gamma3 itself is known.
struct Quantity {
    double value = 0.0;
    bool times_gamma3 = false;
    bool over_gamma3 = false;
};

Quantity parse_quantity(Dim dim, const RawEntry& e, const std::string& key) {
    const std::vector<std::string> tokens = split_ws(e.value);
    const DimInfo& info = dim_info(dim);
    if (tokens.size() != 2) {
        fail(e.line, "'" + key + "' expects '<number> <unit>' with a " +
                         info.description + " unit (one of: " +
                         allowed_suffixes(dim) + "); got '" + e.value + "'");
    }
    const double raw = parse_double(tokens[0], e.line, key);
    for (const auto& u : info.units) {
        if (tokens[1] == u.suffix) {
            Quantity q;
            q.value = raw * u.factor + u.offset;
            q.times_gamma3 = u.times_gamma3;
            q.over_gamma3 = u.over_gamma3;
            return q;
        }
    }
    fail(e.line, "'" + key + "': unit '" + tokens[1] + "' is not a " +
                     info.description + " unit; expected one of: " +
                     allowed_suffixes(dim));
}

std::string parse_token(const RawEntry& e, const std::string& key,
                        const std::vector<std::string>& allowed) {
    const std::string v = trim(e.value);
    if (std::find(allowed.begin(), allowed.end(), v) != allowed.end()) {
        return v;
    }
    std::string list;
    for (const auto& a : allowed) {
        if (!list.empty()) {
            list += ", ";
        }
        list += a;
    }
    fail(e.line, "'" + key + "': '" + v + "' is not one of: " + list);
}

bool parse_on_off(const RawEntry& e, const std::string& key) {
    return parse_token(e, key, {"on", "off"}) == "on";
}

// ---------------------------------------------------------------------------
// Serialization helpers

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// Presets

std::vector<std::string> preset_names() {
    return {"fig2", "fig3", "fig4_walls", "fig4_nowalls", "rb85_cell"};
}

namespace {

// The shared field set of all bundled scenarios: weak probe, strong pump,
// both resonant, D1 probe / D2 pump wavelengths, directional excited-state
// transfer with the measured 1.39 cross-section ratio.
RunConfig base_scenario() {
    RunConfig c;
    const double g3 = constants::d1_decay_rate;
    c.sys.gamma3 = g3;
    c.sys.omega_pr = 0.05 * g3;
    c.sys.omega_pu = 60.0 * g3;
    c.sys.w12 = 0.5 * g3;
    c.sys.r34 = 2.0 * g3;
    c.sys.r43 = 2.78 * g3;
    c.evolve.t_end = 1000.0 / g3;
    return c;
}

SpectrumSection standard_spectrum_section(double number_density) {
    SpectrumSection sp;
    sp.grid_min = -constants::two_pi * 2e9;
    sp.grid_max = constants::two_pi * 2e9;
    sp.grid_points = 201;
    sp.quadrature_nodes = 64;
    sp.number_density = number_density;
    sp.path_length = 30e-6;
    return sp;
}

} // namespace

RunConfig preset(const std::string& name) {
    if (name == "fig2") {
        RunConfig c = base_scenario();
        c.scenario = name;
        return c;
    }
    if (name == "fig3") {
        RunConfig c = base_scenario();
        c.scenario = name;
        c.sys.w12 = 0.0;
        return c;
    }
    if (name == "fig4_walls" || name == "fig4_nowalls") {
        RunConfig c = base_scenario();
        c.scenario = name;
        if (name == "fig4_nowalls") {
            c.sys.w12 = 0.0;
        }
        c.sys.u = most_probable_speed(473.0, constants::rb85_mass);
        c.spectrum = standard_spectrum_section(1e20);
        return c;
    }
    if (name == "rb85_cell") {
        RunConfig c = base_scenario();
        c.scenario = name;

        CellSpec cell;
        cell.length = 2e-3;
        cell.width = 2e-3;
        cell.thickness = 30e-6;
        cell.temperature = 523.15; // 250 degC vapor cell
        cell.atom_mass = constants::rb85_mass;
        cell.angular_factor = true;
        c.cell = cell;

        BufferSection buffer;
        buffer.temperature = cell.temperature;
        buffer.atom_mass = cell.atom_mass;
        buffer.gas.number_density = pressure_to_density(
            8.0 * constants::pascal_per_torr, buffer.temperature);
        const CrossSectionRow row = h2_cross_sections_330K();
        buffer.gas.sigma1 = row.sigma1;
        buffer.gas.sigma2 = row.sigma2;
        buffer.gas.molecule_mass = constants::h2_mass;
        c.buffer = buffer;

        c.sys.w12 = wall_relaxation(cell);
        const auto rates = collisional_transfer_rates(
            buffer.gas, buffer.temperature, buffer.atom_mass);
        c.sys.r34 = rates.first;
        c.sys.r43 = rates.second;
        c.sys.u = most_probable_speed(cell.temperature, cell.atom_mass);
        c.spectrum = standard_spectrum_section(3.05e20);
        return c;
    }
    std::string list;
    for (const auto& n : preset_names()) {
        list += list.empty() ? n : ", " + n;
    }
    throw config_error("unknown scenario '" + name + "'; available: " + list +
                       ", custom");
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

struct Document {
    // key path ("scenario", "system.omega_pr", ...) -> raw value
    std::map<std::string, RawEntry> entries;
    std::set<std::string> sections_seen;
};

Document tokenize(const std::string& text) {
    Document doc;
    std::istringstream stream(text);
    std::string raw_line;
    int lineno = 0;
    const SectionSpec* section = find_section("");

    while (std::getline(stream, raw_line)) {
        ++lineno;
        std::string line = raw_line;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }

        if (line.front() == '[') {
            if (line.back() != ']') {
                fail(lineno, "malformed section header '" + line + "'");
            }
            const std::string name = trim(line.substr(1, line.size() - 2));
            const SectionSpec* next = find_section(name);
            if (next == nullptr || name.empty()) {
                fail(lineno, "unknown section [" + name + "]");
            }
            section = next;
            doc.sections_seen.insert(name);
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            fail(lineno, "expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            fail(lineno, "missing key before '='");
        }
        if (value.empty()) {
            fail(lineno, "empty value for '" + key + "'");
        }

        if (find_key(*section, key) == nullptr) {
            if (section->name[0] == '\0') {
                fail(lineno, "unknown top-level key '" + key +
                                 "' (only scenario and mode may appear before "
                                 "a section header)");
            }
            fail(lineno, "unknown key '" + key + "' in [" +
                             std::string(section->name) + "]");
        }

        std::string path = section->name;
        if (!path.empty()) {
            path += '.';
        }
        path += key;
        const auto [it, inserted] = doc.entries.insert({path, {lineno, value}});
        if (!inserted) {
            fail(lineno, "duplicate key '" + key + "' (first given on line " +
                             std::to_string(it->second.line) + ")");
        }
    }
    return doc;
}

class Resolver {
  public:
    explicit Resolver(const Document& doc) : doc_(doc) {}

    RunConfig resolve() {
        resolve_scenario_and_mode();
        resolve_gamma3();
        resolve_system();
        resolve_cell();
        resolve_buffer();
        resolve_spectrum();
        resolve_evolve();
        resolve_output();
        check_required();
        validate(config_.sys);
        validate_extras();
        return config_;
    }

  private:
    const RawEntry* find(const std::string& path) const {
        const auto it = doc_.entries.find(path);
        return it == doc_.entries.end() ? nullptr : &it->second;
    }

    bool section_present(const std::string& name) const {
        if (doc_.sections_seen.count(name) > 0) {
            return true;
        }
        const std::string prefix = name + ".";
        const auto it = doc_.entries.lower_bound(prefix);
        return it != doc_.entries.end() && it->first.rfind(prefix, 0) == 0;
    }

    double resolve_rate_quantity(const Quantity& q, const RawEntry& e,
                                 const std::string& key) const {
        if (q.times_gamma3) {
            if (!(gamma3_ > 0.0)) {
                fail(e.line, "'" + key + "' uses x_gamma3 but gamma3 is not set");
            }
            return q.value * gamma3_;
        }
        return q.value;
    }

    double resolve_time_quantity(const Quantity& q, const RawEntry& e,
                                 const std::string& key) const {
        if (q.over_gamma3) {
            if (!(gamma3_ > 0.0)) {
                fail(e.line, "'" + key + "' uses inv_gamma3 but gamma3 is not set");
            }
            return q.value / gamma3_;
        }
        return q.value;
    }

    std::optional<double> get(Dim dim, const std::string& path) {
        const RawEntry* e = find(path);
        if (e == nullptr) {
            return std::nullopt;
        }
        const std::string key = path.substr(path.find('.') + 1);
        const Quantity q = parse_quantity(dim, *e, key);
        if (dim == Dim::Rate) {
            return resolve_rate_quantity(q, *e, key);
        }
        if (dim == Dim::Time) {
            return resolve_time_quantity(q, *e, key);
        }
        return q.value;
    }

    std::optional<long> get_integer(const std::string& path) {
        const RawEntry* e = find(path);
        if (e == nullptr) {
            return std::nullopt;
        }
        const std::string key = path.substr(path.find('.') + 1);
        const auto tokens = split_ws(e->value);
        if (tokens.size() != 1) {
            fail(e->line, "'" + key + "' expects a bare integer (no unit)");
        }
        return parse_integer(tokens[0], e->line, key);
    }

    std::optional<double> get_real(const std::string& path) {
        const RawEntry* e = find(path);
        if (e == nullptr) {
            return std::nullopt;
        }
        const std::string key = path.substr(path.find('.') + 1);
        const auto tokens = split_ws(e->value);
        if (tokens.size() != 1) {
            fail(e->line, "'" + key + "' expects a bare number (no unit)");
        }
        return parse_double(tokens[0], e->line, key);
    }

    void resolve_scenario_and_mode() {
        std::string scenario = "custom";
        if (const RawEntry* e = find("scenario")) {
            scenario = trim(e->value);
            if (scenario != "custom") {
                try {
                    config_ = preset(scenario);
                } catch (const config_error&) {
                    std::string list;
                    for (const auto& n : preset_names()) {
                        list += list.empty() ? n : ", " + n;
                    }
                    fail(e->line, "unknown scenario '" + scenario +
                                      "'; available: " + list + ", custom");
                }
            }
        }
        config_.scenario = scenario;

        if (const RawEntry* e = find("mode")) {
            const std::string m = parse_token(*e, "mode", {"literal", "conserving"});
            config_.mode = m == "literal" ? EquationMode::Literal
                                          : EquationMode::TraceConserving;
        }
    }

    void resolve_gamma3() {
        gamma3_ = config_.sys.gamma3;
        if (const RawEntry* e = find("system.gamma3")) {
            const Quantity q = parse_quantity(Dim::Rate, *e, "gamma3");
            if (q.times_gamma3) {
                fail(e->line, "gamma3 cannot be given in units of itself");
            }
            gamma3_ = q.value;
            config_.sys.gamma3 = q.value;
        }
    }

    void resolve_system() {
        SystemParams& s = config_.sys;
        struct Field {
            const char* key;
            Dim dim;
            double SystemParams::* member;
        };
        static const Field fields[] = {
            {"omega_pr", Dim::Rate, &SystemParams::omega_pr},
            {"omega_pu", Dim::Rate, &SystemParams::omega_pu},
            {"delta_pr", Dim::Rate, &SystemParams::delta_pr},
            {"delta_pu", Dim::Rate, &SystemParams::delta_pu},
            {"delta_hfs", Dim::Rate, &SystemParams::delta_hfs},
            {"w12", Dim::Rate, &SystemParams::w12},
            {"r34", Dim::Rate, &SystemParams::r34},
            {"r43", Dim::Rate, &SystemParams::r43},
            {"gamma_laser", Dim::Rate, &SystemParams::gamma_laser},
            {"lambda_pr", Dim::Length, &SystemParams::lambda_pr},
            {"lambda_pu", Dim::Length, &SystemParams::lambda_pu},
            {"u", Dim::Velocity, &SystemParams::u},
        };
        for (const auto& f : fields) {
            if (const auto v = get(f.dim, std::string("system.") + f.key)) {
                s.*(f.member) = *v;
            }
        }
        if (const auto v = get(Dim::Rate, "system.gamma4")) {
            s.gamma4 = *v;
        }
        w12_explicit_ = find("system.w12") != nullptr;
        r34_explicit_ = find("system.r34") != nullptr;
        r43_explicit_ = find("system.r43") != nullptr;
    }

    void resolve_cell() {
        const bool doc_cell = section_present("cell");
        if (doc_cell && w12_explicit_) {
            fail(find("system.w12")->line,
                 "w12 and [cell] are mutually exclusive sources for the "
                 "ground-state relaxation rate");
        }
        const bool active =
            doc_cell || (config_.cell.has_value() && !w12_explicit_);
        if (!active) {
            config_.cell.reset();
            return;
        }

        std::optional<double> length;
        std::optional<double> width;
        std::optional<double> thickness;
        std::optional<double> temperature;
        std::optional<double> atom_mass;
        bool angular = true;
        if (config_.cell) {
            length = config_.cell->length;
            width = config_.cell->width;
            thickness = config_.cell->thickness;
            temperature = config_.cell->temperature;
            atom_mass = config_.cell->atom_mass;
            angular = config_.cell->angular_factor;
        }

        if (const auto v = get(Dim::Length, "cell.length")) length = *v;
        if (const auto v = get(Dim::Length, "cell.width")) width = *v;
        if (const auto v = get(Dim::Length, "cell.thickness")) thickness = *v;
        if (const auto v = get(Dim::Temperature, "cell.temperature")) temperature = *v;

        const RawEntry* atom = find("cell.atom");
        const RawEntry* mass = find("cell.atom_mass");
        if (atom != nullptr && mass != nullptr) {
            fail(std::max(atom->line, mass->line),
                 "atom and atom_mass are mutually exclusive");
        }
        if (atom != nullptr) {
            const std::string a = parse_token(*atom, "atom", {"rb85", "rb87"});
            atom_mass = a == "rb85" ? constants::rb85_mass : constants::rb87_mass;
        }
        if (mass != nullptr) {
            atom_mass = *get(Dim::Mass, "cell.atom_mass");
        }
        if (const RawEntry* e = find("cell.angular_factor")) {
            angular = parse_on_off(*e, "angular_factor");
        }

        std::string missing;
        auto need = [&missing](const char* name, bool ok) {
            if (!ok) {
                missing += missing.empty() ? name : std::string(", ") + name;
            }
        };
        need("cell.length", length.has_value());
        need("cell.width", width.has_value());
        need("cell.thickness", thickness.has_value());
        need("cell.temperature", temperature.has_value());
        need("cell.atom (or cell.atom_mass)", atom_mass.has_value());
        if (!missing.empty()) {
            throw config_error("incomplete [cell] section; missing: " + missing);
        }

        CellSpec cell;
        cell.length = *length;
        cell.width = *width;
        cell.thickness = *thickness;
        cell.temperature = *temperature;
        cell.atom_mass = *atom_mass;
        cell.angular_factor = angular;
        config_.cell = cell;
        config_.sys.w12 = wall_relaxation(cell);
    }

    void resolve_buffer() {
        const bool doc_buffer = section_present("buffer");
        const bool r_explicit = r34_explicit_ || r43_explicit_;
        if (doc_buffer && r_explicit) {
            const RawEntry* e =
                r34_explicit_ ? find("system.r34") : find("system.r43");
            fail(e->line,
                 "r34/r43 and [buffer] are mutually exclusive sources for the "
                 "collisional transfer rates");
        }
        if (config_.buffer && r_explicit && !(r34_explicit_ && r43_explicit_)) {
            const RawEntry* e =
                r34_explicit_ ? find("system.r34") : find("system.r43");
            fail(e->line,
                 "replacing the buffer-derived transfer rates requires both "
                 "r34 and r43");
        }
        const bool active =
            doc_buffer || (config_.buffer.has_value() && !r_explicit);
        if (!active) {
            config_.buffer.reset();
            return;
        }

        std::optional<double> density;
        std::optional<double> sigma1;
        std::optional<double> sigma2;
        std::optional<double> molecule_mass;
        std::optional<double> atom_mass;
        std::optional<double> temperature;
        if (config_.buffer) {
            density = config_.buffer->gas.number_density;
            sigma1 = config_.buffer->gas.sigma1;
            sigma2 = config_.buffer->gas.sigma2;
            molecule_mass = config_.buffer->gas.molecule_mass;
            atom_mass = config_.buffer->atom_mass;
            temperature = config_.buffer->temperature;
        }

        const RawEntry* pressure = find("buffer.pressure");
        const RawEntry* density_e = find("buffer.number_density");
        if (pressure != nullptr && density_e != nullptr) {
            fail(std::max(pressure->line, density_e->line),
                 "pressure and number_density are mutually exclusive");
        }
        const RawEntry* table = find("buffer.sigma_table");
        const RawEntry* s1 = find("buffer.sigma1");
        const RawEntry* s2 = find("buffer.sigma2");
        if (table != nullptr && (s1 != nullptr || s2 != nullptr)) {
            fail(table->line, "sigma_table and sigma1/sigma2 are mutually exclusive");
        }
        const RawEntry* molecule = find("buffer.molecule");
        const RawEntry* mol_mass = find("buffer.molecule_mass");
        if (molecule != nullptr && mol_mass != nullptr) {
            fail(std::max(molecule->line, mol_mass->line),
                 "molecule and molecule_mass are mutually exclusive");
        }
        const RawEntry* atom = find("buffer.atom");
        const RawEntry* a_mass = find("buffer.atom_mass");
        if (atom != nullptr && a_mass != nullptr) {
            fail(std::max(atom->line, a_mass->line),
                 "atom and atom_mass are mutually exclusive");
        }

        if (const auto v = get(Dim::Temperature, "buffer.temperature")) {
            temperature = *v;
        } else if (!temperature && config_.cell) {
            temperature = config_.cell->temperature;
        }
        if (!temperature) {
            throw config_error(
                "[buffer] needs a temperature (directly or via [cell])");
        }

        if (table != nullptr) {
            const std::string t = parse_token(
                *table, "sigma_table", {"h2_330K", "h2_340K", "h2_1720K"});
            const CrossSectionRow row = t == "h2_330K"   ? h2_cross_sections_330K()
                                        : t == "h2_340K" ? h2_cross_sections_340K()
                                                         : h2_cross_sections_1720K();
            sigma1 = row.sigma1;
            sigma2 = row.sigma2;
        }
        if (const auto v = get(Dim::Area, "buffer.sigma1")) sigma1 = *v;
        if (const auto v = get(Dim::Area, "buffer.sigma2")) sigma2 = *v;

        if (molecule != nullptr) {
            parse_token(*molecule, "molecule", {"h2"});
            molecule_mass = constants::h2_mass;
        }
        if (const auto v = get(Dim::Mass, "buffer.molecule_mass")) {
            molecule_mass = *v;
        }

        if (atom != nullptr) {
            const std::string a = parse_token(*atom, "atom", {"rb85", "rb87"});
            atom_mass = a == "rb85" ? constants::rb85_mass : constants::rb87_mass;
        }
        if (const auto v = get(Dim::Mass, "buffer.atom_mass")) {
            atom_mass = *v;
        }
        if (!atom_mass && config_.cell) {
            atom_mass = config_.cell->atom_mass;
        }

        if (const auto v = get(Dim::Density, "buffer.number_density")) {
            density = *v;
        }
        if (pressure != nullptr) {
            const auto p = get(Dim::Pressure, "buffer.pressure");
            density = pressure_to_density(*p, *temperature);
        }

        std::string missing;
        auto need = [&missing](const char* name, bool ok) {
            if (!ok) {
                missing += missing.empty() ? name : std::string(", ") + name;
            }
        };
        need("buffer.pressure (or buffer.number_density)", density.has_value());
        need("buffer.sigma1 (or buffer.sigma_table)", sigma1.has_value());
        need("buffer.sigma2 (or buffer.sigma_table)", sigma2.has_value());
        need("buffer.molecule (or buffer.molecule_mass)", molecule_mass.has_value());
        need("buffer.atom (or buffer.atom_mass, or a [cell])", atom_mass.has_value());
        if (!missing.empty()) {
            throw config_error("incomplete [buffer] section; missing: " + missing);
        }

        BufferSection buffer;
        buffer.gas.number_density = *density;
        buffer.gas.sigma1 = *sigma1;
        buffer.gas.sigma2 = *sigma2;
        buffer.gas.molecule_mass = *molecule_mass;
        buffer.atom_mass = *atom_mass;
        buffer.temperature = *temperature;
        config_.buffer = buffer;

        const auto rates = collisional_transfer_rates(
            buffer.gas, buffer.temperature, buffer.atom_mass);
        config_.sys.r34 = rates.first;
        config_.sys.r43 = rates.second;
    }

    void resolve_spectrum() {
        const bool doc_spectrum = section_present("spectrum");
        if (!doc_spectrum && !config_.spectrum) {
            return;
        }
        SpectrumSection sp = config_.spectrum.value_or(SpectrumSection{});
        const bool fresh = !config_.spectrum.has_value();

        bool has_min = !fresh;
        bool has_max = !fresh;
        bool has_points = !fresh;
        bool has_density = !fresh;
        bool has_length = !fresh;

        if (const auto v = get(Dim::Rate, "spectrum.grid_min")) {
            sp.grid_min = *v;
            has_min = true;
        }
        if (const auto v = get(Dim::Rate, "spectrum.grid_max")) {
            sp.grid_max = *v;
            has_max = true;
        }
        if (const auto v = get_integer("spectrum.grid_points")) {
            sp.grid_points = static_cast<int>(*v);
            has_points = true;
        }
        if (const auto v = get_integer("spectrum.quadrature_nodes")) {
            sp.quadrature_nodes = static_cast<int>(*v);
        }
        if (const auto v = get(Dim::Density, "spectrum.number_density")) {
            sp.number_density = *v;
            has_density = true;
        }
        if (const auto v = get(Dim::Length, "spectrum.path_length")) {
            sp.path_length = *v;
            has_length = true;
        }

        std::string missing;
        auto need = [&missing](const char* name, bool ok) {
            if (!ok) {
                missing += missing.empty() ? name : std::string(", ") + name;
            }
        };
        need("spectrum.grid_min", has_min);
        need("spectrum.grid_max", has_max);
        need("spectrum.grid_points", has_points);
        need("spectrum.number_density", has_density);
        need("spectrum.path_length", has_length);
        if (!missing.empty()) {
            throw config_error("incomplete [spectrum] section; missing: " + missing);
        }
        config_.spectrum = sp;
    }

    void resolve_evolve() {
        EvolveSection& ev = config_.evolve;
        if (const auto v = get(Dim::Time, "evolve.t_end")) ev.t_end = *v;
        if (const auto v = get_real("evolve.rel_tol")) ev.rel_tol = *v;
        if (const auto v = get_real("evolve.abs_tol")) ev.abs_tol = *v;
        if (const auto v = get(Dim::Time, "evolve.max_step")) ev.max_step = *v;
        if (const auto v = get_integer("evolve.store_every")) {
            ev.store_every = static_cast<int>(*v);
        }
        if (ev.t_end == 0.0 && gamma3_ > 0.0) {
            ev.t_end = 1000.0 / gamma3_;
        }
    }

    void resolve_output() {
        OutputSection& out = config_.output;
        if (const RawEntry* e = find("output.path")) {
            out.path = trim(e->value);
        }
        if (const RawEntry* e = find("output.format")) {
            out.format = parse_token(*e, "format", {"csv", "json"}) == "csv"
                             ? OutputFormat::Csv
                             : OutputFormat::Json;
        }
        if (const RawEntry* e = find("output.plot_script")) {
            out.emit_plot_script = parse_on_off(*e, "plot_script");
        }
        if (const RawEntry* e = find("output.fixed_clock")) {
            out.fixed_clock = parse_on_off(*e, "fixed_clock");
        }
    }

    void check_required() {
        if (config_.scenario != "custom") {
            return;
        }
        std::string missing;
        auto need = [&missing](const std::string& name, bool ok) {
            if (!ok) {
                missing += missing.empty() ? name : ", " + name;
            }
        };
        need("system.gamma3", find("system.gamma3") != nullptr);
        need("system.omega_pr", find("system.omega_pr") != nullptr);
        need("system.omega_pu", find("system.omega_pu") != nullptr);
        need("system.w12 (or a [cell] section)",
             w12_explicit_ || config_.cell.has_value());
        need("system.r34 and system.r43 (or a [buffer] section)",
             (r34_explicit_ && r43_explicit_) || config_.buffer.has_value());
        if (!missing.empty()) {
            throw config_error("missing required keys: " + missing);
        }
    }

    void validate_extras() const {
        if (config_.spectrum) {
            const SpectrumSection& sp = *config_.spectrum;
            if (sp.grid_points < 2) {
                throw config_error("spectrum.grid_points must be at least 2");
            }
            if (!(sp.grid_max > sp.grid_min)) {
                throw config_error("spectrum.grid_max must exceed grid_min");
            }
            if (sp.quadrature_nodes < 8) {
                throw config_error("spectrum.quadrature_nodes must be at least 8");
            }
            if (sp.number_density < 0.0 || sp.path_length < 0.0) {
                throw config_error(
                    "spectrum.number_density and path_length must be >= 0");
            }
        }
        const EvolveSection& ev = config_.evolve;
        if (!(ev.t_end > 0.0) || !std::isfinite(ev.t_end)) {
            throw config_error("evolve.t_end must be positive");
        }
        if (!(ev.rel_tol > 0.0) || !(ev.abs_tol > 0.0)) {
            throw config_error("evolve tolerances must be positive");
        }
        if (ev.max_step < 0.0) {
            throw config_error("evolve.max_step must be >= 0");
        }
        if (ev.store_every < 1) {
            throw config_error("evolve.store_every must be at least 1");
        }
        if (config_.buffer) {
            const BufferSection& b = *config_.buffer;
            if (!(b.temperature > 0.0) || !(b.atom_mass > 0.0) ||
                !(b.gas.molecule_mass > 0.0) || b.gas.number_density < 0.0 ||
                b.gas.sigma1 < 0.0 || b.gas.sigma2 < 0.0) {
                throw config_error("[buffer] values out of range");
            }
        }
        if (config_.cell) {
            const CellSpec& c = *config_.cell;
            if (!(c.length > 0.0) || !(c.width > 0.0) || !(c.thickness > 0.0) ||
                !(c.temperature > 0.0) || !(c.atom_mass > 0.0)) {
                throw config_error("[cell] dimensions, temperature and atom "
                                   "mass must be positive");
            }
        }
    }

    const Document& doc_;
    RunConfig config_;
    double gamma3_ = 0.0;
    bool w12_explicit_ = false;
    bool r34_explicit_ = false;
    bool r43_explicit_ = false;
};

} // namespace

RunConfig parse_config(const std::string& text) {
    const Document doc = tokenize(text);
    Resolver resolver(doc);
    return resolver.resolve();
}

// ---------------------------------------------------------------------------
// Serialization

std::string serialize_config(const RunConfig& config) {
    std::ostringstream out;
    auto q = [](double v, const char* unit) {
        return format_number(v) + " " + unit;
    };

    out << "scenario = " << config.scenario << "\n";
    out << "mode = "
        << (config.mode == EquationMode::Literal ? "literal" : "conserving")
        << "\n\n";

    const SystemParams& s = config.sys;
    out << "[system]\n";
    out << "gamma3 = " << q(s.gamma3, "radps") << "\n";
    out << "omega_pr = " << q(s.omega_pr, "radps") << "\n";
    out << "omega_pu = " << q(s.omega_pu, "radps") << "\n";
    out << "delta_pr = " << q(s.delta_pr, "radps") << "\n";
    out << "delta_pu = " << q(s.delta_pu, "radps") << "\n";
    out << "delta_hfs = " << q(s.delta_hfs, "radps") << "\n";
    if (s.gamma4) {
        out << "gamma4 = " << q(*s.gamma4, "radps") << "\n";
    }
    if (!config.cell) {
        out << "w12 = " << q(s.w12, "radps") << "\n";
    }
    if (!config.buffer) {
        out << "r34 = " << q(s.r34, "radps") << "\n";
        out << "r43 = " << q(s.r43, "radps") << "\n";
    }
    out << "gamma_laser = " << q(s.gamma_laser, "radps") << "\n";
    out << "lambda_pr = " << q(s.lambda_pr, "m") << "\n";
    out << "lambda_pu = " << q(s.lambda_pu, "m") << "\n";
    out << "u = " << q(s.u, "mps") << "\n";

    if (config.cell) {
        const CellSpec& c = *config.cell;
        out << "\n[cell]\n";
        out << "length = " << q(c.length, "m") << "\n";
        out << "width = " << q(c.width, "m") << "\n";
        out << "thickness = " << q(c.thickness, "m") << "\n";
        out << "temperature = " << q(c.temperature, "K") << "\n";
        out << "atom_mass = " << q(c.atom_mass, "kg") << "\n";
        out << "angular_factor = " << (c.angular_factor ? "on" : "off") << "\n";
    }

    if (config.buffer) {
        const BufferSection& b = *config.buffer;
        out << "\n[buffer]\n";
        out << "number_density = " << q(b.gas.number_density, "m-3") << "\n";
        out << "sigma1 = " << q(b.gas.sigma1, "m2") << "\n";
        out << "sigma2 = " << q(b.gas.sigma2, "m2") << "\n";
        out << "molecule_mass = " << q(b.gas.molecule_mass, "kg") << "\n";
        out << "atom_mass = " << q(b.atom_mass, "kg") << "\n";
        out << "temperature = " << q(b.temperature, "K") << "\n";
    }

    if (config.spectrum) {
        const SpectrumSection& sp = *config.spectrum;
        out << "\n[spectrum]\n";
        out << "grid_min = " << q(sp.grid_min, "radps") << "\n";
        out << "grid_max = " << q(sp.grid_max, "radps") << "\n";
        out << "grid_points = " << sp.grid_points << "\n";
        out << "quadrature_nodes = " << sp.quadrature_nodes << "\n";
        out << "number_density = " << q(sp.number_density, "m-3") << "\n";
        out << "path_length = " << q(sp.path_length, "m") << "\n";
    }

    out << "\n[evolve]\n";
    out << "t_end = " << q(config.evolve.t_end, "s") << "\n";
    out << "rel_tol = " << format_number(config.evolve.rel_tol) << "\n";
    out << "abs_tol = " << format_number(config.evolve.abs_tol) << "\n";
    out << "max_step = " << q(config.evolve.max_step, "s") << "\n";
    out << "store_every = " << config.evolve.store_every << "\n";

    out << "\n[output]\n";
    if (!config.output.path.empty()) {
        out << "path = " << config.output.path << "\n";
    }
    out << "format = "
        << (config.output.format == OutputFormat::Csv ? "csv" : "json") << "\n";
    out << "plot_script = " << (config.output.emit_plot_script ? "on" : "off")
        << "\n";
    out << "fixed_clock = " << (config.output.fixed_clock ? "on" : "off") << "\n";

    return out.str();
}

SpectrumParams SpectrumSection::to_spectrum_params() const {
    SpectrumParams sp;
    sp.number_density = number_density;
    sp.path_length = path_length;
    sp.quadrature_nodes = quadrature_nodes;
    sp.detuning_grid.resize(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) {
        const double frac = static_cast<double>(i) / (grid_points - 1);
        sp.detuning_grid[static_cast<std::size_t>(i)] =
            grid_min + (grid_max - grid_min) * frac;
    }
    return sp;
}

} // namespace owi
