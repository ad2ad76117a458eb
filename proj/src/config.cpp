#include "difflim/config.hpp"

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "difflim/errors.hpp"

namespace difflim {

namespace {

std::string trim(std::string_view s)
{
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

[[noreturn]] void fail(int line, const std::string& msg)
{
    throw ValidationError("config line " + std::to_string(line) + ": " + msg);
}

// Drops a trailing comment, leaving '#' inside quotes alone.
std::string strip_comment(const std::string& line)
{
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

double parse_number(const std::string& tok, int line)
{
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && tok.front() == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last) fail(line, "expected a number, got '" + tok + "'");
    return v;
}

ConfigValue parse_value(const std::string& raw, int line)
{
    const std::string v = trim(raw);
    if (v.empty()) fail(line, "missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') fail(line, "unterminated string");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') fail(line, "unterminated array");
        std::vector<double> out;
        std::stringstream ss(v.substr(1, v.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (t.empty()) {
                if (ss.eof()) break;  // trailing comma
                fail(line, "empty array element");
            }
            out.push_back(parse_number(t, line));
        }
        return out;
    }
    return parse_number(v, line);
}

bool valid_key(const std::string& k)
{
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
    return true;
}

// Typed access to one section with unknown-key detection.
class Section {
public:
    Section(std::string name, const std::map<std::string, ConfigEntry>* entries)
        : name_(std::move(name)), entries_(entries)
    {
    }

    bool present() const { return entries_ != nullptr; }
    bool has(const std::string& key) const { return entries_ && entries_->count(key); }

    template <class T>
    std::optional<T> get(const std::string& key)
    {
        used_.insert(key);
        if (!has(key)) return std::nullopt;
        const ConfigEntry& e = entries_->at(key);
        if (const T* v = std::get_if<T>(&e.value)) return *v;
        fail(e.line, where(key) + " has the wrong type (expected " + type_name<T>() + ")");
    }

    template <class T>
    T get_or(const std::string& key, T fallback)
    {
        return get<T>(key).value_or(std::move(fallback));
    }

    int get_int(const std::string& key, int fallback)
    {
        const auto v = get<double>(key);
        if (!v) return fallback;
        if (*v != static_cast<double>(static_cast<long long>(*v)) || std::abs(*v) > 1e9)
            fail(line_of(key), where(key) + " must be an integer");
        return static_cast<int>(*v);
    }

    /// Rejects every key not queried so far.
    void finish() const
    {
        if (!entries_) return;
        for (const auto& [k, e] : *entries_)
            if (!used_.count(k)) fail(e.line, "unknown key '" + k + "' in " + display());
    }

    int line_of(const std::string& key) const { return has(key) ? entries_->at(key).line : 0; }
    std::string where(const std::string& key) const { return "'" + key + "' in " + display(); }

private:
    std::string display() const { return name_.empty() ? "top level" : "[" + name_ + "]"; }

    template <class T>
    static std::string type_name()
    {
        if constexpr (std::is_same_v<T, double>) return "number";
        else if constexpr (std::is_same_v<T, std::string>) return "string";
        else if constexpr (std::is_same_v<T, bool>) return "boolean";
        else return "array of numbers";
    }

    std::string name_;
    const std::map<std::string, ConfigEntry>* entries_;
    std::set<std::string> used_;
};

CoefficientField read_field(Section& s, const std::string& name, CoefficientField fallback)
{
    if (!s.present()) return fallback;
    const std::string kind = s.get_or<std::string>("kind", s.has("value") ? "constant" : "");
    try {
        if (kind == "constant") {
            const auto v = s.get<double>("value");
            if (!v) fail(s.line_of("kind"), "[" + name + "] kind = \"constant\" needs 'value'");
            return CoefficientField::constant(*v);
        }
        if (kind == "piecewise") {
            auto bp = s.get<std::vector<double>>("breakpoints");
            auto vals = s.get<std::vector<double>>("values");
            if (!bp || !vals) fail(s.line_of("kind"), "[" + name + "] piecewise needs 'breakpoints' and 'values'");
            return CoefficientField::piecewise(*bp, *vals);
        }
        if (kind == "sine") {
            const auto base = s.get<double>("base");
            if (!base) fail(s.line_of("kind"), "[" + name + "] sine needs 'base'");
            return CoefficientField::sine(*base, s.get_or<double>("amplitude", 0.0), s.get_or<double>("wavenumber", 1.0));
        }
    } catch (const ArgumentError& e) {
        throw ValidationError("[" + name + "]: " + e.what());
    }
    if (kind.empty()) fail(0, "[" + name + "] needs 'kind' or 'value'");
    fail(s.line_of("kind"), "[" + name + "] unknown kind '" + kind + "'");
}

}  // namespace

ConfigDocument parse_config(const std::string& text)
{
    ConfigDocument doc;
    doc.sections[""];
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed section header");
            current = trim(line.substr(1, line.size() - 2));
            if (!valid_key(current)) fail(line_no, "bad section name '" + current + "'");
            if (doc.sections.count(current) && !doc.sections[current].empty())
                fail(line_no, "duplicate section [" + current + "]");
            doc.sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail(line_no, "bad key '" + key + "'");
        auto& sec = doc.sections[current];
        if (sec.count(key)) fail(line_no, "duplicate key '" + key + "'");
        sec[key] = ConfigEntry{parse_value(line.substr(eq + 1), line_no), line_no};
    }
    return doc;
}

RunConfig build_config(const ConfigDocument& doc, const std::string& base_dir)
{
    static const std::set<std::string> known{"",       "grid",   "coefficients.sigma", "coefficients.gamma",
                                             "source", "boundary", "scattering",       "solver",
                                             "study"};
    for (const auto& [name, entries] : doc.sections)
        if (!known.count(name)) {
            const int line = entries.empty() ? 0 : entries.begin()->second.line;
            fail(line, "unknown section [" + name + "]");
        }
    auto section = [&](const std::string& name) {
        const auto it = doc.sections.find(name);
        return Section(name, it == doc.sections.end() ? nullptr : &it->second);
    };

    RunConfig cfg;

    Section top = section("");
    cfg.eps = top.get_or<double>("eps", 1.0);
    if (!(cfg.eps > 0.0)) fail(top.line_of("eps"), "eps must be positive");
    const std::string scaling = top.get_or<std::string>("scaling", "diffusive");
    if (scaling == "diffusive") cfg.problem.scaling = Scaling::diffusive;
    else if (scaling == "unscaled") cfg.problem.scaling = Scaling::unscaled;
    else fail(top.line_of("scaling"), "scaling must be \"diffusive\" or \"unscaled\"");
    top.finish();

    Section grid = section("grid");
    const double length = grid.get_or<double>("length", 1.0);
    const int cells = grid.get_int("cells", 64);
    if (!(length > 0.0)) fail(grid.line_of("length"), "grid length must be positive");
    if (cells < 2) fail(grid.line_of("cells"), "grid needs at least 2 cells");
    cfg.problem.grid = Grid1D(length, cells);
    grid.finish();

    Section sigma = section("coefficients.sigma");
    cfg.problem.sigma = read_field(sigma, "coefficients.sigma", CoefficientField::constant(1.0));
    sigma.finish();
    Section gamma = section("coefficients.gamma");
    cfg.problem.gamma = read_field(gamma, "coefficients.gamma", CoefficientField::constant(1.0));
    gamma.finish();

    Section source = section("source");
    if (source.get_or<std::string>("kind", "") == "manufactured") {
        const auto name = source.get<std::string>("case");
        if (!name) fail(source.line_of("kind"), "[source] kind = \"manufactured\" needs 'case'");
        cfg.manufactured = *name;
        manufactured_case(*name, length);  // rejects unknown names
    } else {
        cfg.problem.source = read_field(source, "source", CoefficientField::constant(1.0));
    }
    source.finish();

    Section boundary = section("boundary");
    cfg.problem.boundary.left = boundary.get_or<double>("left", 0.0);
    cfg.problem.boundary.right = boundary.get_or<double>("right", 0.0);
    boundary.finish();

    Section scat = section("scattering");
    const std::string kernel = scat.get_or<std::string>("kernel", "isotropic");
    const double g = scat.get_or<double>("g_factor", 0.0);
    const auto table = scat.get<std::string>("table");
    cfg.ordinates = scat.get_int("ordinates", 8);
    cfg.sphere_polar = scat.get_int("polar", 8);
    cfg.sphere_azimuth = scat.get_int("azimuth", 16);
    if (kernel == "isotropic") {
        cfg.problem.kernel = IsotropicKernel{};
    } else if (kernel == "linear") {
        if (std::abs(g) > 1.0) fail(scat.line_of("g_factor"), "g_factor must lie in [-1, 1]");
        cfg.problem.kernel = LinearKernel{g};
    } else if (kernel == "table") {
        if (!table) fail(scat.line_of("kernel"), "kernel = \"table\" needs 'table'");
        std::filesystem::path p(*table);
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        cfg.problem.kernel = read_kernel_table(p.string());
    } else {
        fail(scat.line_of("kernel"), "unknown kernel '" + kernel + "'");
    }
    if (cfg.ordinates < 2 || cfg.ordinates % 2)
        fail(scat.line_of("ordinates"), "ordinates must be even and >= 2");
    if (cfg.sphere_polar < 2) fail(scat.line_of("polar"), "polar must be >= 2");
    if (cfg.sphere_azimuth < 4) fail(scat.line_of("azimuth"), "azimuth must be >= 4");
    scat.finish();

    Section solver = section("solver");
    const std::string scheme = solver.get_or<std::string>("scheme", "diamond");
    if (scheme == "diamond" || scheme == "diamond-difference") cfg.solver.scheme = Scheme::diamond_difference;
    else if (scheme == "upwind") cfg.solver.scheme = Scheme::upwind;
    else fail(solver.line_of("scheme"), "scheme must be \"diamond\" or \"upwind\"");
    cfg.solver.tolerance = solver.get_or<double>("tolerance", cfg.solver.tolerance);
    cfg.solver.max_iterations = solver.get_int("max_iterations", cfg.solver.max_iterations);
    const std::string accel = solver.get_or<std::string>("acceleration", "dsa");
    if (accel == "dsa") cfg.solver.acceleration = Acceleration::dsa;
    else if (accel == "none") cfg.solver.acceleration = Acceleration::none;
    else fail(solver.line_of("acceleration"), "acceleration must be \"dsa\" or \"none\"");
    solver.finish();
    try {
        cfg.solver.validate();
    } catch (const ArgumentError& e) {
        throw ValidationError(std::string("[solver]: ") + e.what());
    }

    Section study = section("study");
    if (study.present()) {
        StudyOptions o;
        const auto eps = study.get<std::vector<double>>("eps");
        if (!eps) fail(0, "[study] needs an 'eps' array");
        o.eps = *eps;
        o.lp = study.get_or<bool>("lp", true);
        o.min_cells = study.get_int("min_cells", o.min_cells);
        o.cells_per_eps = study.get_or<double>("cells_per_eps", o.cells_per_eps);
        o.jobs = study.get_int("jobs", 1);
        o.ordinates = cfg.ordinates;
        o.sphere_polar = cfg.sphere_polar;
        o.sphere_azimuth = cfg.sphere_azimuth;
        o.solver = cfg.solver;
        study.finish();
        try {
            o.validate();
        } catch (const ArgumentError& e) {
            throw ValidationError(std::string("[study]: ") + e.what());
        }
        cfg.study = o;
    }

    if (cfg.manufactured) {
        const ManufacturedCase mc = manufactured_case(*cfg.manufactured, length);
        if (mc.kind == ManufacturedCase::Kind::diffusion) {
            StudyOptions sizes;
            sizes.ordinates = cfg.ordinates;
            sizes.sphere_polar = cfg.sphere_polar;
            sizes.sphere_azimuth = cfg.sphere_azimuth;
            const double a11 = limit_unit_coefficient(cfg.problem.kernel, sizes);
            cfg.problem.source = mms_diffusion_source(mc, cfg.problem.sigma, cfg.problem.gamma, a11, length);
        }
    }

    cfg.problem.validate();
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::filesystem::path dir = std::filesystem::path(path).parent_path();
    return build_config(parse_config(ss.str()), dir.empty() ? "." : dir.string());
}

std::optional<ManufacturedCase> manufactured_case_of(const RunConfig& cfg)
{
    if (!cfg.manufactured) return std::nullopt;
    return manufactured_case(*cfg.manufactured, cfg.problem.grid.length());
}

}  // namespace difflim
