#ifndef SPHBT_CLI_HPP
#define SPHBT_CLI_HPP

#include <fftw3.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphbt/errors.hpp"
#include "sphbt/parallel.hpp"
#include "sphbt/radial_transform.hpp"
#include "sphbt/reference.hpp"
#include "sphbt/tdse.hpp"

namespace sphbt::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* version = "0.1.0";

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> s{"transform-convergence", "basis-compare", "ftb-bench",
                                            "eigen",                 "oscillator",    "streak"};
    return s;
}

// ---------------------------------------------------------------- schema

enum class Kind { positive, real, count, degree, text, flag };

struct Field {
    Kind kind = Kind::positive;
    bool list = false;
    std::vector<std::string> choices;

    Field(Kind k = Kind::positive, bool is_list = false, std::vector<std::string> allowed = {})
        : kind(k), list(is_list), choices(std::move(allowed)) {}
};

using Schema = std::map<std::string, Field>;

namespace detail {

inline const json& imaginary_time_defaults() {
    static const json j = json::parse(R"({"tau_factor": 0.2, "tol": 1e-10, "check_every": 50,
                                          "max_steps": 5000000, "seed": 20240601})");
    return j;
}

inline void add_imaginary_time(Schema& s) {
    s["imaginary_time.tau_factor"] = {Kind::positive};
    s["imaginary_time.tol"] = {Kind::positive};
    s["imaginary_time.check_every"] = {Kind::count};
    s["imaginary_time.max_steps"] = {Kind::count};
    s["imaginary_time.seed"] = {Kind::count};
}

} // namespace detail

/// Defaults of a subcommand. Every consumed parameter appears here.
inline json defaults(const std::string& sub) {
    if (sub == "transform-convergence")
        return json::parse(R"({"grid": {"dr": 0.4, "rmax": [51.2, 102.4, 204.8]}, "degrees": [1, 2, 3, 4],
                               "quadrature": {"oversample": 16, "cutoff": 16.0}})");
    if (sub == "basis-compare")
        return json::parse(R"({"grid": {"dr": 0.4, "rmax": [51.2, 102.4, 204.8]}, "degrees": [1, 2, 3, 4],
                               "k": 0.490873843})");
    if (sub == "ftb-bench")
        return json::parse(R"({"grid": {"dr": 0.1}, "sizes": [1024, 2048, 4096, 8192, 16384, 32768, 65536],
                               "degrees": [0, 2, 8, 16], "min_time": 0.2, "repeats": 3})");
    if (sub == "eigen") {
        json j = json::parse(R"({"preset": "table1", "system": "hydrogen", "potential": "coulomb", "charge": 1.0,
                                 "separation": 2.0, "grid": {"dr": [0.2, 0.1, 0.05], "rmax": [102.4]},
                                 "angular": {"ntheta": [3], "nphi": 1}, "momenta": "corrected",
                                 "states": ["1s", "2s", "3s", "2p", "3p", "3d"]})");
        j["imaginary_time"] = detail::imaginary_time_defaults();
        return j;
    }
    if (sub == "oscillator")
        return json::parse(R"({"drive": {"amplitude": 0.25, "omega": [1.0, 2.0]},
                               "grid": {"dr": [0.2], "rmax": [12.8, 25.6, 51.2]}, "angular": {"ntheta": 16, "nphi": 1},
                               "gauge": ["velocity", "coordinate"], "momenta": ["plain", "corrected"],
                               "tau": 0.001, "t_fin": 10.0, "observe_every": 500})");
    if (sub == "streak") {
        json j = json::parse(R"({"grid": {"dr": 0.2, "rmax": 204.8}, "angular": {"ntheta": 16, "nphi": 1},
                                 "momenta": "corrected", "potential": "effective",
                                 "molecule": {"charge": 1.0, "separation": 2.0},
                                 "xuv": {"amplitude": 0.25, "fwhm": 10.0, "excess_energy": 0.5},
                                 "ir": {"amplitude": 0.05, "frequency": 0.062832, "duration": 200.0, "delay": [0.0]},
                                 "tau_factor": 0.25, "t_fin": 100.0, "norm_every": 100,
                                 "analysis": {"min_radius": 30.0}})");
        j["imaginary_time"] = detail::imaginary_time_defaults();
        return j;
    }
    throw ConfigError("unknown subcommand '" + sub + "'");
}

inline Schema schema(const std::string& sub) {
    Schema s;
    if (sub == "transform-convergence" || sub == "basis-compare") {
        s["grid.dr"] = {Kind::positive};
        s["grid.rmax"] = {Kind::positive, true};
        s["degrees"] = {Kind::degree, true};
        if (sub == "transform-convergence") {
            s["quadrature.oversample"] = {Kind::count};
            s["quadrature.cutoff"] = {Kind::positive};
        } else {
            s["k"] = {Kind::positive};
        }
    } else if (sub == "ftb-bench") {
        s["grid.dr"] = {Kind::positive};
        s["sizes"] = {Kind::count, true};
        s["degrees"] = {Kind::degree, true};
        s["min_time"] = {Kind::positive};
        s["repeats"] = {Kind::count};
    } else if (sub == "eigen") {
        s["preset"] = {Kind::text, false, {"table1", "table2", "table3"}};
        s["system"] = {Kind::text, false, {"hydrogen", "h2plus"}};
        s["potential"] = {Kind::text, false, {"coulomb", "effective"}};
        s["charge"] = {Kind::positive};
        s["separation"] = {Kind::positive};
        s["grid.dr"] = {Kind::positive, true};
        s["grid.rmax"] = {Kind::positive, true};
        s["angular.ntheta"] = {Kind::count, true};
        s["angular.nphi"] = {Kind::count};
        s["momenta"] = {Kind::text, false, {"plain", "corrected"}};
        s["states"] = {Kind::text, true};
        detail::add_imaginary_time(s);
    } else if (sub == "oscillator") {
        s["drive.amplitude"] = {Kind::positive};
        s["drive.omega"] = {Kind::positive, true};
        s["grid.dr"] = {Kind::positive, true};
        s["grid.rmax"] = {Kind::positive, true};
        s["angular.ntheta"] = {Kind::count};
        s["angular.nphi"] = {Kind::count};
        s["gauge"] = {Kind::text, true, {"velocity", "coordinate"}};
        s["momenta"] = {Kind::text, true, {"plain", "corrected"}};
        s["tau"] = {Kind::positive};
        s["t_fin"] = {Kind::positive};
        s["observe_every"] = {Kind::count};
    } else if (sub == "streak") {
        s["grid.dr"] = {Kind::positive};
        s["grid.rmax"] = {Kind::positive};
        s["angular.ntheta"] = {Kind::count};
        s["angular.nphi"] = {Kind::count};
        s["momenta"] = {Kind::text, false, {"plain", "corrected"}};
        s["potential"] = {Kind::text, false, {"coulomb", "effective"}};
        s["molecule.charge"] = {Kind::positive};
        s["molecule.separation"] = {Kind::positive};
        s["xuv.amplitude"] = {Kind::positive};
        s["xuv.fwhm"] = {Kind::positive};
        s["xuv.excess_energy"] = {Kind::positive};
        s["ir.amplitude"] = {Kind::positive};
        s["ir.frequency"] = {Kind::positive};
        s["ir.duration"] = {Kind::positive};
        s["ir.delay"] = {Kind::real, true};
        s["tau_factor"] = {Kind::positive};
        s["t_fin"] = {Kind::positive};
        s["norm_every"] = {Kind::count};
        s["analysis.min_radius"] = {Kind::positive};
        detail::add_imaginary_time(s);
    } else {
        throw ConfigError("unknown subcommand '" + sub + "'");
    }
    return s;
}

// ---------------------------------------------------------------- config

struct RunConfig {
    std::string subcommand;
    json params;
    std::filesystem::path out_dir = "out";
    bool serial = false;
};

namespace detail {

inline json::json_pointer pointer(const std::string& path) {
    std::string p = "/" + path;
    std::replace(p.begin(), p.end(), '.', '/');
    return json::json_pointer(p);
}

inline bool is_group(const Schema& s, const std::string& path) {
    const std::string prefix = path + ".";
    return std::any_of(s.begin(), s.end(), [&](const auto& kv) { return kv.first.rfind(prefix, 0) == 0; });
}

inline void merge(json& target, const json& source, const Schema& s, const std::string& base) {
    if (!source.is_object())
        throw ConfigError((base.empty() ? std::string("configuration") : base) + ": expected a table of keys");
    for (const auto& [key, value] : source.items()) {
        const std::string path = base.empty() ? key : base + "." + key;
        if (s.count(path)) {
            if (value.is_object()) throw ConfigError(path + ": expected a value, got a table");
            target[pointer(path)] = value;
        } else if (is_group(s, path)) {
            merge(target, value, s, path);
        } else {
            throw ConfigError("unknown key '" + path + "'");
        }
    }
}

inline std::string show(const json& v) { return v.dump(); }

inline void check_value(const std::string& where, const Field& f, const json& v) {
    auto fail = [&](const std::string& what) { throw ConfigError(where + ": " + what + ", got " + show(v)); };
    switch (f.kind) {
    case Kind::positive:
        if (!v.is_number() || !std::isfinite(v.get<double>()) || !(v.get<double>() > 0.0))
            fail("must be a positive number");
        break;
    case Kind::real:
        if (!v.is_number() || !std::isfinite(v.get<double>())) fail("must be a finite number");
        break;
    case Kind::count:
    case Kind::degree: {
        const bool integral = v.is_number_integer() ||
                              (v.is_number_float() && std::isfinite(v.get<double>()) &&
                               v.get<double>() == std::floor(v.get<double>()) && std::abs(v.get<double>()) < 9e15);
        if (!integral) fail(f.kind == Kind::count ? "must be a positive integer" : "must be a non-negative integer");
        const double x = v.get<double>();
        if (f.kind == Kind::count && x < 1.0) fail("must be a positive integer");
        if (f.kind == Kind::degree && (x < 0.0 || x > default_max_degree))
            fail("must be an integer degree in [0, " + std::to_string(default_max_degree) + "]");
        break;
    }
    case Kind::text:
        if (!v.is_string()) fail("must be a string");
        if (!f.choices.empty() && std::find(f.choices.begin(), f.choices.end(), v.get<std::string>()) == f.choices.end()) {
            std::string c;
            for (const auto& e : f.choices) c += (c.empty() ? "" : ", ") + e;
            fail("must be one of {" + c + "}");
        }
        break;
    case Kind::flag:
        if (!v.is_boolean()) fail("must be true or false");
        break;
    }
}

inline json normalize(const std::string& path, const Field& f, json v) {
    if (f.list) {
        if (!v.is_array()) v = json::array({v});
        if (v.empty()) throw ConfigError(path + ": must not be empty");
        for (std::size_t i = 0; i < v.size(); ++i) {
            check_value(path + "[" + std::to_string(i) + "]", f, v[i]);
            if ((f.kind == Kind::count || f.kind == Kind::degree) && v[i].is_number_float())
                v[i] = static_cast<long>(v[i].get<double>());
        }
    } else {
        if (v.is_array()) throw ConfigError(path + ": expected a single value, got " + show(v));
        check_value(path, f, v);
        if ((f.kind == Kind::count || f.kind == Kind::degree) && v.is_number_float())
            v = static_cast<long>(v.get<double>());
    }
    return v;
}

/// Override value text: JSON if it parses, a comma-separated list, or a string.
inline json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
    }
    if (text.find(',') != std::string::npos) {
        json arr = json::array();
        std::size_t start = 0;
        while (true) {
            const auto pos = text.find(',', start);
            arr.push_back(parse_value(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        return arr;
    }
    return text;
}

} // namespace detail

/// "--key.path value" and "--key.path=value" pairs into a nested object.
inline json parse_overrides(const std::vector<std::string>& tokens, const Schema& s) {
    json out = json::object();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        if (tok.rfind("--", 0) != 0 || tok.size() == 2)
            throw ConfigError("unexpected argument '" + tok + "'; overrides take the form --key.path value");
        std::string key = tok.substr(2), value;
        if (const auto eq = key.find('='); eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else {
            if (i + 1 >= tokens.size()) throw ConfigError(key + ": missing value");
            value = tokens[++i];
        }
        if (!s.count(key)) {
            if (detail::is_group(s, key)) throw ConfigError(key + ": expected a value, got a table");
            throw ConfigError("unknown key '" + key + "'");
        }
        out[detail::pointer(key)] = detail::parse_value(value);
    }
    return out;
}

namespace detail {

inline json preset_overlay(const std::string& preset) {
    if (preset == "table2") return json::parse(R"({"potential": "effective"})");
    if (preset == "table3")
        return json::parse(R"({"system": "h2plus", "potential": "effective", "grid": {"dr": [0.2], "rmax": [102.4]},
                               "angular": {"ntheta": [4, 8, 16]}, "states": ["1sg", "2pu"]})");
    return json::object();
}

inline json read_config_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config file " + file.string() + ": cannot be opened");
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + file.string() + ": " + e.what());
    }
}

} // namespace detail

// ---------------------------------------------------------------- typed access

inline double number(const json& p, const std::string& path) { return p[detail::pointer(path)].get<double>(); }
inline long integer(const json& p, const std::string& path) { return p[detail::pointer(path)].get<long>(); }
inline std::string text(const json& p, const std::string& path) { return p[detail::pointer(path)].get<std::string>(); }

template <class T>
std::vector<T> list(const json& p, const std::string& path) {
    const auto& v = p[detail::pointer(path)];
    if (!v.is_array()) return {v.get<T>()};
    return v.get<std::vector<T>>();
}

// ---------------------------------------------------------------- state labels

struct StateLabel {
    std::string name;
    int n = 1;
    int l = 0;
    int parity = 0;  // +1 gerade, -1 ungerade, 0 none
};

inline StateLabel parse_state(const std::string& system, const std::string& name) {
    static const std::string letters = "spdfghik";
    auto bad = [&] {
        return ConfigError("states: '" + name + "' is not a valid " + system + " state label" +
                           (system == "hydrogen" ? " (expected e.g. 1s, 2p, 3d)" : " (expected 1sg or 2pu)"));
    };
    if (system == "h2plus") {
        if (name == "1sg") return {name, 1, 0, +1};
        if (name == "2pu") return {name, 2, 1, -1};
        throw bad();
    }
    if (name.size() < 2) throw bad();
    const auto pos = letters.find(name.back());
    if (pos == std::string::npos) throw bad();
    int n = 0;
    for (std::size_t i = 0; i + 1 < name.size(); ++i) {
        if (name[i] < '0' || name[i] > '9') throw bad();
        n = n * 10 + (name[i] - '0');
    }
    const int l = static_cast<int>(pos);
    if (n <= l) throw bad();
    return {name, n, l, 0};
}

// ---------------------------------------------------------------- parse_config

namespace detail {

inline void check_grid_multiples(const json& p, const char* rmax_key = "grid.rmax") {
    for (double dr : list<double>(p, "grid.dr"))
        for (double rmax : list<double>(p, rmax_key)) {
            const double q = rmax / dr;
            if (std::abs(q - std::round(q)) > 1e-9 * std::max(1.0, q) || std::round(q) < 2.0)
                throw ConfigError(std::string(rmax_key) + ": " + json(rmax).dump() + " is not a multiple of grid.dr " +
                                  json(dr).dump() + " with at least two points");
        }
}

inline void cross_validate(const std::string& sub, const json& p) {
    if (sub != "ftb-bench") check_grid_multiples(p);
    if (sub == "basis-compare") {
        const double k = number(p, "k");
        for (double rmax : list<double>(p, "grid.rmax")) {
            const double dk = std::numbers::pi / rmax;
            const double n = std::round(k / dk);
            if (std::abs(n * dk - k) > 1e-6 * k)
                throw ConfigError("k: " + json(k).dump() + " is not a multiple of the momentum step " +
                                  json(dk).dump() + " for grid.rmax " + json(rmax).dump());
            for (long l : list<long>(p, "degrees"))
                if (n < static_cast<double>(dlop::first_regular_row(static_cast<int>(l))))
                    throw ConfigError("k: mode " + json(n).dump() + " is a completion mode for degree " +
                                      std::to_string(l) + " at grid.rmax " + json(rmax).dump());
        }
    }
    if (sub == "eigen") {
        const auto system = text(p, "system");
        for (const auto& s : list<std::string>(p, "states")) {
            const auto st = parse_state(system, s);
            for (long nt : list<long>(p, "angular.ntheta"))
                if (nt < st.l + 1)
                    throw ConfigError("angular.ntheta: " + std::to_string(nt) + " cannot represent state " + s +
                                      " (needs at least " + std::to_string(st.l + 1) + ")");
        }
    }
    if (sub == "streak") {
        for (double delay : list<double>(p, "ir.delay")) {
            const double t0 = -0.5 * number(p, "ir.duration") + delay;
            if (!(t0 < number(p, "t_fin")))
                throw ConfigError("t_fin: must exceed the start time " + json(t0).dump() + " for ir.delay " +
                                  json(delay).dump());
        }
    }
}

} // namespace detail

/// Resolves defaults, an optional file and command-line overrides (in that
/// order of precedence, lowest first) into a validated configuration.
inline RunConfig parse_config(const std::string& sub, const std::optional<std::filesystem::path>& file,
                              const std::vector<std::string>& overrides, std::filesystem::path out_dir = "out",
                              bool serial = false) {
    if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end())
        throw ConfigError("unknown subcommand '" + sub + "'");
    const Schema s = schema(sub);
    json params = defaults(sub);
    const json from_file = file ? detail::read_config_file(*file) : json::object();
    const json from_flags = parse_overrides(overrides, s);

    json staged = params;
    detail::merge(staged, from_file, s, "");
    detail::merge(staged, from_flags, s, "");
    if (sub == "eigen") {
        // a preset replaces the defaults it covers; explicit keys still win
        const auto preset = detail::normalize("preset", s.at("preset"), staged["preset"]);
        detail::merge(params, detail::preset_overlay(preset.get<std::string>()), s, "");
        detail::merge(params, from_file, s, "");
        detail::merge(params, from_flags, s, "");
    } else {
        params = std::move(staged);
    }
    for (const auto& [path, field] : s) {
        const auto ptr = detail::pointer(path);
        params[ptr] = detail::normalize(path, field, params[ptr]);
    }
    detail::cross_validate(sub, params);
    if (out_dir.empty()) throw ConfigError("out: output directory must not be empty");
    return {sub, params, std::move(out_dir), serial};
}

// ---------------------------------------------------------------- tables

using Cell = std::variant<long, double, std::string>;

struct Table {
    std::string name;   // file stem
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::string> units;
    std::vector<std::vector<Cell>> rows;
};

namespace detail {

inline std::string format_cell(const Cell& c) {
    if (const auto* l = std::get_if<long>(&c)) return std::to_string(*l);
    if (const auto* d = std::get_if<double>(&c)) {
        if (std::isnan(*d)) return "nan";
        if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
        return json(*d).dump();  // shortest round-trip form
    }
    return std::get<std::string>(c);
}

} // namespace detail

inline void write_csv(const std::filesystem::path& file, const Table& t, const std::string& sub) {
    std::ofstream out(file);
    if (!out) throw ConfigError("out: cannot write " + file.string());
    out << "# sphbt " << version << " " << sub << "\n# " << t.title << "\n# units: atomic units\n# columns:";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << " " << t.columns[c] << " [" << t.units[c] << "]";
    out << "\n";
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << detail::format_cell(row[c]);
        out << "\n";
    }
    if (!out) throw ConfigError("out: failed writing " + file.string());
}

struct RunContext {
    std::ostream* log = nullptr;
};

namespace detail {

inline void note(const RunContext& ctx, const std::string& line) {
    if (ctx.log) *ctx.log << line << std::endl;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string fmt(double v, int digits = 7) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Re-raises the active library error with scenario context prepended.
[[noreturn]] inline void rethrow_with_context(const std::string& ctx) {
    try {
        throw;
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(ctx + ": " + e.what(), e.last_residual());
    } catch (const NumericError& e) {
        throw NumericError(ctx + ": " + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(ctx + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(ctx + ": " + e.what());
    }
}

template <class F>
auto with_context(const std::string& ctx, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        rethrow_with_context(ctx);
    }
}

} // namespace detail

// ---------------------------------------------------------------- transform-convergence

struct ConvergencePoint {
    int l = 0;
    double rmax = 0.0;
    long n = 0;
    double k = 0.0;
    double dsbt = 0.0;       // b_n / sqrt(w_n)
    double quadrature = 0.0;
    double closed_form = 0.0;
    double delta = 0.0;      // |dsbt - quadrature|
};

struct ConvergenceSummary {
    int l = 0;
    double rmax = 0.0;
    long size = 0;
    double dk = 0.0;
    double max_delta = 0.0;
    double ratio = std::numeric_limits<double>::quiet_NaN();  // previous grid's max_delta / this one
};

struct TransformConvergence {
    std::vector<ConvergencePoint> points;
    std::vector<ConvergenceSummary> summary;
};

inline TransformConvergence transform_convergence(const json& p, const RunContext& ctx = {}) {
    const double dr = number(p, "grid.dr");
    const reference::QuadratureSpec qs{static_cast<int>(integer(p, "quadrature.oversample"))};
    const double cutoff = number(p, "quadrature.cutoff");
    TransformConvergence out;
    for (long ll : list<long>(p, "degrees")) {
        const int l = static_cast<int>(ll);
        double prev = std::numeric_limits<double>::quiet_NaN();
        for (double rmax : list<double>(p, "grid.rmax")) {
            detail::with_context("transform-convergence (l = " + std::to_string(l) + ", rmax = " + detail::fmt(rmax) + ")", [&] {
                const auto grid = RadialGrid::from_extent(dr, rmax);
                const auto plan = make_plan(l, grid);
                const auto& mg = plan.momentum();
                std::vector<double> psi(static_cast<std::size_t>(grid.count));
                for (long i = 1; i <= grid.count; ++i)
                    psi[static_cast<std::size_t>(i - 1)] = reference::gaussian_orbital(l, grid.node(i)) * std::sqrt(dr);
                plan.dsbt<double>(std::span<const double>(psi), std::span<double>(psi), Direction::forward);
                const double reach = std::min(rmax, cutoff);
                auto orbital = [l](double r) { return reference::gaussian_orbital(l, r); };
                ConvergenceSummary s{l, rmax, grid.count, mg.step, 0.0, prev};
                for (long n = mg.first_regular; n <= mg.upper; ++n) {
                    ConvergencePoint pt{l, rmax, n, mg.k(n)};
                    pt.dsbt = psi[static_cast<std::size_t>(mg.slot(n))] / std::sqrt(mg.weight(n));
                    pt.quadrature = reference::sbt_quadrature(orbital, l, pt.k, reach, dr, qs);
                    pt.closed_form = reference::gaussian_orbital_transform(l, pt.k);
                    pt.delta = std::abs(pt.dsbt - pt.quadrature);
                    s.max_delta = std::max(s.max_delta, pt.delta);
                    out.points.push_back(pt);
                }
                s.ratio = prev / s.max_delta;
                prev = s.max_delta;
                out.summary.push_back(s);
                detail::note(ctx, "transform-convergence: l = " + std::to_string(l) + ", rmax = " + detail::fmt(rmax) +
                                      ", max |c_n - c(k_n)| = " + detail::fmt(s.max_delta, 4));
                return 0;
            });
        }
    }
    return out;
}

inline std::vector<Table> tables(const TransformConvergence& r) {
    Table pts{"transform_convergence_curves", "DSBT coefficients of Gaussian orbitals against the quadrature transform",
              {"l", "rmax", "n", "k", "c_dsbt", "c_quadrature", "c_closed_form", "delta"},
              {"-", "bohr", "-", "1/bohr", "bohr^1/2", "bohr^1/2", "bohr^1/2", "bohr^1/2"}, {}};
    for (const auto& q : r.points)
        pts.rows.push_back({long(q.l), q.rmax, q.n, q.k, q.dsbt, q.quadrature, q.closed_form, q.delta});
    Table sum{"transform_convergence", "Maximum coefficient error per grid; ratio to the previous r_max",
              {"l", "rmax", "N", "dk", "max_delta", "ratio"}, {"-", "bohr", "-", "1/bohr", "bohr^1/2", "-"}, {}};
    for (const auto& s : r.summary) sum.rows.push_back({long(s.l), s.rmax, s.size, s.dk, s.max_delta, s.ratio});
    return {sum, pts};
}

// ---------------------------------------------------------------- basis-compare

struct BasisCurvePoint {
    int l = 0;
    double rmax = 0.0;
    double r = 0.0;
    double basis = 0.0;
    double plain = 0.0;      // chi_l(k r)
    double corrected = 0.0;  // chi_l(k_nl r)
};

struct BasisSummary {
    int l = 0;
    double rmax = 0.0;
    long n = 0;
    double k = 0.0;
    double k_corrected = 0.0;
    double max_plain = 0.0;
    double max_corrected = 0.0;
};

struct BasisCompare {
    std::vector<BasisCurvePoint> curves;
    std::vector<BasisSummary> summary;
};

inline BasisCompare basis_compare(const json& p, const RunContext& ctx = {}) {
    const double dr = number(p, "grid.dr");
    const double k = number(p, "k");
    BasisCompare out;
    for (long ll : list<long>(p, "degrees")) {
        const int l = static_cast<int>(ll);
        for (double rmax : list<double>(p, "grid.rmax")) {
            detail::with_context("basis-compare (l = " + std::to_string(l) + ", rmax = " + detail::fmt(rmax) + ")", [&] {
                const auto grid = RadialGrid::from_extent(dr, rmax);
                const auto plan = make_plan(l, grid);
                const auto& mg = plan.momentum();
                const long n = std::lround(k / mg.step);
                const auto chi = basis_function(plan, n);
                const double kc = corrected_momenta(plan)[static_cast<std::size_t>(mg.slot(n))];
                BasisSummary s{l, rmax, n, mg.k(n), kc};
                for (long i = 1; i <= grid.count; ++i) {
                    const double r = grid.node(i);
                    BasisCurvePoint c{l, rmax, r, chi[static_cast<std::size_t>(i - 1)],
                                      reference::riccati_bessel(l, mg.k(n) * r).first,
                                      reference::riccati_bessel(l, kc * r).first};
                    s.max_plain = std::max(s.max_plain, std::abs(c.basis - c.plain));
                    s.max_corrected = std::max(s.max_corrected, std::abs(c.basis - c.corrected));
                    out.curves.push_back(c);
                }
                out.summary.push_back(s);
                detail::note(ctx, "basis-compare: l = " + std::to_string(l) + ", rmax = " + detail::fmt(rmax) +
                                      ", max deviation " + detail::fmt(s.max_plain, 4) + " (k_n), " +
                                      detail::fmt(s.max_corrected, 4) + " (k_nl)");
                return 0;
            });
        }
    }
    return out;
}

inline std::vector<Table> tables(const BasisCompare& r) {
    Table sum{"basis_compare", "Maximum deviation of DSBT basis functions from spherical Bessel functions",
              {"l", "rmax", "n", "k_n", "k_nl", "max_delta_plain", "max_delta_corrected", "ratio"},
              {"-", "bohr", "-", "1/bohr", "1/bohr", "-", "-", "-"}, {}};
    for (const auto& s : r.summary)
        sum.rows.push_back({long(s.l), s.rmax, s.n, s.k, s.k_corrected, s.max_plain, s.max_corrected,
                            s.max_plain / s.max_corrected});
    Table cur{"basis_compare_curves", "DSBT basis function and spherical Bessel functions at k_n and k_nl",
              {"l", "rmax", "r", "basis", "chi_plain", "chi_corrected", "delta_plain", "delta_corrected"},
              {"-", "bohr", "bohr", "-", "-", "-", "-", "-"}, {}};
    for (const auto& c : r.curves)
        cur.rows.push_back({long(c.l), c.rmax, c.r, c.basis, c.plain, c.corrected, std::abs(c.basis - c.plain),
                            std::abs(c.basis - c.corrected)});
    return {sum, cur};
}

// ---------------------------------------------------------------- ftb-bench

struct BenchRow {
    long size = 0;
    int l = 0;
    double plan_seconds = 0.0;
    double ftb_seconds = 0.0;      // fast FtB stage, one forward application
    double fourier_seconds = 0.0;  // Fourier stage
    double dsbt_seconds = 0.0;     // full transform
};

struct BenchFit {
    int l = 0;
    std::string stage;
    std::string model;
    double coefficient = 0.0;  // seconds per model operation
    double exponent = 0.0;     // log-log slope of time against N
};

struct FtbBench {
    std::vector<BenchRow> rows;
    std::vector<BenchFit> fits;
};

namespace detail {

template <class F>
double time_per_call(F&& f, double min_time, long repeats) {
    f();  // warm-up
    double best = std::numeric_limits<double>::infinity();
    for (long r = 0; r < repeats; ++r) {
        long calls = 0;
        const auto t0 = std::chrono::steady_clock::now();
        double el = 0.0;
        do {
            f();
            ++calls;
            el = seconds_since(t0);
        } while (el < min_time / static_cast<double>(repeats));
        best = std::min(best, el / static_cast<double>(calls));
    }
    return best;
}

inline double loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace detail

inline FtbBench ftb_bench(const json& p, const RunContext& ctx = {}) {
    const double dr = number(p, "grid.dr");
    const double min_time = number(p, "min_time");
    const long repeats = integer(p, "repeats");
    FtbBench out;
    for (long ll : list<long>(p, "degrees")) {
        const int l = static_cast<int>(ll);
        std::vector<double> ns, ftb, fou;
        for (long N : list<long>(p, "sizes")) {
            detail::with_context("ftb-bench (l = " + std::to_string(l) + ", N = " + std::to_string(N) + ")", [&] {
                const auto t0 = std::chrono::steady_clock::now();
                const auto plan = make_plan(l, RadialGrid(dr, N));
                BenchRow row{N, l, detail::seconds_since(t0)};
                std::mt19937_64 rng(static_cast<unsigned long>(N * 131 + l));
                std::normal_distribution<double> g;
                std::vector<double> x(static_cast<std::size_t>(N)), y(x.size());
                for (auto& e : x) e = g(rng);
                const std::span<const double> xs(x);
                const std::span<double> ys(y);
                row.ftb_seconds = detail::time_per_call([&] { plan.ftb<double>(xs, ys, Direction::forward); }, min_time, repeats);
                row.fourier_seconds = detail::time_per_call([&] { plan.fourier<double>(xs, ys, Direction::forward); }, min_time, repeats);
                row.dsbt_seconds = detail::time_per_call([&] { plan.dsbt<double>(xs, ys, Direction::forward); }, min_time, repeats);
                out.rows.push_back(row);
                ns.push_back(static_cast<double>(N));
                ftb.push_back(row.ftb_seconds);
                fou.push_back(row.fourier_seconds);
                detail::note(ctx, "ftb-bench: l = " + std::to_string(l) + ", N = " + std::to_string(N) + ": FtB " +
                                      detail::fmt(row.ftb_seconds, 3) + " s, Fourier " + detail::fmt(row.fourier_seconds, 3) +
                                      " s, DSBT " + detail::fmt(row.dsbt_seconds, 3) + " s");
                return 0;
            });
        }
        // least squares through the origin: t = c * ops
        auto fit = [&](const std::vector<double>& t, auto ops) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                const double o = ops(ns[i]);
                num += t[i] * o;
                den += o * o;
            }
            return num / den;
        };
        out.fits.push_back({l, "ftb", "(l+1)*N", fit(ftb, [l](double n) { return (l + 1.0) * n; }),
                            detail::loglog_fit(ns, ftb)});
        out.fits.push_back({l, "fourier", "N*log2(N)", fit(fou, [](double n) { return n * std::log2(n); }),
                            detail::loglog_fit(ns, fou)});
    }
    return out;
}

inline std::vector<Table> tables(const FtbBench& r) {
    Table t{"ftb_bench", "Wall time per forward application (best of repeats)",
            {"N", "l", "plan_seconds", "ftb_seconds", "fourier_seconds", "dsbt_seconds"},
            {"-", "-", "s", "s", "s", "s"}, {}};
    for (const auto& w : r.rows)
        t.rows.push_back({w.size, long(w.l), w.plan_seconds, w.ftb_seconds, w.fourier_seconds, w.dsbt_seconds});
    Table f{"ftb_bench_fit", "Operation-count model fit: time = coefficient * model; exponent of time against N",
            {"l", "stage", "model", "coefficient", "exponent"}, {"-", "-", "-", "s", "-"}, {}};
    for (const auto& e : r.fits) f.rows.push_back({long(e.l), e.stage, e.model, e.coefficient, e.exponent});
    return {t, f};
}

// ---------------------------------------------------------------- eigen

struct EigenRow {
    std::string state;
    int n = 0;
    int l = 0;
    double dr = 0.0;
    double rmax = 0.0;
    long ntheta = 0;
    long nphi = 0;
    std::string potential;
    double energy = 0.0;
    double rayleigh = 0.0;
    long steps = 0;
    double reference = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double legendre(int l, double x) {
    double p0 = 1.0, p1 = x;
    if (l == 0) return p0;
    for (int n = 1; n < l; ++n) {
        const double p2 = ((2.0 * n + 1.0) * x * p1 - n * p0) / (n + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

inline ImaginaryTimeOptions imaginary_options(const json& p, double dr) {
    ImaginaryTimeOptions o;
    o.tau = number(p, "imaginary_time.tau_factor") * dr * dr;
    o.tol = number(p, "imaginary_time.tol");
    o.check_every = integer(p, "imaginary_time.check_every");
    o.max_steps = integer(p, "imaginary_time.max_steps");
    o.seed = static_cast<std::uint64_t>(integer(p, "imaginary_time.seed"));
    return o;
}

inline Momenta momenta_of(const std::string& s) { return s == "plain" ? Momenta::plain : Momenta::corrected; }

inline SphericalField two_center_orbital(const Dvr3d& dvr, double Z, double R, double sign) {
    return dvr.sample([=](double x, double y, double z) {
        const double a = std::sqrt(x * x + y * y + (z - 0.5 * R) * (z - 0.5 * R));
        const double b = std::sqrt(x * x + y * y + (z + 0.5 * R) * (z + 0.5 * R));
        return std::exp(-Z * a) + sign * std::exp(-Z * b);
    });
}

} // namespace detail

/// Energies from the spheroidal-coordinate reference calculation at R = 2.
inline double h2plus_reference(const std::string& state) { return state == "1sg" ? -1.102634 : -0.667534; }

inline std::vector<EigenRow> eigen(const json& p, const RunContext& ctx = {}) {
    const auto system = text(p, "system");
    const auto potential = text(p, "potential");
    const double Z = number(p, "charge");
    const double R = number(p, "separation");
    const auto momenta = detail::momenta_of(text(p, "momenta"));
    const long nphi = integer(p, "angular.nphi");
    std::vector<StateLabel> states;
    for (const auto& s : list<std::string>(p, "states")) states.push_back(parse_state(system, s));

    std::vector<EigenRow> rows;
    for (double rmax : list<double>(p, "grid.rmax"))
        for (long nt : list<long>(p, "angular.ntheta"))
            for (double dr : list<double>(p, "grid.dr")) {
                const std::string where = "eigen (dr = " + detail::fmt(dr) + ", rmax = " + detail::fmt(rmax) +
                                          ", ntheta = " + std::to_string(nt) + ")";
                detail::with_context(where, [&] {
                    const auto t0 = std::chrono::steady_clock::now();
                    const Dvr3d dvr(RadialGrid::from_extent(dr, rmax), static_cast<int>(nt), static_cast<int>(nphi));
                    PotentialSpec ps;
                    ps.charge = Z;
                    ps.separation = R;
                    if (system == "hydrogen")
                        ps.kind = potential == "coulomb" ? PotentialKind::coulomb : PotentialKind::effective;
                    else
                        ps.kind = potential == "coulomb" ? PotentialKind::two_center_coulomb
                                                         : PotentialKind::two_center_effective;
                    HamiltonianSpec h;
                    h.momenta = momenta;
                    h.potential = build_potential(dvr, ps, momenta);
                    const int lmax = dvr.angular().max_degree();

                    auto emit = [&](const StateLabel& st, const Eigenstate& e, double ref) {
                        rows.push_back({st.name, st.n, st.l, dr, rmax, nt, nphi, potential, e.energy, e.rayleigh,
                                        e.steps, ref});
                        detail::note(ctx, "eigen: " + st.name + " dr = " + detail::fmt(dr) + " ntheta = " +
                                              std::to_string(nt) + ": E = " + detail::fmt(e.energy, 10) + " (" +
                                              std::to_string(e.steps) + " steps, " +
                                              detail::fmt(detail::seconds_since(t0), 3) + " s)");
                    };

                    if (system == "hydrogen") {
                        std::map<int, int> needed;  // l -> number of states
                        for (const auto& st : states) needed[st.l] = std::max(needed[st.l], st.n - st.l);
                        std::map<int, std::vector<Eigenstate>> solved;
                        for (const auto& [l, count] : needed) {
                            auto o = detail::imaginary_options(p, dr);
                            o.degrees = {l};
                            o.azimuthal = {0};
                            const int ll = l;
                            o.trial = {dvr.sample([=](double x, double y, double z) {
                                const double r = std::sqrt(x * x + y * y + z * z);
                                return std::pow(r, ll) * detail::legendre(ll, r > 0.0 ? z / r : 1.0) *
                                       std::exp(-Z * r / (ll + 1.0));
                            })};
                            solved[l] = imaginary_time_solve(h, dvr, count, o);
                        }
                        for (const auto& st : states)
                            emit(st, solved[st.l][static_cast<std::size_t>(st.n - st.l - 1)],
                                 -0.5 * Z * Z / (static_cast<double>(st.n) * st.n));
                    } else {
                        for (const auto& st : states) {
                            auto o = detail::imaginary_options(p, dr);
                            for (int l = st.parity > 0 ? 0 : 1; l <= lmax; l += 2) o.degrees.push_back(l);
                            o.azimuthal = {0};
                            o.trial = {detail::two_center_orbital(dvr, Z, R, st.parity > 0 ? 1.0 : -1.0)};
                            const auto e = imaginary_time_solve(h, dvr, 1, o);
                            const bool standard = Z == 1.0 && R == 2.0;
                            emit(st, e[0], standard ? h2plus_reference(st.name) : std::numeric_limits<double>::quiet_NaN());
                        }
                    }
                    return 0;
                });
            }
    return rows;
}

inline std::vector<Table> tables(const std::vector<EigenRow>& rows) {
    Table t{"eigen", "Bound-state energies from imaginary-time propagation",
            {"state", "n", "l", "dr", "rmax", "ntheta", "nphi", "potential", "energy", "rayleigh", "steps", "reference"},
            {"-", "-", "-", "bohr", "bohr", "-", "-", "-", "hartree", "hartree", "-", "hartree"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({r.state, long(r.n), long(r.l), r.dr, r.rmax, r.ntheta, r.nphi, r.potential, r.energy,
                          r.rayleigh, r.steps, r.reference});
    return {t};
}

// ---------------------------------------------------------------- oscillator

struct OscillatorRun {
    double omega = 0.0;
    std::string gauge;
    std::string momenta;
    double dr = 0.0;
    double rmax = 0.0;
    double delta_final = 0.0;
    double norm_final = 0.0;
    double ratio = std::numeric_limits<double>::quiet_NaN();  // previous r_max's delta / this one
    std::vector<PropagationSample> samples;
};

inline std::vector<OscillatorRun> oscillator(const json& p, const RunContext& ctx = {}) {
    const double A0 = number(p, "drive.amplitude");
    const double tau = number(p, "tau");
    const double t_fin = number(p, "t_fin");
    const long nt = integer(p, "angular.ntheta"), nphi = integer(p, "angular.nphi");
    PropagationOptions opt;
    opt.observe_every = integer(p, "observe_every");
    std::vector<OscillatorRun> out;
    for (double omega : list<double>(p, "drive.omega"))
        for (const auto& gauge : list<std::string>(p, "gauge"))
            for (const auto& mom : list<std::string>(p, "momenta"))
                for (double dr : list<double>(p, "grid.dr")) {
                    double prev = std::numeric_limits<double>::quiet_NaN();
                    for (double rmax : list<double>(p, "grid.rmax")) {
                        const std::string where = "oscillator (omega = " + detail::fmt(omega) + ", " + gauge + " gauge, " +
                                                  mom + " momenta, dr = " + detail::fmt(dr) + ", rmax = " + detail::fmt(rmax) + ")";
                        detail::with_context(where, [&] {
                            const auto t0 = std::chrono::steady_clock::now();
                            const Dvr3d dvr(RadialGrid::from_extent(dr, rmax), static_cast<int>(nt), static_cast<int>(nphi));
                            const reference::DrivenOscillator exact(A0, omega);
                            const auto g = gauge == "velocity" ? reference::Gauge::velocity : reference::Gauge::coordinate;
                            HamiltonianSpec h;
                            h.momenta = detail::momenta_of(mom);
                            h.potential = oscillator_potential(dvr);
                            const auto pulse = PulseSpec::oscillator(A0, omega);
                            if (g == reference::Gauge::velocity)
                                h.vector_potential = [pulse](double t) { return field_at(pulse, t).A; };
                            else
                                h.electric_force = [pulse](double t) { return field_at(pulse, t).qE; };
                            auto exact_field = [&](double t) {
                                const auto s = exact.state(t);
                                return dvr.sample([&](double x, double y, double z) { return exact.psi(s, g, x, y, z); });
                            };
                            PropagationOptions o = opt;
                            o.reference = exact_field;
                            const auto rep = propagate(exact_field(0.0), 0.0, t_fin, tau, h, dvr, o);
                            OscillatorRun run{omega, gauge, mom, dr, rmax, *rep.samples.back().delta,
                                              rep.samples.back().norm, prev / *rep.samples.back().delta, rep.samples};
                            prev = run.delta_final;
                            out.push_back(std::move(run));
                            detail::note(ctx, "oscillator: omega = " + detail::fmt(omega) + " " + gauge + " " + mom +
                                                  " rmax = " + detail::fmt(rmax) + ": delta(t_fin) = " +
                                                  detail::fmt(out.back().delta_final, 4) + " (" +
                                                  detail::fmt(detail::seconds_since(t0), 3) + " s)");
                            return 0;
                        });
                    }
                }
    return out;
}

inline std::vector<Table> tables(const std::vector<OscillatorRun>& runs) {
    Table sum{"oscillator", "Deviation from the exact driven-oscillator state at t_fin",
              {"omega", "gauge", "momenta", "dr", "rmax", "delta_final", "norm_final", "ratio"},
              {"hartree", "-", "-", "bohr", "bohr", "-", "-", "-"}, {}};
    Table cur{"oscillator_delta", "Deviation from the exact state along the propagation",
              {"omega", "gauge", "momenta", "dr", "rmax", "t", "delta", "norm"},
              {"hartree", "-", "-", "bohr", "bohr", "a.u. time", "-", "-"}, {}};
    for (const auto& r : runs) {
        sum.rows.push_back({r.omega, r.gauge, r.momenta, r.dr, r.rmax, r.delta_final, r.norm_final, r.ratio});
        for (const auto& s : r.samples)
            cur.rows.push_back({r.omega, r.gauge, r.momenta, r.dr, r.rmax, s.t, s.delta.value_or(std::nan("")), s.norm});
    }
    return {sum, cur};
}

// ---------------------------------------------------------------- streak

struct StreakRun {
    double delay = 0.0;
    double ground_energy = 0.0;
    double xuv_frequency = 0.0;
    double norm_final = 0.0;
    double peak_radius = 0.0;
    double peak_density = 0.0;
    std::vector<std::string> warnings;
    std::vector<PropagationSample> samples;
    std::vector<DensitySample> ray;
    std::vector<PlaneSample> plane;
};

inline std::vector<StreakRun> streak(const json& p, const RunContext& ctx = {}) {
    const double dr = number(p, "grid.dr"), rmax = number(p, "grid.rmax");
    const auto momenta = detail::momenta_of(text(p, "momenta"));
    const std::string where = "streak (dr = " + detail::fmt(dr) + ", rmax = " + detail::fmt(rmax) + ")";
    return detail::with_context(where, [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const Dvr3d dvr(RadialGrid::from_extent(dr, rmax), static_cast<int>(integer(p, "angular.ntheta")),
                        static_cast<int>(integer(p, "angular.nphi")));
        PotentialSpec ps;
        ps.kind = text(p, "potential") == "coulomb" ? PotentialKind::two_center_coulomb : PotentialKind::two_center_effective;
        ps.charge = number(p, "molecule.charge");
        ps.separation = number(p, "molecule.separation");
        HamiltonianSpec h;
        h.momenta = momenta;
        h.potential = build_potential(dvr, ps, momenta);

        auto o = detail::imaginary_options(p, dr);
        o.azimuthal = {0};
        o.trial = {detail::two_center_orbital(dvr, ps.charge, ps.separation, 1.0)};
        const auto gs = imaginary_time_solve(h, dvr, 1, o);
        detail::note(ctx, "streak: ground state E0 = " + detail::fmt(gs[0].energy, 10) + " (" +
                              detail::fmt(detail::seconds_since(t0), 3) + " s)");

        XuvPulse xuv;
        xuv.amplitude = number(p, "xuv.amplitude");
        xuv.fwhm = number(p, "xuv.fwhm");
        xuv.frequency = std::abs(gs[0].energy) + number(p, "xuv.excess_energy");
        IrPulse ir;
        ir.amplitude = number(p, "ir.amplitude");
        ir.frequency = number(p, "ir.frequency");
        ir.duration = number(p, "ir.duration");
        const double t_fin = number(p, "t_fin");
        const double tau = number(p, "tau_factor") * dr * dr;
        const double rmin = number(p, "analysis.min_radius");
        PropagationOptions opt;
        opt.observe_every = integer(p, "norm_every");

        std::vector<StreakRun> out;
        for (double delay : list<double>(p, "ir.delay")) {
            ir.delay = delay;
            const auto pulse = PulseSpec::streak(xuv, ir);
            HamiltonianSpec hd = h;
            hd.vector_potential = [pulse](double t) { return field_at(pulse, t).A; };
            const double start = -0.5 * ir.duration + delay;
            const auto rep = propagate(gs[0].state, start, t_fin, tau, hd, dvr, opt);
            StreakRun run;
            run.delay = delay;
            run.ground_energy = gs[0].energy;
            run.xuv_frequency = xuv.frequency;
            run.norm_final = norm(rep.final_state);
            run.warnings = rep.warnings;
            run.samples = rep.samples;
            run.ray = density_ray(dvr, rep.final_state);
            run.plane = density_plane(dvr, rep.final_state);
            for (const auto& d : run.ray)
                if (d.r > rmin && d.density > run.peak_density) {
                    run.peak_density = d.density;
                    run.peak_radius = d.r;
                }
            detail::note(ctx, "streak: t_IR = " + detail::fmt(delay) + ": norm " + detail::fmt(run.norm_final, 15) +
                                  ", peak at r = " + detail::fmt(run.peak_radius) + " (" +
                                  detail::fmt(detail::seconds_since(t0), 3) + " s)");
            for (const auto& w : run.warnings) detail::note(ctx, "streak: warning: " + w);
            out.push_back(std::move(run));
        }
        return out;
    });
}

inline std::vector<Table> tables(const std::vector<StreakRun>& runs) {
    Table sum{"streak", "Pump-probe run summary; the peak is the density maximum along theta = 0 beyond analysis.min_radius",
              {"delay", "ground_energy", "xuv_frequency", "norm_final", "peak_radius", "peak_density", "warnings"},
              {"a.u. time", "hartree", "hartree", "-", "bohr", "bohr^-3", "-"}, {}};
    Table ray{"streak_ray", "Probability density along theta = 0 at t_fin", {"delay", "r", "density"},
              {"a.u. time", "bohr", "bohr^-3"}, {}};
    Table plane{"streak_plane", "Probability density in the y = 0 plane at t_fin", {"delay", "x", "z", "density"},
                {"a.u. time", "bohr", "bohr", "bohr^-3"}, {}};
    Table nrm{"streak_norm", "Norm along the propagation", {"delay", "t", "norm"}, {"a.u. time", "a.u. time", "-"}, {}};
    for (const auto& r : runs) {
        sum.rows.push_back({r.delay, r.ground_energy, r.xuv_frequency, r.norm_final, r.peak_radius, r.peak_density,
                            long(r.warnings.size())});
        for (const auto& d : r.ray) ray.rows.push_back({r.delay, d.r, d.density});
        for (const auto& d : r.plane) plane.rows.push_back({r.delay, d.x, d.z, d.density});
        for (const auto& s : r.samples) nrm.rows.push_back({r.delay, s.t, s.norm});
    }
    return {sum, ray, plane, nrm};
}

// ---------------------------------------------------------------- run

inline std::vector<Table> execute(const RunConfig& cfg, const RunContext& ctx = {}) {
    const auto& p = cfg.params;
    const auto& s = cfg.subcommand;
    if (s == "transform-convergence") return tables(transform_convergence(p, ctx));
    if (s == "basis-compare") return tables(basis_compare(p, ctx));
    if (s == "ftb-bench") return tables(ftb_bench(p, ctx));
    if (s == "eigen") return tables(eigen(p, ctx));
    if (s == "oscillator") return tables(oscillator(p, ctx));
    if (s == "streak") return tables(streak(p, ctx));
    throw ConfigError("unknown subcommand '" + s + "'");
}

inline json manifest(const RunConfig& cfg) {
    json m;
    json sw;
    sw["name"] = "sphbt";
    sw["version"] = version;
    sw["fftw"] = std::string(fftwl_version);
    m["software"] = sw;
    m["subcommand"] = cfg.subcommand;
    m["parameters"] = cfg.params;
    m["serial"] = cfg.serial;
    m["threads"] = thread_count();
    m["out"] = cfg.out_dir.string();
    return m;
}

inline void write_manifest(const RunConfig& cfg, const json& extra) {
    json m = manifest(cfg);
    for (const auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream out(cfg.out_dir / "manifest.json");
    if (!out) throw ConfigError("out: cannot write " + (cfg.out_dir / "manifest.json").string());
    out << m.dump(2) << "\n";
}

/// Runs the scenario and writes its CSV files plus manifest.json into the
/// output directory. Library errors propagate with scenario context.
inline std::vector<std::filesystem::path> run(const RunConfig& cfg, const RunContext& ctx = {}) {
    if (cfg.serial) set_thread_count(1);
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec || !std::filesystem::is_directory(cfg.out_dir))
        throw ConfigError("out: cannot create output directory " + cfg.out_dir.string());
    write_manifest(cfg, {{"status", "running"}});
    std::vector<std::filesystem::path> files;
    try {
        const auto start = std::chrono::steady_clock::now();
        for (const auto& t : execute(cfg, ctx)) {
            files.push_back(cfg.out_dir / (t.name + ".csv"));
            write_csv(files.back(), t, cfg.subcommand);
        }
        json names = json::array();
        for (const auto& f : files) names.push_back(f.filename().string());
        write_manifest(cfg, {{"status", "ok"}, {"outputs", names}, {"wall_seconds", detail::seconds_since(start)}});
    } catch (const Error& e) {
        write_manifest(cfg, {{"status", "failed"}, {"error", e.what()}, {"exit_code", e.exit_code()}});
        throw;
    }
    files.push_back(cfg.out_dir / "manifest.json");
    return files;
}

} // namespace sphbt::cli

#endif
