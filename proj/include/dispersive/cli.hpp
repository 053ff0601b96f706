#pragma once

// Command-line front end. Flags and config-file keys share one namespace:
// every flag --key has a JSON key "key".

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dispersive/catalog.hpp"
#include "dispersive/errors.hpp"
#include "dispersive/kdv.hpp"
#include "dispersive/operators.hpp"
#include "dispersive/spectral.hpp"

namespace dispersive::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kNumerical = 2 };

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> c = {"coeffs",        "spectrum",    "efficiency", "stability",
                                               "filter-analyze", "ls-optimize", "run",        "converge"};
    return c;
}

struct CliConfig {
    std::string command;
    std::string scheme;   ///< catalogue id, or tdcncs/tdccs for run and converge
    std::string schemes;  ///< comma list for efficiency
    std::string format;   ///< csv | json; empty picks the command default
    double eps = 1e-3;
    std::string mode = "last_crossing";
    int samples = 201;
    int N = 0;  ///< 0: command or preset default
    std::string Ns = "20,40,60,80,100";
    std::string example = "linear";
    std::optional<double> c;
    std::optional<double> epsilon;
    std::optional<double> x0;
    std::optional<double> t_final;
    int order = 8;
    std::string dt_rule;  ///< empty: preset default
    std::string filter;   ///< empty: preset default, "off": none
    double r = 1.0;
    std::string snapshots;  ///< comma list of times
    std::string out;        ///< output directory, empty: stdout only
    int threads = 0;
    unsigned seed = 12345;
};

namespace detail {

enum class FieldType { text, integer, unsigned_integer, real, optional_real };

struct Field {
    const char* key;
    FieldType type;
    void* ptr;
    const char* help;
};

inline std::vector<Field> fields(CliConfig& c) {
    using T = FieldType;
    return {
        {"command", T::text, &c.command, "command to run"},
        {"scheme", T::text, &c.scheme, "scheme id (family tdcncs|tdccs for run/converge)"},
        {"schemes", T::text, &c.schemes, "comma separated ids or table rows (efficiency)"},
        {"format", T::text, &c.format, "csv or json"},
        {"eps", T::real, &c.eps, "resolving tolerance"},
        {"mode", T::text, &c.mode, "last_crossing or contiguous"},
        {"samples", T::integer, &c.samples, "curve samples on [0, pi]"},
        {"N", T::integer, &c.N, "grid points"},
        {"Ns", T::text, &c.Ns, "comma separated grid sizes (converge)"},
        {"example", T::text, &c.example, "experiment preset"},
        {"c", T::optional_real, &c.c, "wave number or soliton speed"},
        {"epsilon", T::optional_real, &c.epsilon, "dispersion coefficient"},
        {"x0", T::optional_real, &c.x0, "soliton position"},
        {"t-final", T::optional_real, &c.t_final, "final time"},
        {"order", T::integer, &c.order, "scheme order (4, 6, 8)"},
        {"dt-rule", T::text, &c.dt_rule, "cfl_h3:<c> | half_h2 | h2 | fixed:<dt>"},
        {"filter", T::text, &c.filter, "F12:0.4:20 (id:alpha:every) or off"},
        {"r", T::real, &c.r, "LS range fraction"},
        {"snapshots", T::text, &c.snapshots, "comma separated snapshot times (run)"},
        {"out", T::text, &c.out, "output directory"},
        {"threads", T::integer, &c.threads, "converge worker cap"},
        {"seed", T::unsigned_integer, &c.seed, "seed for randomized checks"},
    };
}

inline nlohmann::json field_to_json(const Field& f) {
    switch (f.type) {
        case FieldType::text: return *static_cast<std::string*>(f.ptr);
        case FieldType::integer: return *static_cast<int*>(f.ptr);
        case FieldType::unsigned_integer: return *static_cast<unsigned*>(f.ptr);
        case FieldType::real: return *static_cast<double*>(f.ptr);
        case FieldType::optional_real: {
            auto& o = *static_cast<std::optional<double>*>(f.ptr);
            return o ? nlohmann::json(*o) : nlohmann::json(nullptr);
        }
    }
    return nullptr;
}

inline void field_from_json(const Field& f, const nlohmann::json& j) {
    auto bad = [&](const char* want) {
        throw ConfigError("config key '" + std::string(f.key) + "' must be " + want + ", got " + j.dump());
    };
    switch (f.type) {
        case FieldType::text:
            if (!j.is_string()) bad("a string");
            *static_cast<std::string*>(f.ptr) = j.get<std::string>();
            break;
        case FieldType::integer:
            if (!j.is_number_integer()) bad("an integer");
            *static_cast<int*>(f.ptr) = j.get<int>();
            break;
        case FieldType::unsigned_integer:
            if (!j.is_number_unsigned()) bad("a non-negative integer");
            *static_cast<unsigned*>(f.ptr) = j.get<unsigned>();
            break;
        case FieldType::real:
            if (!j.is_number()) bad("a number");
            *static_cast<double*>(f.ptr) = j.get<double>();
            break;
        case FieldType::optional_real:
            if (j.is_null())
                static_cast<std::optional<double>*>(f.ptr)->reset();
            else if (j.is_number())
                *static_cast<std::optional<double>*>(f.ptr) = j.get<double>();
            else
                bad("a number or null");
            break;
    }
}

inline double parse_double(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ArgumentError("--" + key + ": '" + s + "' is not a number");
}

inline long long parse_integer(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ArgumentError("--" + key + ": '" + s + "' is not an integer");
}

inline void field_from_flag(const Field& f, const std::string& s) {
    switch (f.type) {
        case FieldType::text: *static_cast<std::string*>(f.ptr) = s; break;
        case FieldType::integer: *static_cast<int*>(f.ptr) = static_cast<int>(parse_integer(f.key, s)); break;
        case FieldType::unsigned_integer: {
            auto v = parse_integer(f.key, s);
            if (v < 0) throw ArgumentError("--" + std::string(f.key) + " must be non-negative");
            *static_cast<unsigned*>(f.ptr) = static_cast<unsigned>(v);
            break;
        }
        case FieldType::real: *static_cast<double*>(f.ptr) = parse_double(f.key, s); break;
        case FieldType::optional_real:
            if (s == "null" || s.empty())
                static_cast<std::optional<double>*>(f.ptr)->reset();
            else
                *static_cast<std::optional<double>*>(f.ptr) = parse_double(f.key, s);
            break;
    }
}

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, sep);) {
        auto b = item.find_first_not_of(" \t");
        auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

}  // namespace detail

inline nlohmann::json config_to_json(const CliConfig& cfg) {
    CliConfig copy = cfg;
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : detail::fields(copy)) j[f.key] = detail::field_to_json(f);
    return j;
}

/// Canonical text form; reloading it reproduces the same bytes.
inline std::string dump_config(const CliConfig& cfg) { return config_to_json(cfg).dump(2) + "\n"; }

inline CliConfig config_from_json(const nlohmann::json& j, CliConfig base = {}) {
    if (!j.is_object()) throw ConfigError("config document must be a JSON object");
    auto fs = detail::fields(base);
    for (const auto& [key, value] : j.items()) {
        auto it = std::find_if(fs.begin(), fs.end(), [&](const detail::Field& f) { return key == f.key; });
        if (it == fs.end()) {
            std::string valid;
            for (const auto& f : fs) valid += std::string(" ") + f.key;
            throw ConfigError("unknown config key '" + key + "'; valid keys:" + valid);
        }
        detail::field_from_json(*it, value);
    }
    return base;
}

/// Parses config text, reporting JSON syntax errors by line and column.
inline CliConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < upto; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                          ": JSON parse error: " + e.what());
    }
    return config_from_json(j);
}

inline CliConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_or(const CliConfig& c, const char* fallback) {
    std::string f = c.format.empty() ? fallback : c.format;
    if (f != "csv" && f != "json") throw ArgumentError("--format must be csv or json");
    return f;
}

inline void require_scheme(const CliConfig& c) {
    if (c.scheme.empty())
        throw ArgumentError(c.command + " needs --scheme; valid ids:\n" + catalogue_listing());
}

inline EfficiencyMode parse_mode(const std::string& m) {
    if (m == "last_crossing") return EfficiencyMode::last_crossing;
    if (m == "contiguous") return EfficiencyMode::contiguous;
    throw ArgumentError("--mode must be last_crossing or contiguous");
}

struct Output {
    std::ostream& out;
    std::filesystem::path dir;

    /// Artifact file under --out, created on demand.
    std::ofstream file(const std::string& name) const {
        std::filesystem::create_directories(dir);
        std::ofstream f(dir / name);
        if (!f) throw ArgumentError("cannot write '" + (dir / name).string() + "'");
        return f;
    }
};

inline constexpr const char* kSlotNames[] = {"a", "b", "c", "alpha", "beta"};

inline int cmd_coeffs(const CliConfig& c, std::ostream& out) {
    require_scheme(c);
    auto fmt = format_or(c, "json");
    SchemeId id = parse_scheme_id(c.scheme);
    if (id.method == Method::ls) {
        auto s = resolve_scheme(c.scheme);
        if (fmt == "json") {
            nlohmann::json j = {{"scheme", id.text}, {"exact", false}};
            for (Slot s2 : kAllSlots) j["decimal"][slot_name(s2)] = s.coeffs[s2];
            out << j.dump(2) << "\n";
        } else {
            out << "slot,num,den,decimal\n";
            out.precision(17);
            for (Slot s2 : kAllSlots) out << slot_name(s2) << ",,," << s.coeffs[s2] << "\n";
        }
        return kOk;
    }
    auto b = builtin_scheme(c.scheme);
    auto lead = leading_truncation_error(b.tmpl, b.coeffs);
    if (fmt == "json") {
        nlohmann::json j = {{"scheme", id.text}, {"family", b.coeffs.family},
                            {"formal_order", b.coeffs.formal_order}, {"exact", true}};
        for (Slot s : kAllSlots) {
            j["coefficients"][slot_name(s)] = rational_to_json(b.coeffs[s]);
            j["decimal"][slot_name(s)] = to_double(b.coeffs[s]);
        }
        j["truncation"] = {{"Q", rational_to_json(lead.constant_Q)},
                           {"Q_decimal", lead.decimal()},
                           {"derivative_index", lead.derivative_index},
                           {"power_of_h", lead.power_of_h}};
        out << j.dump(2) << "\n";
    } else {
        out << "slot,num,den,decimal\n";
        out.precision(17);
        for (Slot s : kAllSlots)
            out << slot_name(s) << "," << numerator_string(b.coeffs[s]) << ","
                << denominator_string(b.coeffs[s]) << "," << to_double(b.coeffs[s]) << "\n";
    }
    return kOk;
}

inline int cmd_spectrum(const CliConfig& c, std::ostream& out) {
    require_scheme(c);
    auto fmt = format_or(c, "csv");
    auto s = resolve_scheme(c.scheme);
    if (fmt == "csv") {
        write_symbol_csv(out, s, c.samples);
        return kOk;
    }
    if (c.samples < 2) throw ArgumentError("need at least 2 samples");
    nlohmann::json j = {{"scheme", s.name()}};
    for (int i = 0; i < c.samples; ++i) {
        double w = kPi * i / (c.samples - 1);
        double p = s.psi_or_nan(w);
        j["omega"].push_back(w);
        j["psi"].push_back(std::isfinite(p) ? nlohmann::json(p) : nlohmann::json(nullptr));
        j["omega_cubed"].push_back(s.exact(w));
        double r = s.relative_factor(w);
        j["R"].push_back(std::isfinite(r) ? nlohmann::json(r) : nlohmann::json(nullptr));
    }
    out << j.dump(2) << "\n";
    return kOk;
}

/// Efficiency rows accept full ids and table row names (expanded to T4..P10).
inline std::vector<std::string> expand_efficiency_ids(const std::string& list) {
    std::vector<std::string> ids;
    for (const auto& item : split(list)) {
        try {
            parse_scheme_id(item);
            ids.push_back(item);
            continue;
        } catch (const LookupError&) {
        }
        auto row = expand_table_row(item);
        for (const auto& r : row) parse_scheme_id(r);  // rethrows with the catalogue
        ids.insert(ids.end(), row.begin(), row.end());
    }
    if (ids.empty()) throw ArgumentError("efficiency needs --schemes; valid ids:\n" + catalogue_listing());
    return ids;
}

inline constexpr const char* kEfficiencyCsvHeader = "scheme,eps_t,omega_f,e";

inline int cmd_efficiency(const CliConfig& c, std::ostream& out) {
    auto fmt = format_or(c, "csv");
    auto mode = parse_mode(c.mode);
    auto ids = expand_efficiency_ids(c.schemes.empty() ? c.scheme : c.schemes);
    nlohmann::json arr = nlohmann::json::array();
    if (fmt == "csv") out << kEfficiencyCsvHeader << "\n";
    for (const auto& id : ids) {
        auto r = resolving_efficiency(resolve_scheme(id), c.eps, mode);
        if (fmt == "csv") {
            std::ostringstream row;
            row << id << "," << c.eps << "," << std::fixed << std::setprecision(4) << r.omega_f << ","
                << std::setprecision(4) << r.e;
            out << row.str() << "\n";
        } else {
            arr.push_back({{"scheme", id}, {"eps_t", c.eps}, {"omega_f", r.omega_f}, {"e", r.e}});
        }
    }
    if (fmt == "json") out << arr.dump(2) << "\n";
    return kOk;
}

inline constexpr const char* kStabilityCsvHeader = "scheme,N,max_abs,max_real,intercept,cfl";
inline constexpr const char* kEigenvalueCsvHeader = "m,re,im";

inline int cmd_stability(const CliConfig& c, const Output& o) {
    require_scheme(c);
    auto fmt = format_or(c, "csv");
    const int n = c.N > 0 ? c.N : 1024;
    auto eigs = circulant_eigenvalues(c.scheme, n);
    auto r = max_stable_timestep(eigs);
    r.n = n;
    if (fmt == "csv") {
        o.out << kStabilityCsvHeader << "\n" << std::setprecision(10) << c.scheme << "," << n << ","
              << r.max_abs << "," << r.max_real << "," << r.intercept << "," << r.cfl << "\n";
    } else {
        o.out << nlohmann::json{{"scheme", c.scheme}, {"N", n},
                                {"max_abs", r.max_abs}, {"max_real", r.max_real},
                                {"intercept", r.intercept}, {"cfl", r.cfl}}
                     .dump(2)
              << "\n";
    }
    if (!o.dir.empty()) {
        auto f = o.file("eigenvalues.csv");
        f << kEigenvalueCsvHeader << "\n" << std::setprecision(15);
        for (std::size_t m = 0; m < eigs.size(); ++m)
            f << m << "," << eigs[m].real() << "," << eigs[m].imag() << "\n";
    }
    return kOk;
}

inline constexpr const char* kFilterCsvHeader = "omega,T";

inline int cmd_filter_analyze(const CliConfig& c, const Output& o) {
    auto fmt = format_or(c, "csv");
    std::string text = c.filter.empty() || c.filter == "off" ? "F12:0.4" : c.filter;
    auto parts = split(text, ':');
    if (parts.empty() || parts.size() > 3) throw ArgumentError("bad --filter '" + text + "'");
    double alpha = parts.size() > 1 ? parse_double("filter", parts[1]) : 0.4;
    auto spec = derive_filter(parts[0], alpha);
    if (c.samples < 2) throw ArgumentError("need at least 2 samples");

    // random-signal check: one application never grows any DFT mode
    const int n = c.N > 0 ? c.N : 64;
    FilterOperator op(spec, n);
    std::mt19937 rng(c.seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(n), w(n);
    for (auto& x : v) x = nd(rng);
    op.apply(v, w);
    double worst = 0.0;
    for (int m = 0; m <= n / 2; ++m) {
        std::complex<double> a = 0, b = 0;
        for (int j = 0; j < n; ++j) {
            auto e = std::polar(1.0, -2.0 * kPi * m * j / n);
            a += v[j] * e;
            b += w[j] * e;
        }
        if (std::abs(a) > 1e-12) worst = std::max(worst, std::abs(b) / std::abs(a));
    }

    if (fmt == "csv") {
        o.out << kFilterCsvHeader << "\n" << std::setprecision(15);
        for (int i = 0; i < c.samples; ++i) {
            double om = kPi * i / (c.samples - 1);
            o.out << om << "," << spec.transfer(om) << "\n";
        }
    } else {
        nlohmann::json j = {{"filter", spec.id()},  {"alpha_F", spec.alpha_F},
                            {"T0", spec.transfer(0.0)}, {"Tpi", spec.transfer(kPi)},
                            {"N", n},               {"seed", c.seed},
                            {"max_mode_gain", worst}};
        for (std::size_t k = 0; k < spec.a_coeffs.size(); ++k) {
            j["a"].push_back(spec.a_coeffs[k]);
            j["a_base"].push_back(rational_to_json(spec.base[k]));
            j["a_slope"].push_back(rational_to_json(spec.slope[k]));
        }
        o.out << j.dump(2) << "\n";
    }
    return kOk;
}

inline int cmd_ls_optimize(const CliConfig& c, std::ostream& out) {
    require_scheme(c);
    auto fmt = format_or(c, "json");
    SchemeId id = parse_scheme_id(c.scheme);
    auto res = ls_optimize(LsProblem::from_tag(template_for(id.family, id.variant), id.tag, c.r));
    if (fmt == "json") {
        nlohmann::json j = {{"scheme", id.text}, {"r", c.r}, {"misfit", res.misfit}};
        for (Slot s : kAllSlots) j["coefficients"][slot_name(s)] = res.coeffs[s];
        out << j.dump(2) << "\n";
    } else {
        out << "slot,value\n" << std::setprecision(17);
        for (Slot s : kAllSlots) out << slot_name(s) << "," << res.coeffs[s] << "\n";
        out << "misfit," << res.misfit << "\n";
    }
    return kOk;
}

inline kdv::PresetParams preset_params(const CliConfig& c) {
    return {c.c, c.epsilon, c.x0, c.t_final};
}

inline kdv::SchemeFamily run_family(const CliConfig& c) {
    return kdv::parse_family(c.scheme.empty() ? "tdcncs" : c.scheme);
}

inline kdv::RunConfig run_config(const CliConfig& c, kdv::SchemeFamily fam) {
    auto defaults = kdv::preset_defaults(c.example);
    kdv::RunConfig rc;
    rc.dt_rule = c.dt_rule.empty() ? defaults.dt_rule : kdv::DtRule::parse(c.dt_rule);
    if (c.filter == "off")
        rc.filter.reset();
    else if (!c.filter.empty())
        rc.filter = kdv::FilterPolicy::parse(c.filter);
    else
        rc.filter = fam == kdv::SchemeFamily::tdcncs ? defaults.filter_tdcncs : defaults.filter_tdccs;
    for (const auto& t : split(c.snapshots)) rc.snapshot_times.push_back(parse_double("snapshots", t));
    return rc;
}

inline nlohmann::json norms_json(const std::optional<kdv::ErrorNorms>& e) {
    if (!e) return nullptr;
    return {{"Linf", e->linf}, {"L1", e->l1}, {"L2", e->l2}};
}

inline nlohmann::json mass_json(const kdv::MassReport& m) {
    nlohmann::json j = {{"node", m.node}};
    j["center"] = m.center ? nlohmann::json(*m.center) : nlohmann::json(nullptr);
    return j;
}

inline int cmd_run(const CliConfig& c, const Output& o) {
    auto fam = run_family(c);
    auto problem = kdv::make_problem(c.example, preset_params(c));
    auto rc = run_config(c, fam);
    const int n = c.N > 0 ? c.N : kdv::preset_defaults(c.example).n;
    auto disc = kdv::make_discretization(fam, c.order, problem, n);
    auto res = kdv::integrate(problem, disc, rc);
    for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

    nlohmann::json j = {{"example", c.example},
                        {"scheme", disc.third_id},
                        {"first_derivative", disc.first_id},
                        {"N", n},
                        {"dt", res.dt},
                        {"dt_rule", rc.dt_rule.str()},
                        {"steps", res.steps},
                        {"t_final", problem.t_final},
                        {"filter", rc.filter ? nlohmann::json(rc.filter->str()) : nlohmann::json(nullptr)},
                        {"errors", norms_json(res.errors)},
                        {"mass_initial", mass_json(res.mass_initial)},
                        {"mass_final", mass_json(res.mass_final)},
                        {"warnings", res.warnings}};
    if (res.errors) j["Linf"] = res.errors->linf;
    o.out << j.dump(2) << "\n";
    if (!o.dir.empty()) {
        auto f = o.file("final.csv");
        kdv::write_snapshot_csv(f, problem, res.final_state);
        for (std::size_t i = 0; i < res.history.size(); ++i) {
            auto g = o.file("snapshot_" + std::to_string(i) + ".csv");
            kdv::write_snapshot_csv(g, problem, res.history[i]);
        }
    }
    return kOk;
}

inline int cmd_converge(const CliConfig& c, const Output& o) {
    auto fam = run_family(c);
    auto problem = kdv::make_problem(c.example, preset_params(c));
    auto rc = run_config(c, fam);
    std::vector<int> ns;
    for (const auto& s : split(c.Ns)) ns.push_back(static_cast<int>(parse_integer("Ns", s)));
    auto fmt = format_or(c, "csv");
    auto rep = kdv::convergence_study(problem, fam, c.order, ns, rc,
                                      c.threads > 0 ? static_cast<unsigned>(c.threads) : 0u);
    if (fmt == "csv")
        kdv::write_convergence_csv(o.out, rep);
    else
        o.out << kdv::convergence_to_json(rep).dump(2) << "\n";
    if (!o.dir.empty()) {
        auto f = o.file("convergence.csv");
        kdv::write_convergence_csv(f, rep);
        auto g = o.file("convergence.json");
        g << kdv::convergence_to_json(rep).dump(2) << "\n";
    }
    return kOk;
}

}  // namespace detail

inline int execute(const CliConfig& c, std::ostream& out) {
    detail::Output o{out, c.out};
    if (c.command == "coeffs") return detail::cmd_coeffs(c, out);
    if (c.command == "spectrum") return detail::cmd_spectrum(c, out);
    if (c.command == "efficiency") return detail::cmd_efficiency(c, out);
    if (c.command == "stability") return detail::cmd_stability(c, o);
    if (c.command == "filter-analyze") return detail::cmd_filter_analyze(c, o);
    if (c.command == "ls-optimize") return detail::cmd_ls_optimize(c, out);
    if (c.command == "run") return detail::cmd_run(c, o);
    if (c.command == "converge") return detail::cmd_converge(c, o);
    std::string valid;
    for (const auto& n : command_names()) valid += " " + n;
    throw ArgumentError("unknown command '" + c.command + "'; valid commands:" + valid);
}

/// Parses argv, merges --config, runs. Never throws.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
    CLI::App app("High-order compact schemes for third derivatives and KdV experiments", "dispersive");
    app.set_version_flag("--version", "1.0.0");
    std::string command, config_path;
    bool dump = false;
    app.add_option("command", command, "coeffs | spectrum | efficiency | stability | filter-analyze | "
                                       "ls-optimize | run | converge");
    app.add_option("--config", config_path, "JSON config file; flags override its values");
    app.add_flag("--dump-config", dump, "print the effective config as JSON and exit");

    CliConfig scratch;
    auto fs = detail::fields(scratch);
    std::vector<std::string> raw(fs.size());
    std::vector<CLI::Option*> opts;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (std::string(fs[i].key) == "command") {
            opts.push_back(nullptr);
            continue;
        }
        opts.push_back(app.add_option("--" + std::string(fs[i].key), raw[i], fs[i].help));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion& e) {
        out << app.version() << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return kUsage;
    }

    try {
        CliConfig cfg = config_path.empty() ? CliConfig{} : load_config(config_path);
        auto target = detail::fields(cfg);
        if (!command.empty()) cfg.command = command;
        for (std::size_t i = 0; i < fs.size(); ++i)
            if (opts[i] && opts[i]->count() > 0) detail::field_from_flag(target[i], raw[i]);
        if (dump) {
            out << dump_config(cfg);
            return kOk;
        }
        if (cfg.command.empty()) {
            err << "error: missing command\n" << app.help();
            return kUsage;
        }
        return execute(cfg, out);
    } catch (const DivergenceError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const SingularityError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const DerivationError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace dispersive::cli
