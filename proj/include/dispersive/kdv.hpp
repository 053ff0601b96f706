#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <future>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dispersive/errors.hpp"
#include "dispersive/operators.hpp"
#include "dispersive/spectral.hpp"
#include "dispersive/timeint.hpp"

namespace dispersive::kdv {

// ---------------------------------------------------------------------------
// Problems: u_t + g(u)_x + eps u_xxx = 0, periodic
// ---------------------------------------------------------------------------

enum class FluxKind { zero, minus_three_u_squared, half_u_squared, scaled_half_u_squared };

struct Flux {
    FluxKind kind = FluxKind::zero;
    double scale = 1.0;  ///< a in a u^2 / 2

    double value(double u) const {
        switch (kind) {
            case FluxKind::zero: return 0.0;
            case FluxKind::minus_three_u_squared: return -3.0 * u * u;
            case FluxKind::half_u_squared: return 0.5 * u * u;
            case FluxKind::scaled_half_u_squared: return 0.5 * scale * u * u;
        }
        return 0.0;
    }

    double derivative(double u) const {
        switch (kind) {
            case FluxKind::zero: return 0.0;
            case FluxKind::minus_three_u_squared: return -6.0 * u;
            case FluxKind::half_u_squared: return u;
            case FluxKind::scaled_half_u_squared: return scale * u;
        }
        return 0.0;
    }

    std::string tag() const {
        switch (kind) {
            case FluxKind::zero: return "0";
            case FluxKind::minus_three_u_squared: return "-3u^2";
            case FluxKind::half_u_squared: return "u^2/2";
            case FluxKind::scaled_half_u_squared: return "a*u^2/2";
        }
        return "?";
    }
};

struct KdvProblem {
    std::string name;
    double x_lo = 0.0;
    double x_hi = 1.0;
    Flux g;
    double epsilon = 1.0;
    std::function<double(double)> initial_condition;
    std::function<double(double, double)> exact_solution;  ///< empty when unknown
    double t_final = 1.0;

    double length() const { return x_hi - x_lo; }
    bool has_exact() const { return static_cast<bool>(exact_solution); }
};

/// Optional knobs of make_problem; unset fields take the preset default.
struct PresetParams {
    std::optional<double> c = std::nullopt;
    std::optional<double> epsilon = std::nullopt;
    std::optional<double> x0 = std::nullopt;
    std::optional<double> t_final = std::nullopt;
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"linear",         "soliton",
                                                   "single_soliton", "double_soliton",
                                                   "triple_soliton", "dispersion_limit",
                                                   "tophat"};
    return names;
}

namespace detail {

inline double sech2(double z) {
    double c = std::cosh(z);
    return 1.0 / (c * c);
}

/// Nearest periodic image of z on a domain of length L.
inline double wrap_centered(double z, double L) { return z - L * std::floor(z / L + 0.5); }

}  // namespace detail

inline KdvProblem make_problem(const std::string& preset, const PresetParams& p = {}) {
    using detail::sech2;
    using detail::wrap_centered;
    KdvProblem k;
    k.name = preset;
    if (preset == "linear") {
        double c = p.c.value_or(1.0);
        if (!(c > 0.0)) throw ArgumentError("linear preset needs c > 0");
        k.x_lo = 0.0;
        k.x_hi = 2.0 * std::numbers::pi;
        k.epsilon = p.epsilon.value_or(1.0 / (c * c));
        k.initial_condition = [c](double x) { return std::sin(c * x); };
        k.exact_solution = [c](double x, double t) { return std::sin(c * (x + t)); };
        k.t_final = p.t_final.value_or(1.0);
    } else if (preset == "soliton") {
        k.x_lo = -10.0;
        k.x_hi = 12.0;
        k.g = {FluxKind::minus_three_u_squared};
        k.epsilon = p.epsilon.value_or(1.0);
        const double L = k.length();
        k.initial_condition = [L](double x) { return -2.0 * sech2(wrap_centered(x, L)); };
        k.exact_solution = [L](double x, double t) {
            return -2.0 * sech2(wrap_centered(x - 4.0 * t, L));
        };
        k.t_final = p.t_final.value_or(0.5);
    } else if (preset == "single_soliton") {
        double c = p.c.value_or(0.3), eps = p.epsilon.value_or(5e-4), x0 = p.x0.value_or(0.5);
        if (!(c > 0.0 && eps > 0.0)) throw ArgumentError("single_soliton needs c > 0, eps > 0");
        k.x_lo = 0.0;
        k.x_hi = 2.0;
        k.g = {FluxKind::half_u_squared};
        k.epsilon = eps;
        const double kk = 0.5 * std::sqrt(c / eps), L = k.length();
        k.initial_condition = [=](double x) { return 3.0 * c * sech2(kk * wrap_centered(x - x0, L)); };
        k.exact_solution = [=](double x, double t) {
            return 3.0 * c * sech2(kk * wrap_centered(x - x0 - c * t, L));
        };
        k.t_final = p.t_final.value_or(3.0);
    } else if (preset == "double_soliton") {
        double eps = p.epsilon.value_or(4.84e-4);
        if (!(eps > 0.0)) throw ArgumentError("double_soliton needs eps > 0");
        k.x_lo = 0.0;
        k.x_hi = 2.0;
        k.g = {FluxKind::half_u_squared};
        k.epsilon = eps;
        const double L = k.length();
        k.initial_condition = [=](double x) {
            double s = 0.0;
            for (auto [c, xc] : {std::pair{0.3, 0.4}, std::pair{0.1, 0.8}})
                s += 3.0 * c * sech2(0.5 * std::sqrt(c / eps) * wrap_centered(x - xc, L));
            return s;
        };
        k.t_final = p.t_final.value_or(4.0);
    } else if (preset == "triple_soliton") {
        double eps = p.epsilon.value_or(1e-4);
        if (!(eps > 0.0)) throw ArgumentError("triple_soliton needs eps > 0");
        k.x_lo = 0.0;
        k.x_hi = 3.0;
        k.g = {FluxKind::half_u_squared};
        k.epsilon = eps;
        const double w = std::sqrt(108.0 * eps), L = k.length();
        k.initial_condition = [=](double x) { return 2.0 / 3.0 * sech2(wrap_centered(x - 1.0, L) / w); };
        k.t_final = p.t_final.value_or(4.0);
    } else if (preset == "dispersion_limit") {
        double eps = p.epsilon.value_or(1e-4);
        if (!(eps > 0.0)) throw ArgumentError("dispersion_limit needs eps > 0");
        k.x_lo = 0.0;
        k.x_hi = 1.0;
        k.g = {FluxKind::half_u_squared};
        k.epsilon = eps;
        k.initial_condition = [](double x) { return 2.0 + 0.5 * std::sin(2.0 * std::numbers::pi * x); };
        k.t_final = p.t_final.value_or(0.5);
    } else if (preset == "tophat") {
        double eps = p.epsilon.value_or(1e-4);
        if (!(eps > 0.0)) throw ArgumentError("tophat needs eps > 0");
        k.x_lo = 0.0;
        k.x_hi = 1.0;
        k.g = {FluxKind::half_u_squared};
        k.epsilon = eps;
        k.initial_condition = [](double x) { return x > 0.25 && x < 4.0 ? 1.0 : 0.0; };
        k.t_final = p.t_final.value_or(0.05);
    } else {
        std::string valid;
        for (const auto& n : preset_names()) valid += " " + n;
        throw LookupError("unknown preset '" + preset + "'; valid presets:" + valid);
    }
    return k;
}

// ---------------------------------------------------------------------------
// Discretization
// ---------------------------------------------------------------------------

enum class SchemeFamily { tdcncs, tdccs };

inline SchemeFamily parse_family(std::string s) {
    for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (s == "tdcncs") return SchemeFamily::tdcncs;
    if (s == "tdccs") return SchemeFamily::tdccs;
    throw LookupError("unknown scheme family '" + s + "'; valid: tdcncs, tdccs");
}

inline std::string family_name(SchemeFamily f) { return f == SchemeFamily::tdcncs ? "tdcncs" : "tdccs"; }

/// Third- and first-derivative operators of one family on N points per kind.
/// The node-only family never touches center values.
struct Discretization {
    SchemeFamily family = SchemeFamily::tdcncs;
    int order = 8;
    int n = 0;
    double h = 0.0;
    double x_lo = 0.0;
    std::string third_id, first_id;
    CompactOperator d3_node, d1_node;
    std::optional<CompactOperator> d3_center, d1_center;

    bool dual() const { return family == SchemeFamily::tdccs; }
    /// Flat state length: N, or 2N (nodes then centers).
    int state_size() const { return dual() ? 2 * n : n; }
};

inline Discretization make_discretization(SchemeFamily f, int order, const KdvProblem& p, int n) {
    if (n < 8) throw ArgumentError("N must be at least 8");
    const double h = p.length() / n;
    const std::string tag = "-T" + std::to_string(order);
    std::string third = (f == SchemeFamily::tdcncs ? "TDCNCS" : "TDCCS") + tag;
    std::string first = (f == SchemeFamily::tdcncs ? "CNCS" : "CCS") + tag;
    auto d3 = build_operator(third, n, h);
    auto d1 = build_operator(first, n, h);
    Discretization d{f, order, n, h, p.x_lo, third, first, d3, d1, std::nullopt, std::nullopt};
    if (d.dual()) {
        d.d3_center = d3.shifted();
        d.d1_center = d1.shifted();
    }
    return d;
}

/// Samples u0 on nodes (and directly at x + h/2 on centers, no interpolation).
inline std::vector<double> initial_state(const KdvProblem& p, const Discretization& d) {
    std::vector<double> u(d.state_size());
    for (int j = 0; j < d.n; ++j) {
        u[j] = p.initial_condition(d.x_lo + j * d.h);
        if (d.dual()) u[d.n + j] = p.initial_condition(d.x_lo + (j + 0.5) * d.h);
    }
    return u;
}

/// Method-of-lines right-hand side -D1 g(u) - eps D3 u. Owns scratch space,
/// so one instance per simulation.
class SemidiscreteRhs {
public:
    SemidiscreteRhs(const KdvProblem& p, const Discretization& d)
        : flux_(p.g), eps_(p.epsilon), disc_(d), gu_(d.state_size()), tmp_(d.state_size()) {}

    void operator()(double /*t*/, std::span<const double> u, std::span<double> rate) {
        const int n = disc_.n;
        if (static_cast<int>(u.size()) != disc_.state_size() ||
            static_cast<int>(rate.size()) != disc_.state_size())
            throw ArgumentError("state size does not match the discretization");
        const bool has_flux = flux_.kind != FluxKind::zero;
        if (has_flux)
            for (std::size_t i = 0; i < u.size(); ++i) {
                gu_[i] = flux_.value(u[i]);
                if (!std::isfinite(gu_[i])) throw DivergenceError("non-finite flux value", -1, 0.0);
            }
        auto nodes = u.subspan(0, n);
        std::span<double> r_nodes = rate.subspan(0, n);
        std::span<double> t_nodes(tmp_.data(), n);
        std::span<const double> g_nodes(gu_.data(), n);
        if (!disc_.dual()) {
            disc_.d3_node.apply(nodes, {}, r_nodes);
            if (has_flux) disc_.d1_node.apply(g_nodes, {}, t_nodes);
        } else {
            auto centers = u.subspan(n, n);
            std::span<double> r_centers = rate.subspan(n, n);
            std::span<double> t_centers(tmp_.data() + n, n);
            std::span<const double> g_centers(gu_.data() + n, n);
            disc_.d3_node.apply(nodes, centers, r_nodes);
            disc_.d3_center->apply(nodes, centers, r_centers);
            if (has_flux) {
                disc_.d1_node.apply(g_nodes, g_centers, t_nodes);
                disc_.d1_center->apply(g_nodes, g_centers, t_centers);
            }
        }
        for (std::size_t i = 0; i < rate.size(); ++i)
            rate[i] = -eps_ * rate[i] - (has_flux ? tmp_[i] : 0.0);
    }

private:
    Flux flux_;
    double eps_;
    const Discretization& disc_;
    std::vector<double> gu_, tmp_;
};

inline std::vector<double> semidiscrete_rhs(const KdvProblem& p, const Discretization& d,
                                            std::span<const double> u) {
    SemidiscreteRhs f(p, d);
    std::vector<double> rate(u.size());
    f(0.0, u, rate);
    return rate;
}

// ---------------------------------------------------------------------------
// Run configuration and integration
// ---------------------------------------------------------------------------

struct DtRule {
    enum class Kind { cfl_h3, half_h2, h2, fixed };
    Kind kind = Kind::cfl_h3;
    double value = 0.01;  ///< CFL number for cfl_h3, the step for fixed

    static DtRule cfl_h3(double c) { return {Kind::cfl_h3, c}; }
    static DtRule half_h2() { return {Kind::half_h2, 0.0}; }
    static DtRule h2() { return {Kind::h2, 0.0}; }
    static DtRule fixed(double dt) { return {Kind::fixed, dt}; }

    double nominal(double h) const {
        switch (kind) {
            case Kind::cfl_h3: return value * h * h * h;
            case Kind::half_h2: return 0.5 * h * h;
            case Kind::h2: return h * h;
            case Kind::fixed: return value;
        }
        return value;
    }

    std::string str() const {
        std::ostringstream os;
        switch (kind) {
            case Kind::cfl_h3: os << "cfl_h3:" << value; break;
            case Kind::half_h2: os << "half_h2"; break;
            case Kind::h2: os << "h2"; break;
            case Kind::fixed: os << "fixed:" << value; break;
        }
        return os.str();
    }

    /// "cfl_h3:0.01", "half_h2", "h2", "fixed:1e-4"
    static DtRule parse(const std::string& s) {
        auto colon = s.find(':');
        std::string head = s.substr(0, colon);
        auto number = [&]() {
            if (colon == std::string::npos) throw ArgumentError("dt rule '" + s + "' needs a value");
            try {
                return std::stod(s.substr(colon + 1));
            } catch (const std::exception&) {
                throw ArgumentError("bad number in dt rule '" + s + "'");
            }
        };
        if (head == "cfl_h3") return cfl_h3(number());
        if (head == "fixed") return fixed(number());
        if (head == "half_h2" && colon == std::string::npos) return half_h2();
        if (head == "h2" && colon == std::string::npos) return h2();
        throw ArgumentError("unknown dt rule '" + s + "'; valid: cfl_h3:<c>, half_h2, h2, fixed:<dt>");
    }
};

struct FilterPolicy {
    std::string id = "F12";
    double alpha = 0.4;
    int every = 10;

    std::string str() const {
        std::ostringstream os;
        os << id << ":" << alpha << ":" << every;
        return os.str();
    }

    /// "F12:0.4:20"; alpha and cadence optional (0.4, 1).
    static FilterPolicy parse(const std::string& s) {
        FilterPolicy f;
        std::vector<std::string> parts;
        std::stringstream ss(s);
        for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
        if (parts.empty() || parts.size() > 3) throw ArgumentError("bad filter spec '" + s + "'");
        f.id = parts[0];
        try {
            f.alpha = parts.size() > 1 ? std::stod(parts[1]) : 0.4;
            f.every = parts.size() > 2 ? std::stoi(parts[2]) : 1;
        } catch (const std::exception&) {
            throw ArgumentError("bad number in filter spec '" + s + "'");
        }
        if (f.every < 1) throw ArgumentError("filter cadence must be >= 1");
        derive_filter(f.id, f.alpha);  // validates id and alpha
        return f;
    }
};

struct RunConfig {
    DtRule dt_rule;
    std::optional<FilterPolicy> filter;
    std::vector<double> snapshot_times;  ///< recorded at the first step reaching each time
    bool record_history = false;         ///< keep every snapshot_every-th step
    int snapshot_every = 0;
};

/// Per-example defaults matching the experiment descriptions.
struct PresetDefaults {
    int n = 40;
    DtRule dt_rule;
    std::optional<FilterPolicy> filter_tdcncs, filter_tdccs;
};

inline PresetDefaults preset_defaults(const std::string& preset) {
    PresetDefaults d;
    if (preset == "linear" || preset == "soliton") {
        d.n = 40;
        d.dt_rule = DtRule::cfl_h3(0.01);
    } else if (preset == "single_soliton") {
        d.n = 80;
        d.dt_rule = DtRule::fixed(1e-4);
    } else if (preset == "double_soliton") {
        d.n = 100;
        d.dt_rule = DtRule::fixed(1e-4);
    } else if (preset == "triple_soliton") {
        d.n = 150;
        d.dt_rule = DtRule::half_h2();
        d.filter_tdcncs = FilterPolicy{"F12", 0.4, 20};
        d.filter_tdccs = FilterPolicy{"F12", 0.4, 50};
    } else if (preset == "dispersion_limit") {
        d.n = 100;
        d.dt_rule = DtRule::h2();
    } else if (preset == "tophat") {
        d.n = 1000;
        d.dt_rule = DtRule::half_h2();
        d.filter_tdcncs = d.filter_tdccs = FilterPolicy{"F12", 0.4, 10};
    } else {
        make_problem(preset);  // throws with the preset list
    }
    return d;
}

struct ErrorNorms {
    double linf = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
};

/// Max, mean absolute and root-mean-square difference over however many
/// samples are passed (N + 1 closed-grid samples in the experiments).
inline ErrorNorms error_norms(std::span<const double> numeric, std::span<const double> exact) {
    if (numeric.size() != exact.size() || numeric.empty())
        throw ArgumentError("error_norms: length mismatch");
    ErrorNorms e;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        double d = std::abs(numeric[i] - exact[i]);
        e.linf = std::max(e.linf, d);
        e.l1 += d;
        e.l2 += d * d;
    }
    e.l1 /= static_cast<double>(numeric.size());
    e.l2 = std::sqrt(e.l2 / static_cast<double>(numeric.size()));
    return e;
}

inline ErrorNorms error_norms(const GridFunction& numeric, const GridFunction& exact) {
    return error_norms(numeric.values, exact.values);
}

struct MassReport {
    double node = 0.0;
    std::optional<double> center;
};

inline MassReport conserved_mass(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return {f.h * s, std::nullopt};
}

inline MassReport conserved_mass(const DualGridFunction& f) {
    double s = 0.0, c = 0.0;
    for (double v : f.node_values) s += v;
    for (double v : f.center_values) c += v;
    return {f.h * s, f.h * c};
}

struct Snapshot {
    double time = 0.0;
    long step = 0;
    std::vector<double> nodes;
    std::vector<double> centers;  ///< empty for node-only runs
};

struct IntegrationResult {
    Snapshot final_state;
    long steps = 0;
    double dt = 0.0;
    double dt_bound_dispersive = std::numeric_limits<double>::infinity();
    double dt_bound_convective = std::numeric_limits<double>::infinity();
    std::optional<ErrorNorms> errors;
    MassReport mass_initial, mass_final;
    std::vector<std::string> warnings;
    std::vector<Snapshot> history;
};

namespace detail {

inline Snapshot make_snapshot(const Discretization& d, const StageState& s, long step) {
    Snapshot snap{s.time, step, {}, {}};
    snap.nodes.assign(s.values.begin(), s.values.begin() + d.n);
    if (d.dual()) snap.centers.assign(s.values.begin() + d.n, s.values.end());
    return snap;
}

inline MassReport mass_of(const Discretization& d, const std::vector<double>& u) {
    MassReport m;
    double s = 0.0;
    for (int j = 0; j < d.n; ++j) s += u[j];
    m.node = d.h * s;
    if (d.dual()) {
        double c = 0.0;
        for (int j = 0; j < d.n; ++j) c += u[d.n + j];
        m.center = d.h * c;
    }
    return m;
}

}  // namespace detail

/// N + 1 closed-grid node coordinates x_lo .. x_hi.
inline std::vector<double> closed_grid(const KdvProblem& p, int n) {
    std::vector<double> x(n + 1);
    const double h = p.length() / n;
    for (int j = 0; j < n; ++j) x[j] = p.x_lo + j * h;
    x[n] = p.x_hi;
    return x;
}

/// Node values with the periodic endpoint repeated.
inline std::vector<double> closed_values(std::span<const double> nodes) {
    std::vector<double> v(nodes.begin(), nodes.end());
    v.push_back(nodes.front());
    return v;
}

inline ErrorNorms snapshot_errors(const KdvProblem& p, const Snapshot& s) {
    const int n = static_cast<int>(s.nodes.size());
    auto x = closed_grid(p, n);
    std::vector<double> exact(n + 1);
    for (int j = 0; j <= n; ++j) exact[j] = p.exact_solution(x[j], s.time);
    return error_norms(closed_values(s.nodes), exact);
}

/// Stable step estimates: dispersive sqrt(3) h^3 / (|eps| max|lambda|) and
/// convective 0.5 h / max|g'(u0)|.
inline std::pair<double, double> step_bounds(const KdvProblem& p, const Discretization& d,
                                             std::span<const double> u0) {
    double disp = std::numeric_limits<double>::infinity();
    if (p.epsilon != 0.0) {
        auto r = max_stable_timestep(circulant_eigenvalues(d.d3_node.scheme_template(),
                                                           d.d3_node.coefficients(), d.n));
        disp = r.cfl * d.h * d.h * d.h / std::abs(p.epsilon);
    }
    double conv = std::numeric_limits<double>::infinity();
    double gmax = 0.0;
    for (double u : u0) gmax = std::max(gmax, std::abs(p.g.derivative(u)));
    if (gmax > 0.0) conv = 0.5 * d.h / gmax;
    return {disp, conv};
}

inline IntegrationResult integrate(const KdvProblem& p, const Discretization& d,
                                   const RunConfig& cfg) {
    IntegrationResult res;
    StageState state{initial_state(p, d), 0.0};
    res.mass_initial = detail::mass_of(d, state.values);

    long steps = 0;
    double dt = 0.0;
    if (p.t_final > 0.0) {
        double nominal = cfg.dt_rule.nominal(d.h);
        if (!(nominal > 0.0)) throw ArgumentError("time step rule gives a non-positive step");
        steps = static_cast<long>(std::ceil(p.t_final / nominal - 1e-9));
        steps = std::max(steps, 1L);
        dt = p.t_final / static_cast<double>(steps);
    } else if (p.t_final < 0.0) {
        throw ArgumentError("t_final must be non-negative");
    }
    res.steps = steps;
    res.dt = dt;

    std::tie(res.dt_bound_dispersive, res.dt_bound_convective) = step_bounds(p, d, state.values);
    if (steps > 0) {
        if (dt > res.dt_bound_dispersive) {
            std::ostringstream os;
            os << "dt = " << dt << " exceeds the dispersive stability estimate "
               << res.dt_bound_dispersive;
            res.warnings.push_back(os.str());
        }
        if (dt > res.dt_bound_convective) {
            std::ostringstream os;
            os << "dt = " << dt << " exceeds the convective estimate " << res.dt_bound_convective;
            res.warnings.push_back(os.str());
        }
    }

    std::optional<FilterOperator> filter;
    if (cfg.filter) {
        if (cfg.filter->every < 1) throw ArgumentError("filter cadence must be >= 1");
        filter.emplace(derive_filter(cfg.filter->id, cfg.filter->alpha), d.n);
    }
    std::vector<double> fbuf(d.n);
    auto apply_filter_to = [&](std::vector<double>& u) {
        for (int part = 0; part < (d.dual() ? 2 : 1); ++part) {
            std::span<double> seq(u.data() + part * d.n, d.n);
            filter->apply(seq, fbuf);
            std::copy(fbuf.begin(), fbuf.end(), seq.begin());
        }
    };

    SemidiscreteRhs rhs(p, d);
    RhsFunction f = [&rhs](double t, std::span<const double> u, std::span<double> r) { rhs(t, u, r); };
    Tvdrk3 rk;
    std::vector<double> pending = cfg.snapshot_times;
    std::sort(pending.begin(), pending.end());
    std::size_t next_snap = 0;
    auto take_snapshots = [&](long step) {
        while (next_snap < pending.size() && state.time >= pending[next_snap] - 1e-12) {
            res.history.push_back(detail::make_snapshot(d, state, step));
            ++next_snap;
        }
        if (cfg.record_history && cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0)
            res.history.push_back(detail::make_snapshot(d, state, step));
    };
    take_snapshots(0);
    try {
        for (long s = 1; s <= steps; ++s) {
            rk.step(state, f, dt, s);
            if (filter && s % cfg.filter->every == 0) apply_filter_to(state.values);
            if (s == steps) state.time = p.t_final;  // remove accumulated round-off
            take_snapshots(s);
        }
    } catch (const DivergenceError& e) {
        std::string msg = p.name + ": " + e.what();
        for (const auto& w : res.warnings) msg += "; " + w;
        throw DivergenceError(msg, e.step(), e.time());
    }
    res.final_state = detail::make_snapshot(d, state, steps);
    res.mass_final = detail::mass_of(d, state.values);
    if (p.has_exact()) res.errors = snapshot_errors(p, res.final_state);
    return res;
}

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    int n = 0;
    ErrorNorms err;
    std::optional<double> rate_inf, rate_1, rate_2;
};

struct ConvergenceReport {
    std::string scheme;
    std::string problem;
    std::vector<ConvergenceRow> rows;
};

/// Worker cap from DISPERSIVE_COMPACT_THREADS, else the hardware count.
inline unsigned convergence_threads() {
    if (const char* env = std::getenv("DISPERSIVE_COMPACT_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

inline ConvergenceReport convergence_study(const KdvProblem& p, SchemeFamily family, int order,
                                           const std::vector<int>& ns, const RunConfig& cfg,
                                           unsigned threads = 0) {
    if (!p.has_exact()) throw ArgumentError(p.name + ": no exact solution for a convergence study");
    if (ns.empty()) throw ArgumentError("convergence study needs at least one N");
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (ns[i] <= ns[i - 1]) throw ArgumentError("N values must be strictly increasing");
    if (threads == 0) threads = convergence_threads();

    std::counting_semaphore<> slots(static_cast<std::ptrdiff_t>(std::max(1u, threads)));
    std::vector<std::future<ErrorNorms>> jobs;
    for (int n : ns) {
        jobs.push_back(std::async(std::launch::async, [&, n]() {
            slots.acquire();
            struct Release {
                std::counting_semaphore<>& s;
                ~Release() { s.release(); }
            } guard{slots};
            auto d = make_discretization(family, order, p, n);
            return *integrate(p, d, cfg).errors;
        }));
    }
    ConvergenceReport rep;
    rep.scheme = (family == SchemeFamily::tdcncs ? "TDCNCS-T" : "TDCCS-T") + std::to_string(order);
    rep.problem = p.name;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        ConvergenceRow row{ns[i], jobs[i].get(), {}, {}, {}};
        if (i > 0) {
            const auto& prev = rep.rows.back();
            double lr = std::log(static_cast<double>(ns[i]) / ns[i - 1]);
            row.rate_inf = std::log(prev.err.linf / row.err.linf) / lr;
            row.rate_1 = std::log(prev.err.l1 / row.err.l1) / lr;
            row.rate_2 = std::log(prev.err.l2 / row.err.l2) / lr;
        }
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr const char* kSnapshotCsvHeader = "x,u_numeric,u_exact,abs_error";
inline constexpr const char* kConvergenceCsvHeader = "N,Linf,L1,L2,rate_inf,rate_1,rate_2";

/// Node values on the closed grid (periodic endpoint repeated).
inline void write_snapshot_csv(std::ostream& os, const KdvProblem& p, const Snapshot& s) {
    const int n = static_cast<int>(s.nodes.size());
    auto x = closed_grid(p, n);
    auto u = closed_values(s.nodes);
    os << kSnapshotCsvHeader << "\n" << std::setprecision(15);
    for (int j = 0; j <= n; ++j) {
        os << x[j] << "," << u[j] << ",";
        if (p.has_exact()) {
            double e = p.exact_solution(x[j], s.time);
            os << e << "," << std::abs(u[j] - e);
        } else {
            os << ",";
        }
        os << "\n";
    }
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
    os << kConvergenceCsvHeader << "\n" << std::setprecision(6);
    auto opt = [&](const std::optional<double>& v) {
        if (v) os << *v;
    };
    for (const auto& row : r.rows) {
        os << row.n << "," << std::scientific << row.err.linf << "," << row.err.l1 << ","
           << row.err.l2 << "," << std::fixed << std::setprecision(4);
        opt(row.rate_inf);
        os << ",";
        opt(row.rate_1);
        os << ",";
        opt(row.rate_2);
        os << "\n" << std::defaultfloat << std::setprecision(6);
    }
}

inline nlohmann::json convergence_to_json(const ConvergenceReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json j = {{"N", row.n}, {"Linf", row.err.linf}, {"L1", row.err.l1}, {"L2", row.err.l2}};
        j["rate_inf"] = row.rate_inf ? nlohmann::json(*row.rate_inf) : nlohmann::json(nullptr);
        j["rate_1"] = row.rate_1 ? nlohmann::json(*row.rate_1) : nlohmann::json(nullptr);
        j["rate_2"] = row.rate_2 ? nlohmann::json(*row.rate_2) : nlohmann::json(nullptr);
        rows.push_back(j);
    }
    return {{"scheme", r.scheme}, {"problem", r.problem}, {"rows", rows}};
}

}  // namespace dispersive::kdv
