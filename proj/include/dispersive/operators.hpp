#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dispersive/banded.hpp"
#include "dispersive/catalog.hpp"
#include "dispersive/errors.hpp"
#include "dispersive/order_conditions.hpp"
#include "dispersive/scheme_template.hpp"

namespace dispersive {

/// Periodic samples on N nodes x_j = domain_start + j h.
struct GridFunction {
    std::vector<double> values;
    double h = 1.0;
    double domain_start = 0.0;

    int size() const { return static_cast<int>(values.size()); }
};

/// Nodes plus cell centers x_j + h/2, co-evolved.
struct DualGridFunction {
    std::vector<double> node_values;
    std::vector<double> center_values;
    double h = 1.0;
    double domain_start = 0.0;

    int size() const { return static_cast<int>(node_values.size()); }
};

/// Which kind of point an operator produces values at.
enum class Target { node, center };

/// A lowered compact scheme on a periodic grid of N points per kind.
/// Immutable; the LHS factorization is shared between copies.
class CompactOperator {
public:
    struct CoarseTap {
        int offset;
        double weight;
    };

    CompactOperator(SchemeTemplate tmpl, const RealCoefficients& coeffs, int n, double h,
                    std::string name = {})
        : tmpl_(std::move(tmpl)), coeffs_(coeffs), n_(n), h_(h),
          name_(name.empty() ? tmpl_.name : std::move(name)) {
        validate(tmpl_);
        if (!(h_ > 0.0)) throw ArgumentError("grid spacing must be positive");
        const int need = std::max({8, tmpl_.max_rhs_offset(), tmpl_.max_lhs_offset() + 1});
        if (n_ < need)
            throw ArgumentError(name_ + ": N = " + std::to_string(n_) + " too small, need N >= " +
                                std::to_string(need));
        target_ = tmpl_.center_target ? Target::center : Target::node;

        std::map<int, double> bands;
        for (const auto& t : tmpl_.lhs) {
            double v = t.slot == LhsSlot::unit    ? 1.0
                       : t.slot == LhsSlot::alpha ? coeffs_[Slot::alpha]
                                                  : coeffs_[Slot::beta];
            if (v != 0.0) bands[t.offset / 2] += v;
        }
        lhs_ = std::make_shared<CyclicBandedMatrix>(n_, bands);
        try {
            solver_ = std::make_shared<const CyclicSolver>(*lhs_);
        } catch (const SingularityError& e) {
            throw SingularityError(name_ + ": singular LHS (" + e.what() + ")");
        }

        for (const auto& g : tmpl_.rhs) {
            double s = coeffs_[g.slot];
            if (s == 0.0) continue;
            for (const auto& tap : g.taps) fine_[tap.offset] += s * to_double(tap.weight);
        }
        lower_taps();
    }

    /// The same stencil re-centred on the other kind of point (half shift).
    CompactOperator shifted() const {
        CompactOperator op = *this;
        op.target_ = target_ == Target::node ? Target::center : Target::node;
        op.lower_taps();
        return op;
    }

    const std::string& name() const { return name_; }
    const SchemeTemplate& scheme_template() const { return tmpl_; }
    const RealCoefficients& coefficients() const { return coeffs_; }
    int size() const { return n_; }
    double h() const { return h_; }
    int derivative_order() const { return tmpl_.derivative_order; }
    GridKind grid_kind() const { return tmpl_.grid; }
    Target target() const { return target_; }
    const CyclicBandedMatrix& lhs() const { return *lhs_; }
    const CyclicSolver& solver() const { return *solver_; }
    const std::vector<CoarseTap>& node_taps() const { return node_taps_; }
    const std::vector<CoarseTap>& center_taps() const { return center_taps_; }
    /// Total RHS weight per fine offset (h/2 units), unscaled by h.
    const std::map<int, double>& fine_taps() const { return fine_; }
    bool uses_nodes() const { return !node_taps_.empty(); }
    bool uses_centers() const { return !center_taps_.empty(); }

    /// out = A^{-1} B [nodes; centers]. Spans not used by the stencil may be empty.
    void apply(std::span<const double> nodes, std::span<const double> centers,
               std::span<double> out) const {
        if (uses_nodes() && static_cast<int>(nodes.size()) != n_)
            throw ArgumentError(name_ + ": node input has length " + std::to_string(nodes.size()) +
                                ", expected " + std::to_string(n_));
        if (uses_centers() && static_cast<int>(centers.size()) != n_)
            throw ArgumentError(name_ + ": center input has length " +
                                std::to_string(centers.size()) + ", expected " +
                                std::to_string(n_));
        if (static_cast<int>(out.size()) != n_) throw ArgumentError(name_ + ": output size mismatch");
        std::fill(out.begin(), out.end(), 0.0);
        gather(node_taps_, nodes, out);
        gather(center_taps_, centers, out);
        solver_->solve_in_place(out);
    }

private:
    void lower_taps() {
        node_taps_.clear();
        center_taps_.clear();
        const double scale = 1.0 / std::pow(h_, tmpl_.derivative_order);
        std::map<int, double> nodes, centers;
        for (const auto& [m, w] : fine_) {
            if (w == 0.0) continue;
            bool even = m % 2 == 0;
            if (target_ == Target::node) {
                if (even) nodes[m / 2] += w * scale;
                else centers[(m - 1) / 2] += w * scale;
            } else {
                if (even) centers[m / 2] += w * scale;
                else nodes[(m + 1) / 2] += w * scale;
            }
        }
        for (const auto& [o, w] : nodes) node_taps_.push_back({o, w});
        for (const auto& [o, w] : centers) center_taps_.push_back({o, w});
    }

    void gather(const std::vector<CoarseTap>& taps, std::span<const double> in,
                std::span<double> out) const {
        if (taps.empty()) return;
        const int n = n_;
        for (const auto& tap : taps) {
            const int o = ((tap.offset % n) + n) % n;
            const double w = tap.weight;
            // out[j] += w * in[(j + o) mod n], split to avoid a modulo per point
            for (int j = 0; j < n - o; ++j) out[j] += w * in[j + o];
            for (int j = n - o; j < n; ++j) out[j] += w * in[j + o - n];
        }
    }

    SchemeTemplate tmpl_;
    RealCoefficients coeffs_;
    int n_;
    double h_;
    std::string name_;
    Target target_ = Target::node;
    std::shared_ptr<CyclicBandedMatrix> lhs_;
    std::shared_ptr<const CyclicSolver> solver_;
    std::map<int, double> fine_;
    std::vector<CoarseTap> node_taps_;
    std::vector<CoarseTap> center_taps_;
};

inline CompactOperator build_operator(const SchemeTemplate& t, const SchemeCoefficients& c, int n,
                                      double h) {
    return CompactOperator(t, RealCoefficients::from(c), n, h, c.family);
}

/// Builds from an exact catalogue id. Derivative schemes target nodes, CI targets centers.
inline CompactOperator build_operator(std::string_view id, int n, double h) {
    auto s = builtin_scheme(id);
    if (s.id.method != Method::te)
        throw LookupError("'" + std::string(id) +
                          "' is a spectral-analysis variant without an operator form");
    return CompactOperator(s.tmpl, RealCoefficients::from(s.coeffs), n, h, s.id.text);
}

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ArgumentError(what);
}

inline void check_grid(const CompactOperator& op, int n, double h) {
    require(n == op.size(), op.name() + ": input has N = " + std::to_string(n) +
                                ", operator built for N = " + std::to_string(op.size()));
    require(std::abs(h - op.h()) <= 1e-12 * op.h(), op.name() + ": grid spacing mismatch");
}

}  // namespace detail

inline GridFunction apply_derivative(const CompactOperator& op, const GridFunction& f) {
    detail::require(op.target() == Target::node && !op.uses_centers(),
                    op.name() + " needs center values; pass a DualGridFunction");
    detail::check_grid(op, f.size(), f.h);
    GridFunction out{std::vector<double>(f.size()), f.h, f.domain_start};
    op.apply(f.values, {}, out.values);
    return out;
}

/// Node derivatives of a stencil that reads centers (and possibly nodes).
inline GridFunction apply_derivative(const CompactOperator& op, const DualGridFunction& f) {
    detail::require(op.target() == Target::node, op.name() + " does not target nodes");
    detail::check_grid(op, f.size(), f.h);
    detail::require(static_cast<int>(f.center_values.size()) == f.size(),
                    "dual grid function with unequal node/center counts");
    GridFunction out{std::vector<double>(f.size()), f.h, f.domain_start};
    op.apply(f.node_values, f.center_values, out.values);
    return out;
}

inline GridFunction apply_third_derivative(const CompactOperator& op, const GridFunction& f) {
    detail::require(op.derivative_order() == 3, op.name() + " is not a third-derivative scheme");
    return apply_derivative(op, f);
}

inline GridFunction apply_third_derivative(const CompactOperator& op, const DualGridFunction& f) {
    detail::require(op.derivative_order() == 3, op.name() + " is not a third-derivative scheme");
    return apply_derivative(op, f);
}

inline GridFunction apply_first_derivative(const CompactOperator& op, const GridFunction& f) {
    detail::require(op.derivative_order() == 1, op.name() + " is not a first-derivative scheme");
    return apply_derivative(op, f);
}

inline GridFunction apply_first_derivative(const CompactOperator& op, const DualGridFunction& f) {
    detail::require(op.derivative_order() == 1, op.name() + " is not a first-derivative scheme");
    return apply_derivative(op, f);
}

/// Derivatives at both nodes and centers of a dual field.
inline DualGridFunction apply_derivative_dual(const CompactOperator& op_node,
                                              const CompactOperator& op_center,
                                              const DualGridFunction& f) {
    detail::require(op_node.target() == Target::node && op_center.target() == Target::center,
                    "dual application needs a node-targeted and a center-targeted operator");
    detail::require(op_node.fine_taps() == op_center.fine_taps() &&
                        op_node.derivative_order() == op_center.derivative_order(),
                    "node and center operators come from different coefficients");
    detail::check_grid(op_node, f.size(), f.h);
    detail::check_grid(op_center, f.size(), f.h);
    DualGridFunction out{std::vector<double>(f.size()), std::vector<double>(f.size()), f.h,
                         f.domain_start};
    op_node.apply(f.node_values, f.center_values, out.node_values);
    op_center.apply(f.node_values, f.center_values, out.center_values);
    return out;
}

inline DualGridFunction apply_third_derivative_dual(const CompactOperator& op_node,
                                                    const CompactOperator& op_center,
                                                    const DualGridFunction& f) {
    detail::require(op_node.derivative_order() == 3, "not a third-derivative scheme");
    return apply_derivative_dual(op_node, op_center, f);
}

inline DualGridFunction apply_first_derivative_dual(const CompactOperator& op_node,
                                                    const CompactOperator& op_center,
                                                    const DualGridFunction& f) {
    detail::require(op_node.derivative_order() == 1, "not a first-derivative scheme");
    return apply_derivative_dual(op_node, op_center, f);
}

/// Midpoint values from node values via a CI scheme.
inline GridFunction interpolate_to_centers(const CompactOperator& ci, const GridFunction& f) {
    detail::require(ci.derivative_order() == 0 && ci.target() == Target::center &&
                        !ci.uses_centers(),
                    ci.name() + " is not a node-to-center interpolation scheme");
    detail::check_grid(ci, f.size(), f.h);
    GridFunction out{std::vector<double>(f.size()), f.h, f.domain_start + 0.5 * f.h};
    ci.apply(f.values, {}, out.values);
    return out;
}

// ---------------------------------------------------------------------------
// Low-pass filter
// ---------------------------------------------------------------------------

/// alpha_F fhat_{j-1} + fhat_j + alpha_F fhat_{j+1} = sum_n a_n/2 (f_{j+n} + f_{j-n}).
/// Each a_n is affine in alpha_F: a_n = base_n + slope_n alpha_F, both exact.
struct FilterSpec {
    int half_width = 6;
    double alpha_F = 0.4;
    std::vector<double> a_coeffs;
    std::vector<Rational> base;
    std::vector<Rational> slope;

    int order() const { return 2 * half_width; }
    std::string id() const { return "F" + std::to_string(order()); }

    /// Real transfer function T(w) = sum a_n cos(n w) / (1 + 2 alpha_F cos w).
    double transfer(double omega) const {
        double s = 0.0;
        for (int n = 0; n <= half_width; ++n) s += a_coeffs[n] * std::cos(n * omega);
        return s / (1.0 + 2.0 * alpha_F * std::cos(omega));
    }
};

inline FilterSpec derive_filter(int half_width, double alpha_F) {
    if (!(std::abs(alpha_F) < 0.5)) throw ArgumentError("filter parameter needs |alpha_F| < 0.5");
    if (half_width < 1) throw ArgumentError("filter half width must be >= 1");
    const int m = half_width + 1;
    // rows: Taylor matching at w^0 .. w^{2(N-1)}, then T(pi) = 0
    std::vector<std::vector<Rational>> mat(m, std::vector<Rational>(m));
    std::vector<Rational> rhs_base(m), rhs_slope(m);
    for (int k = 0; k < half_width; ++k) {
        for (int n = 0; n < m; ++n) mat[k][n] = k == 0 ? Rational(1) : detail::rational_power(n, 2 * k);
        rhs_base[k] = k == 0 ? 1 : 0;
        rhs_slope[k] = 2;
    }
    for (int n = 0; n < m; ++n) mat[half_width][n] = n % 2 == 0 ? 1 : -1;
    auto mat2 = mat;
    if (detail::gauss_jordan(mat, rhs_base) >= 0 || detail::gauss_jordan(mat2, rhs_slope) >= 0)
        throw DerivationError("filter system is singular");
    FilterSpec f;
    f.half_width = half_width;
    f.alpha_F = alpha_F;
    f.base = rhs_base;
    f.slope = rhs_slope;
    for (int n = 0; n < m; ++n) f.a_coeffs.push_back(to_double(rhs_base[n]) + to_double(rhs_slope[n]) * alpha_F);
    return f;
}

/// "F8", "F10", "F12", ...
inline FilterSpec derive_filter(std::string_view id, double alpha_F) {
    if (id.size() < 2 || (id[0] != 'F' && id[0] != 'f'))
        throw LookupError("unknown filter id '" + std::string(id) + "'; valid: F8, F10, F12");
    int order = 0;
    try {
        order = std::stoi(std::string(id.substr(1)));
    } catch (const std::exception&) {
        throw LookupError("unknown filter id '" + std::string(id) + "'; valid: F8, F10, F12");
    }
    if (order < 2 || order % 2 != 0)
        throw LookupError("unknown filter id '" + std::string(id) + "'; valid: F8, F10, F12");
    return derive_filter(order / 2, alpha_F);
}

/// Filter bound to a grid size with a cached tridiagonal factorization.
class FilterOperator {
public:
    FilterOperator(FilterSpec spec, int n) : spec_(std::move(spec)), n_(n) {
        if (n_ < 2 * spec_.half_width + 1)
            throw ArgumentError(spec_.id() + ": N = " + std::to_string(n_) + " too small, need N >= " +
                                std::to_string(2 * spec_.half_width + 1));
        solver_ = std::make_shared<const CyclicSolver>(
            CyclicBandedMatrix::symmetric(n_, spec_.alpha_F));
    }

    const FilterSpec& spec() const { return spec_; }
    int size() const { return n_; }

    void apply(std::span<const double> in, std::span<double> out) const {
        if (static_cast<int>(in.size()) != n_ || static_cast<int>(out.size()) != n_)
            throw ArgumentError(spec_.id() + ": size mismatch");
        const auto& a = spec_.a_coeffs;
        for (int j = 0; j < n_; ++j) {
            double s = a[0] * in[j];
            for (int k = 1; k <= spec_.half_width; ++k)
                s += 0.5 * a[k] * (in[(j + k) % n_] + in[(j - k + n_) % n_]);
            out[j] = s;
        }
        solver_->solve_in_place(out);
    }

    void apply_in_place(std::vector<double>& v, std::vector<double>& scratch) const {
        scratch.resize(v.size());
        apply(v, scratch);
        v.swap(scratch);
    }

private:
    FilterSpec spec_;
    int n_;
    std::shared_ptr<const CyclicSolver> solver_;
};

inline GridFunction apply_filter(const FilterSpec& spec, const GridFunction& f) {
    FilterOperator op(spec, f.size());
    GridFunction out{std::vector<double>(f.size()), f.h, f.domain_start};
    op.apply(f.values, out.values);
    return out;
}

/// Filters node and center sequences independently.
inline DualGridFunction apply_filter(const FilterSpec& spec, const DualGridFunction& f) {
    FilterOperator op(spec, f.size());
    DualGridFunction out = f;
    op.apply(f.node_values, out.node_values);
    op.apply(f.center_values, out.center_values);
    return out;
}

}  // namespace dispersive
