#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dispersive/errors.hpp"
#include "dispersive/rational.hpp"
#include "dispersive/scheme_template.hpp"

namespace dispersive {

/// sum_s coeff[s] * x_s = rhs, collected from the Taylor term f^(derivative_index) h^power_of_h.
struct LinearEquation {
    std::array<Rational, kSlotCount> coeff{};
    Rational rhs = 0;
    int derivative_index = 0;
    int power_of_h = 0;

    const Rational& operator[](Slot s) const { return coeff[static_cast<int>(s)]; }
    Rational& operator[](Slot s) { return coeff[static_cast<int>(s)]; }
};

/// Exact coefficient tuple. Slots absent from the template are zero.
struct SchemeCoefficients {
    std::array<Rational, kSlotCount> values{};
    std::string family;
    int formal_order = 0;

    const Rational& operator[](Slot s) const { return values[static_cast<int>(s)]; }
    Rational& operator[](Slot s) { return values[static_cast<int>(s)]; }
    const Rational& a() const { return (*this)[Slot::a]; }
    const Rational& b() const { return (*this)[Slot::b]; }
    const Rational& c() const { return (*this)[Slot::c]; }
    const Rational& alpha() const { return (*this)[Slot::alpha]; }
    const Rational& beta() const { return (*this)[Slot::beta]; }
};

/// Coefficients lowered to double precision (also the output of LS fitting).
struct RealCoefficients {
    std::array<double, kSlotCount> values{};

    double operator[](Slot s) const { return values[static_cast<int>(s)]; }
    double& operator[](Slot s) { return values[static_cast<int>(s)]; }

    static RealCoefficients from(const SchemeCoefficients& c) {
        RealCoefficients r;
        for (int s = 0; s < kSlotCount; ++s) r.values[s] = to_double(c.values[s]);
        return r;
    }
};

struct TruncationLead {
    Rational constant_Q;
    int derivative_index = 0;
    int power_of_h = 0;
    double decimal() const { return to_double(constant_Q); }
};

namespace detail {

inline Rational rational_power(const Rational& x, int n) {
    Rational r = 1;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
}

inline Rational factorial(int n) {
    Rational r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

/// Residual row LHS - RHS of the Taylor term h^k f^(d+k), as
/// sum_s coeff[s] x_s + constant.
struct RawRow {
    std::array<Rational, kSlotCount> coeff{};
    Rational constant = 0;
    bool zero() const {
        if (constant != 0) return false;
        for (const auto& c : coeff)
            if (c != 0) return false;
        return true;
    }
};

inline RawRow raw_row(const SchemeTemplate& t, int k) {
    RawRow row;
    const int n = t.derivative_order + k;
    Rational lhs_scale = 1 / factorial(k);
    for (const auto& term : t.lhs) {
        Rational v = rational_power(rat(term.offset, 2), k) * lhs_scale;
        switch (term.slot) {
            case LhsSlot::unit: row.constant += v; break;
            case LhsSlot::alpha: row.coeff[static_cast<int>(Slot::alpha)] += v; break;
            case LhsSlot::beta: row.coeff[static_cast<int>(Slot::beta)] += v; break;
        }
    }
    Rational rhs_scale = 1 / factorial(n);
    for (const auto& g : t.rhs) {
        Rational sum = 0;
        for (const auto& tap : g.taps) sum += tap.weight * rational_power(rat(tap.offset, 2), n);
        row.coeff[static_cast<int>(g.slot)] -= sum * rhs_scale;
    }
    return row;
}

inline Rational evaluate(const RawRow& row, const std::array<Rational, kSlotCount>& x) {
    Rational r = row.constant;
    for (int s = 0; s < kSlotCount; ++s) r += row.coeff[s] * x[s];
    return r;
}

/// Exact Gauss-Jordan elimination. Returns the index of the first row that
/// failed to produce a pivot, or -1 on success (solution left in rhs).
inline int gauss_jordan(std::vector<std::vector<Rational>>& m, std::vector<Rational>& rhs) {
    const int n = static_cast<int>(m.size());
    std::vector<int> origin(n);
    for (int i = 0; i < n; ++i) origin[i] = i;
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (m[r][col] != 0) {
                piv = r;
                break;
            }
        if (piv < 0) return origin[col];
        std::swap(m[piv], m[col]);
        std::swap(rhs[piv], rhs[col]);
        std::swap(origin[piv], origin[col]);
        Rational inv = 1 / m[col][col];
        for (auto& v : m[col]) v *= inv;
        rhs[col] *= inv;
        for (int r = 0; r < n; ++r) {
            if (r == col || m[r][col] == 0) continue;
            Rational f = m[r][col];
            for (int j = col; j < n; ++j) m[r][j] -= f * m[col][j];
            rhs[r] -= f * rhs[col];
        }
    }
    return -1;
}

}  // namespace detail

/// One equation per matched even Taylor power k < max_order. Odd powers are
/// checked to vanish identically. The lowest condition keeps the unit LHS
/// coefficient 1; higher ones are scaled so alpha has coefficient 1 when alpha
/// takes part.
inline std::vector<LinearEquation> order_conditions(const SchemeTemplate& t, int max_order) {
    validate(t);
    if (max_order < 0 || max_order % 2 != 0)
        throw ArgumentError("max_order must be even and non-negative");
    std::vector<LinearEquation> out;
    for (int k = 0; k < max_order; ++k) {
        auto row = detail::raw_row(t, k);
        if (k % 2 == 1) {
            if (!row.zero())
                throw StructuralError(t.name + ": odd Taylor term h^" + std::to_string(k) +
                                      " does not vanish");
            continue;
        }
        LinearEquation eq;
        eq.coeff = row.coeff;
        eq.rhs = -row.constant;
        eq.derivative_index = t.derivative_order + k;
        eq.power_of_h = k;
        if (k > 0 && eq[Slot::alpha] != 0) {
            Rational s = 1 / eq[Slot::alpha];
            for (auto& c : eq.coeff) c *= s;
            eq.rhs *= s;
        }
        out.push_back(std::move(eq));
    }
    return out;
}

/// Evaluates sum coeff*x - rhs; zero means the condition holds.
inline Rational residual(const LinearEquation& eq, const SchemeCoefficients& x) {
    Rational r = -eq.rhs;
    for (int s = 0; s < kSlotCount; ++s) r += eq.coeff[s] * x.values[s];
    return r;
}

/// Solves the square system left after zeroing `zeroed` slots. Slots the
/// template does not use are zero as well.
inline SchemeCoefficients derive_coefficients(const SchemeTemplate& t, SlotSet zeroed,
                                              int target_order, std::string family = {}) {
    auto eqs = order_conditions(t, target_order);
    std::vector<Slot> free;
    for (Slot s : kAllSlots)
        if (t.has_slot(s) && !zeroed.contains(s)) free.push_back(s);
    if (free.size() != eqs.size())
        throw DerivationError(t.name + ": " + std::to_string(free.size()) + " free unknowns but " +
                              std::to_string(eqs.size()) + " order conditions for order " +
                              std::to_string(target_order));
    const int n = static_cast<int>(free.size());
    std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n));
    std::vector<Rational> rhs(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m[i][j] = eqs[i][free[j]];
        rhs[i] = eqs[i].rhs;
    }
    int bad = detail::gauss_jordan(m, rhs);
    if (bad >= 0)
        throw DerivationError(t.name + ": singular order-condition system at Taylor degree f^(" +
                              std::to_string(eqs[bad].derivative_index) + ")");
    SchemeCoefficients out;
    out.family = family.empty() ? t.name : std::move(family);
    out.formal_order = target_order;
    for (int j = 0; j < n; ++j) out[free[j]] = rhs[j];
    return out;
}

/// First non-vanishing LHS - RHS Taylor residual at or above the formal order.
inline TruncationLead leading_truncation_error(const SchemeTemplate& t,
                                               const SchemeCoefficients& coeffs) {
    validate(t);
    constexpr int kMaxPower = 40;
    for (int k = 0; k <= kMaxPower; ++k) {
        Rational r = detail::evaluate(detail::raw_row(t, k), coeffs.values);
        if (r == 0) continue;
        if (k < coeffs.formal_order)
            throw DerivationError(coeffs.family + ": order condition at h^" + std::to_string(k) +
                                  " is violated below the formal order");
        return {r, t.derivative_order + k, k};
    }
    throw DerivationError(coeffs.family + ": no non-vanishing truncation term found");
}

}  // namespace dispersive
