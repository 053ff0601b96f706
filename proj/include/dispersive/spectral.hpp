#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dispersive/banded.hpp"
#include "dispersive/catalog.hpp"
#include "dispersive/errors.hpp"
#include "dispersive/order_conditions.hpp"
#include "dispersive/timeint.hpp"

namespace dispersive {

inline constexpr double kPi = std::numbers::pi;

/// Scaled modified wavenumber of a central compact scheme.
///
/// Applied to e^{ikx} a derivative scheme of order d returns
/// i^d psi(w) / h^d e^{ikx} with w = kh; interpolation returns T(w). The
/// symbol is evaluated for w in [0, 2 pi]; values beyond pi are the short
/// waves that a dual grid (spacing h/2) resolves. Near w = 0 a series with
/// exactly cancelled low-order terms is used, so psi - w^d keeps full
/// relative accuracy.
class SchemeSymbol {
public:
    /// The series uses `exact` when given; otherwise the exact images of the doubles.
    SchemeSymbol(const SchemeTemplate& t, const RealCoefficients& c, std::string name = {},
                 const SchemeCoefficients* exact = nullptr)
        : name_(name.empty() ? t.name : std::move(name)), d_(t.derivative_order), grid_(t.grid) {
        validate(t);
        auto slot_value = [&](Slot s) { return exact ? (*exact)[s] : Rational(c[s]); };
        std::map<int, double> fine;
        std::map<int, Rational> fine_exact;
        for (const auto& g : t.rhs) {
            Rational s = slot_value(g.slot);
            for (const auto& tap : g.taps) {
                fine_exact[tap.offset] += s * tap.weight;
                fine[tap.offset] += c[g.slot] * to_double(tap.weight);
            }
        }
        for (const auto& [m, w] : fine)
            if (m > 0) taps_.push_back({m, w});
        if (d_ % 2 == 0)
            for (const auto& [m, w] : fine)
                if (m == 0) taps_.push_back({0, w});
        std::map<int, Rational> lhs_exact;
        for (const auto& term : t.lhs) {
            Rational v = term.slot == LhsSlot::unit    ? Rational(1)
                         : term.slot == LhsSlot::alpha ? slot_value(Slot::alpha)
                                                       : slot_value(Slot::beta);
            lhs_exact[term.offset] += v;
        }
        for (const auto& [m, v] : lhs_exact)
            if (m >= 0) lhs_.push_back({m, to_double(v)});
        build_series(fine_exact, lhs_exact);
    }

    const std::string& name() const { return name_; }
    int derivative_order() const { return d_; }
    GridKind grid() const { return grid_; }

    /// Exact value: w^d (1 for interpolation).
    double exact(double w) const { return std::pow(w, d_); }

    /// LHS symbol sum coef cos(m w / 2).
    double denominator(double w) const {
        if (w < kSeriesLimit) return series(dser_, w);
        double s = 0.0;
        for (const auto& [m, v] : lhs_) s += (m == 0 ? 1.0 : 2.0) * v * std::cos(0.5 * m * w);
        return s;
    }

    /// psi - w^d; NaN where the LHS symbol vanishes.
    double error_or_nan(double w) const {
        if (w == 0.0) return 0.0;
        if (w < kSeriesLimit) {
            double dv = series(dser_, w);
            if (dv == 0.0) return std::numeric_limits<double>::quiet_NaN();
            return series(rser_, w) / dv;
        }
        double dv = denominator(w);
        if (std::abs(dv) < kSingular) return std::numeric_limits<double>::quiet_NaN();
        return numerator(w) / dv - exact(w);
    }

    double psi_or_nan(double w) const {
        if (w == 0.0) return d_ == 0 ? 1.0 : 0.0;
        if (w < kSeriesLimit) return exact(w) + error_or_nan(w);
        double dv = denominator(w);
        if (std::abs(dv) < kSingular) return std::numeric_limits<double>::quiet_NaN();
        return numerator(w) / dv;
    }

    double psi(double w) const {
        double v = psi_or_nan(w);
        if (std::isnan(v)) throw SingularityError(name_ + ": LHS symbol vanishes at w = " +
                                                  std::to_string(w));
        return v;
    }

    double error(double w) const {
        double v = error_or_nan(w);
        if (std::isnan(v)) throw SingularityError(name_ + ": LHS symbol vanishes at w = " +
                                                  std::to_string(w));
        return v;
    }

    /// RHS part sum_m w_m trig(m w / 2) with the sign that makes psi ~ w^d.
    double numerator(double w) const {
        double s = 0.0;
        const double sgn = (d_ / 2) % 2 == 0 ? 1.0 : -1.0;
        for (const auto& [m, v] : taps_) {
            if (d_ % 2 == 1) s += 2.0 * v * std::sin(0.5 * m * w);
            else s += (m == 0 ? 1.0 : 2.0) * v * std::cos(0.5 * m * w);
        }
        return sgn * s;
    }

    /// Series coefficients of psi - w^d numerator: sum_n r_n w^n.
    const std::vector<double>& residual_series() const { return rser_; }

private:
    static constexpr double kSeriesLimit = 0.5;
    static constexpr double kSingular = 1e-14;
    static constexpr int kTerms = 64;

    static double series(const std::vector<double>& c, double w) {
        double s = 0.0;
        for (std::size_t n = c.size(); n-- > 0;) s = s * w + c[n];
        return s;
    }

    void build_series(const std::map<int, Rational>& fine, const std::map<int, Rational>& lhs) {
        std::vector<Rational> num(kTerms + d_ + 1), den(kTerms + 1);
        const int sgn = (d_ / 2) % 2 == 0 ? 1 : -1;
        Rational fact = 1;
        for (int n = 0; n <= kTerms + d_; ++n) {
            if (n > 0) fact *= n;
            // trig expansion: only powers of the stencil parity survive
            if (n % 2 != d_ % 2) continue;
            Rational mom = 0;
            for (const auto& [m, w] : fine) mom += w * detail::rational_power(rat(m, 2), n);
            int alt = (d_ % 2 == 1) ? ((n - 1) / 2) % 2 : (n / 2) % 2;
            num[n] = (alt ? -1 : 1) * sgn * mom / fact;
        }
        fact = 1;
        for (int n = 0; n <= kTerms; ++n) {
            if (n > 0) fact *= n;
            if (n % 2 != 0) continue;
            Rational mom = 0;
            for (const auto& [m, v] : lhs) mom += v * detail::rational_power(rat(m, 2), n);
            den[n] = ((n / 2) % 2 ? -1 : 1) * mom / fact;
        }
        rser_.assign(kTerms + 1, 0.0);
        dser_.assign(kTerms + 1, 0.0);
        for (int n = 0; n <= kTerms; ++n) {
            Rational r = num[n];
            if (n >= d_) r -= den[n - d_];
            rser_[n] = to_double(r);
            dser_[n] = to_double(den[n]);
        }
    }

    std::string name_;
    int d_;
    GridKind grid_;
    std::vector<std::pair<int, double>> taps_;  // m >= 0
    std::vector<std::pair<int, double>> lhs_;   // m >= 0
    std::vector<double> rser_, dser_;
};

// ---------------------------------------------------------------------------
// Least squares coefficient design
// ---------------------------------------------------------------------------

/// Misfit E = int_0^{r pi} (N(w) - w^d D(w))^2 dw, i.e. the psi error weighted by D^2.
struct LsProblem {
    SchemeTemplate tmpl;
    SlotSet free;
    double r = 1.0;
    std::string name;

    static LsProblem from_tag(SchemeTemplate t, const OrderTag& tag, double r = 1.0) {
        LsProblem p;
        p.name = t.name + "-LS-" + tag.str();
        SlotSet z = tag.zeroed();
        for (Slot s : kAllSlots)
            if (t.has_slot(s) && !z.contains(s)) p.free.insert(s);
        p.tmpl = std::move(t);
        p.r = r;
        return p;
    }
};

struct LsResult {
    RealCoefficients coeffs;
    double misfit = 0.0;
};

namespace detail {

/// Basis functions of the residual N - w^d D, affine in the slots:
/// residual = phi_0 + sum_s x_s phi_s.
inline std::array<double, kSlotCount + 1> residual_basis(const SchemeTemplate& t, double w) {
    std::array<double, kSlotCount + 1> phi{};
    const int d = t.derivative_order;
    const double sgn = (d / 2) % 2 == 0 ? 1.0 : -1.0;
    for (const auto& g : t.rhs) {
        double s = 0.0;
        for (const auto& tap : g.taps) {
            double v = to_double(tap.weight);
            s += d % 2 == 1 ? v * std::sin(0.5 * tap.offset * w) : v * std::cos(0.5 * tap.offset * w);
        }
        phi[static_cast<int>(g.slot)] += sgn * s;
    }
    const double wd = std::pow(w, d);
    for (const auto& term : t.lhs) {
        double c = std::cos(0.5 * term.offset * w) * wd;
        switch (term.slot) {
            case LhsSlot::unit: phi[kSlotCount] -= c; break;
            case LhsSlot::alpha: phi[static_cast<int>(Slot::alpha)] -= c; break;
            case LhsSlot::beta: phi[static_cast<int>(Slot::beta)] -= c; break;
        }
    }
    return phi;
}

template <class F>
double gauss_integrate(F&& f, double lo, double hi, int panels = 8) {
    double s = 0.0;
    const double step = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p)
        s += boost::math::quadrature::gauss<double, 30>::integrate(f, lo + p * step,
                                                                   lo + (p + 1) * step);
    return s;
}

}  // namespace detail

inline double ls_misfit(const SchemeTemplate& t, const RealCoefficients& c, double r = 1.0) {
    auto f = [&](double w) {
        auto phi = detail::residual_basis(t, w);
        double res = phi[kSlotCount];
        for (int s = 0; s < kSlotCount; ++s) res += c.values[s] * phi[s];
        return res * res;
    };
    return detail::gauss_integrate(f, 0.0, r * kPi);
}

/// Zero gradient of E in every free RHS slot, plus as many order conditions
/// (lowest first) as there are free LHS slots.
inline LsResult ls_optimize(const LsProblem& p) {
    validate(p.tmpl);
    if (!(p.r > 0.0 && p.r <= 1.0)) throw ArgumentError("LS range r must lie in (0, 1]");
    std::vector<Slot> free = p.free.members();
    std::vector<Slot> rhs_free, lhs_free;
    for (Slot s : free) (is_rhs_slot(s) ? rhs_free : lhs_free).push_back(s);
    if (rhs_free.empty()) throw ArgumentError(p.name + ": no free RHS slot to optimize");
    const int n = static_cast<int>(free.size());

    std::array<std::array<double, kSlotCount + 1>, kSlotCount + 1> gram{};
    for (int i = 0; i <= kSlotCount; ++i)
        for (int j = i; j <= kSlotCount; ++j) {
            auto f = [&](double w) {
                auto phi = detail::residual_basis(p.tmpl, w);
                return phi[i] * phi[j];
            };
            gram[i][j] = gram[j][i] = detail::gauss_integrate(f, 0.0, p.r * kPi);
        }

    std::vector<std::vector<double>> m;
    std::vector<double> rhs;
    for (Slot s : rhs_free) {
        int i = static_cast<int>(s);
        std::vector<double> row;
        for (Slot t : free) row.push_back(gram[i][static_cast<int>(t)]);
        m.push_back(row);
        rhs.push_back(-gram[i][kSlotCount]);
    }
    auto eqs = order_conditions(p.tmpl, 2 * static_cast<int>(lhs_free.size()));
    for (const auto& eq : eqs) {
        std::vector<double> row;
        for (Slot t : free) row.push_back(to_double(eq[t]));
        m.push_back(row);
        rhs.push_back(to_double(eq.rhs));
    }
    if (static_cast<int>(m.size()) != n)
        throw DerivationError(p.name + ": LS system is not square");
    std::vector<double> x;
    try {
        x = dense_oracle_solve(m, rhs);
    } catch (const SingularityError&) {
        throw DerivationError(p.name + ": singular LS normal equations");
    }
    LsResult out;
    for (int k = 0; k < n; ++k) out.coeffs[free[k]] = x[k];
    out.misfit = ls_misfit(p.tmpl, out.coeffs, p.r);
    return out;
}

// ---------------------------------------------------------------------------
// Catalogue resolution for spectral work
// ---------------------------------------------------------------------------

/// A catalogue scheme as seen by Fourier analysis.
struct SpectralScheme {
    SchemeId id;
    SchemeTemplate tmpl;
    RealCoefficients coeffs;
    std::optional<SchemeCoefficients> exact_coeffs;
    std::shared_ptr<const SchemeSymbol> base;
    /// Transfer function that scales the whole symbol (CI composites).
    std::shared_ptr<const SchemeSymbol> transfer;

    const std::string& name() const { return id.text; }
    int derivative_order() const { return base->derivative_order(); }

    double psi_or_nan(double w) const {
        double p = base->psi_or_nan(w);
        return transfer ? transfer->psi_or_nan(w) * p : p;
    }

    double psi(double w) const {
        double v = psi_or_nan(w);
        if (std::isnan(v))
            throw SingularityError(name() + ": LHS symbol vanishes at w = " + std::to_string(w));
        return v;
    }

    /// psi - w^d, accurate for small w.
    double error_or_nan(double w) const {
        double e = base->error_or_nan(w);
        if (!transfer) return e;
        double te = transfer->error_or_nan(w);  // T - 1
        return (1.0 + te) * e + te * base->exact(w);
    }

    double exact(double w) const { return base->exact(w); }

    /// R = psi / w^d (1 at w = 0).
    double relative_factor(double w) const {
        if (w == 0.0) return 1.0;
        return 1.0 + error_or_nan(w) / exact(w);
    }
};

inline SpectralScheme resolve_scheme(std::string_view text) {
    SchemeId id = parse_scheme_id(text);
    SpectralScheme s;
    s.id = id;
    s.tmpl = template_for(id.family, id.variant);
    if (id.method == Method::ls) {
        s.coeffs = ls_optimize(LsProblem::from_tag(s.tmpl, id.tag)).coeffs;
    } else {
        auto b = builtin_scheme(text);
        s.exact_coeffs = b.coeffs;
        s.coeffs = RealCoefficients::from(b.coeffs);
    }
    s.base = std::make_shared<const SchemeSymbol>(
        s.tmpl, s.coeffs, id.text, s.exact_coeffs ? &*s.exact_coeffs : nullptr);
    if (id.method == Method::ci) {
        auto ci = builtin_scheme(kCompositeInterpolation);
        s.transfer = std::make_shared<const SchemeSymbol>(
            ci.tmpl, RealCoefficients::from(ci.coeffs), kCompositeInterpolation, &ci.coeffs);
    }
    return s;
}

inline double modified_wavenumber(std::string_view id, double w) {
    if (w < 0.0 || w > kPi) throw ArgumentError("w must lie in [0, pi]");
    return resolve_scheme(id).psi(w);
}

inline double relative_factor(std::string_view id, double w) {
    if (w < 0.0 || w > kPi) throw ArgumentError("w must lie in [0, pi]");
    return resolve_scheme(id).relative_factor(w);
}

// ---------------------------------------------------------------------------
// Resolving efficiency
// ---------------------------------------------------------------------------

enum class EfficiencyMode {
    /// largest w in (0, pi] with |R(w) - 1| <= eps (tolerated band may have gaps)
    last_crossing,
    /// largest w* with |R - 1| <= eps on all of (0, w*]
    contiguous
};

struct EfficiencyResult {
    double omega_f = 0.0;
    double e = 0.0;
    double eps_t = 0.0;
};

inline EfficiencyResult resolving_efficiency(const SpectralScheme& s, double eps,
                                             EfficiencyMode mode = EfficiencyMode::last_crossing,
                                             int samples = 20000) {
    if (!(eps > 0.0)) throw ArgumentError("tolerance must be positive");
    if (samples < 10000) throw ArgumentError("need at least 1e4 scan samples");
    auto ok = [&](double w) {
        double r = s.relative_factor(w);
        return std::isfinite(r) && std::abs(r - 1.0) <= eps;
    };
    auto at = [&](int i) { return kPi * i / samples; };
    int last_ok = 0;
    if (mode == EfficiencyMode::contiguous) {
        while (last_ok < samples && ok(at(last_ok + 1))) ++last_ok;
    } else {
        for (int i = samples; i >= 1; --i)
            if (ok(at(i))) {
                last_ok = i;
                break;
            }
    }
    double wf;
    if (last_ok == samples) {
        wf = kPi;
    } else {
        double lo = at(last_ok), hi = at(last_ok + 1);
        while (hi - lo > 1e-9) {
            double mid = 0.5 * (lo + hi);
            (ok(mid) ? lo : hi) = mid;
        }
        wf = lo;
    }
    return {wf, wf / kPi, eps};
}

inline EfficiencyResult resolving_efficiency(std::string_view id, double eps,
                                             EfficiencyMode mode = EfficiencyMode::last_crossing) {
    return resolving_efficiency(resolve_scheme(id), eps, mode);
}

/// Row name of the efficiency tables ("TDCCS-TE-2") to its four column ids.
inline std::vector<std::string> expand_table_row(std::string_view row) {
    std::vector<std::string> out;
    for (const char* tag : {"T4", "T6", "T8", "P10"}) out.push_back(std::string(row) + "-" + tag);
    return out;
}

// ---------------------------------------------------------------------------
// Circulant eigenvalues and stability
// ---------------------------------------------------------------------------

/// Eigenvalues of h^d A^{-1} B on the periodic grid, from the DFT of its
/// generating rows. Dual schemes are analysed as one circulant on the fine
/// grid of 2N points; mode m then has w = 2 pi m / N, m = 0..2N-1.
inline std::vector<std::complex<double>> circulant_eigenvalues(const SchemeTemplate& t,
                                                               const RealCoefficients& c, int n) {
    validate(t);
    if (n < std::max(8, t.max_rhs_offset()))
        throw ArgumentError("N = " + std::to_string(n) + " below stencil span");
    std::map<int, double> fine, lhs;
    for (const auto& g : t.rhs)
        for (const auto& tap : g.taps) fine[tap.offset] += c[g.slot] * to_double(tap.weight);
    for (const auto& term : t.lhs)
        lhs[term.offset] += term.slot == LhsSlot::unit    ? 1.0
                            : term.slot == LhsSlot::alpha ? c[Slot::alpha]
                                                          : c[Slot::beta];
    const int modes = t.grid == GridKind::dual ? 2 * n : n;
    std::vector<std::complex<double>> out(modes);
    for (int m = 0; m < modes; ++m) {
        const double w = 2.0 * kPi * m / n;
        std::complex<double> b = 0.0, a = 0.0;
        for (const auto& [off, v] : fine) b += v * std::polar(1.0, 0.5 * off * w);
        for (const auto& [off, v] : lhs) a += v * std::polar(1.0, 0.5 * off * w);
        if (std::abs(a) < 1e-14) throw SingularityError(t.name + ": singular LHS symbol");
        out[m] = b / a;
    }
    return out;
}

inline std::vector<std::complex<double>> circulant_eigenvalues(std::string_view id, int n) {
    auto b = builtin_scheme(id);
    return circulant_eigenvalues(b.tmpl, RealCoefficients::from(b.coeffs), n);
}

struct StabilityReport {
    int n = 0;
    double max_abs = 0.0;
    double max_real = 0.0;
    double intercept = 0.0;
    double cfl = 0.0;  ///< bound on dt / dx^d
};

/// Largest dt/dx^d keeping every scaled eigenvalue inside the TVDRK3 region
/// (imaginary spectrum, so the axis intercept decides).
inline StabilityReport max_stable_timestep(const std::vector<std::complex<double>>& eigs) {
    StabilityReport r;
    r.n = static_cast<int>(eigs.size());
    for (auto z : eigs) {
        r.max_abs = std::max(r.max_abs, std::abs(z));
        r.max_real = std::max(r.max_real, std::abs(z.real()));
    }
    r.intercept = rk3_imaginary_intercept();
    r.cfl = r.max_abs > 0.0 ? r.intercept / r.max_abs : std::numeric_limits<double>::infinity();
    return r;
}

inline StabilityReport max_stable_timestep(std::string_view id, int n) {
    auto r = max_stable_timestep(circulant_eigenvalues(id, n));
    r.n = n;
    return r;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kSymbolCsvHeader = "omega,psi,omega_cubed,R";

/// samples points on [0, pi]; singular points print as nan.
inline void write_symbol_csv(std::ostream& os, const SpectralScheme& s, int samples = 201) {
    if (samples < 2) throw ArgumentError("need at least 2 samples");
    os << kSymbolCsvHeader << "\n";
    os.precision(12);
    for (int i = 0; i < samples; ++i) {
        double w = kPi * i / (samples - 1);
        os << w << "," << s.psi_or_nan(w) << "," << s.exact(w) << "," << s.relative_factor(w)
           << "\n";
    }
}

}  // namespace dispersive
