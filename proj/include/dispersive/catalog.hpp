#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dispersive/errors.hpp"
#include "dispersive/order_conditions.hpp"
#include "dispersive/rational.hpp"
#include "dispersive/scheme_template.hpp"

namespace dispersive {

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

namespace templates {

inline std::vector<LhsTerm> pentadiagonal_lhs() {
    return {{-4, LhsSlot::beta}, {-2, LhsSlot::alpha}, {0, LhsSlot::unit},
            {2, LhsSlot::alpha}, {4, LhsSlot::beta}};
}

/// Antisymmetric pair list {(m, w)} -> taps at +-m with weights +-w.
inline RhsGroup odd_group(Slot slot, std::initializer_list<std::pair<int, Rational>> halves) {
    RhsGroup g{slot, {}};
    for (const auto& [m, w] : halves) {
        g.taps.push_back({m, w});
        g.taps.push_back({-m, -w});
    }
    return g;
}

inline RhsGroup even_group(Slot slot, std::initializer_list<std::pair<int, Rational>> halves) {
    RhsGroup g{slot, {}};
    for (const auto& [m, w] : halves) {
        g.taps.push_back({m, w});
        g.taps.push_back({-m, w});
    }
    return g;
}

/// Node-only third derivative.
inline SchemeTemplate tdcncs() {
    return {"TDCNCS",
            3,
            pentadiagonal_lhs(),
            {odd_group(Slot::a, {{4, rat(1, 2)}, {2, rat(-1)}}),
             odd_group(Slot::b, {{6, rat(1, 8)}, {2, rat(-3, 8)}}),
             odd_group(Slot::c, {{8, rat(1, 20)}, {2, rat(-4, 20)}})},
            GridKind::node_only};
}

/// Third derivative at nodes from cell-center values only.
inline SchemeTemplate tdcccs() {
    return {"TDCCCS",
            3,
            pentadiagonal_lhs(),
            {odd_group(Slot::a, {{3, rat(1)}, {1, rat(-3)}}),
             odd_group(Slot::b, {{5, rat(1, 5)}, {1, rat(-1)}}),
             odd_group(Slot::c, {{7, rat(1, 14)}, {1, rat(-1, 2)}})},
            GridKind::center_only};
}

/// Dual-grid central scheme; `variant` 0 is the main stencil, 1..3 the
/// alternative tap combinations.
inline SchemeTemplate tdccs(int variant = 0) {
    RhsGroup a = odd_group(Slot::a, {{2, rat(4)}, {1, rat(-8)}});
    RhsGroup b = odd_group(Slot::b, {{3, rat(8, 5)}, {2, rat(-12, 5)}});
    RhsGroup c = odd_group(Slot::c, {{5, rat(8, 35)}, {2, rat(-20, 35)}});
    RhsGroup b_alt = odd_group(Slot::b, {{4, rat(6, 7)}, {3, rat(-8, 7)}});
    RhsGroup c_alt = odd_group(Slot::c, {{5, rat(8, 15)}, {4, rat(-10, 15)}});
    std::string name = "TDCCS";
    switch (variant) {
        case 0: break;
        case 1: c = c_alt; break;
        case 2: b = b_alt; c = c_alt; break;
        case 3: b = b_alt; break;
        default: throw LookupError("TDCCS variant must be 0..3, got " + std::to_string(variant));
    }
    if (variant) name += "-" + std::to_string(variant);
    return {name, 3, pentadiagonal_lhs(), {a, b, c}, GridKind::dual};
}

/// Midpoint interpolation from nodes; the target is a cell center.
inline SchemeTemplate ci() {
    SchemeTemplate t{"CI",
                     0,
                     pentadiagonal_lhs(),
                     {even_group(Slot::a, {{1, rat(1, 2)}}), even_group(Slot::b, {{3, rat(1, 2)}}),
                      even_group(Slot::c, {{5, rat(1, 2)}})},
                     GridKind::center_only};
    t.center_target = true;
    return t;
}

/// First derivative on nodes, tridiagonal LHS.
inline SchemeTemplate cncs() {
    return {"CNCS",
            1,
            {{-2, LhsSlot::alpha}, {0, LhsSlot::unit}, {2, LhsSlot::alpha}},
            {odd_group(Slot::a, {{2, rat(1, 2)}}), odd_group(Slot::b, {{4, rat(1, 4)}}),
             odd_group(Slot::c, {{6, rat(1, 6)}})},
            GridKind::node_only};
}

/// First derivative using nodes and centers, tridiagonal LHS.
inline SchemeTemplate ccs() {
    return {"CCS",
            1,
            {{-2, LhsSlot::alpha}, {0, LhsSlot::unit}, {2, LhsSlot::alpha}},
            {odd_group(Slot::a, {{1, rat(1)}}), odd_group(Slot::b, {{2, rat(1, 2)}}),
             odd_group(Slot::c, {{3, rat(1, 3)}})},
            GridKind::dual};
}

}  // namespace templates

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

/// Order tag such as "T8": E = explicit, T = tridiagonal, P = pentadiagonal.
struct OrderTag {
    char kind = 'T';
    int order = 8;

    std::string str() const { return std::string(1, kind) + std::to_string(order); }

    /// Slots forced to zero. The remaining unknown count equals order/2.
    SlotSet zeroed() const {
        SlotSet z;
        int rhs_free = 0;
        switch (kind) {
            case 'E': rhs_free = order / 2; z.insert(Slot::alpha); z.insert(Slot::beta); break;
            case 'T': rhs_free = order / 2 - 1; z.insert(Slot::beta); break;
            case 'P': rhs_free = order / 2 - 2; break;
        }
        if (rhs_free < 2) z.insert(Slot::b);
        if (rhs_free < 3) z.insert(Slot::c);
        return z;
    }
};

inline std::optional<OrderTag> parse_order_tag(std::string_view s) {
    static const std::map<std::string, OrderTag, std::less<>> tags = {
        {"E2", {'E', 2}}, {"E4", {'E', 4}},  {"E6", {'E', 6}}, {"T4", {'T', 4}}, {"T6", {'T', 6}},
        {"T8", {'T', 8}}, {"P6", {'P', 6}}, {"P8", {'P', 8}}, {"P10", {'P', 10}}};
    auto it = tags.find(s);
    if (it == tags.end()) return std::nullopt;
    return it->second;
}

enum class Family { tdcncs, tdcccs, tdccs, ci, cncs, ccs };

/// How the coefficients of a catalogue entry are obtained.
enum class Method {
    te,  ///< truncated Taylor expansion (exact rationals)
    ls,  ///< least-squares optimized (real)
    ci   ///< TE coefficients with the symbol scaled by the CI-P10 transfer function
};

struct SchemeId {
    Family family = Family::tdcncs;
    Method method = Method::te;
    int variant = 0;
    OrderTag tag;
    std::string text;  ///< canonical identifier
};

inline SchemeTemplate template_for(Family f, int variant = 0) {
    switch (f) {
        case Family::tdcncs: return templates::tdcncs();
        case Family::tdcccs: return templates::tdcccs();
        case Family::tdccs: return templates::tdccs(variant);
        case Family::ci: return templates::ci();
        case Family::cncs: return templates::cncs();
        case Family::ccs: return templates::ccs();
    }
    throw LookupError("unknown family");
}

inline const std::vector<std::string>& catalogue_patterns() {
    static const std::vector<std::string> p = {
        "TDCNCS-{E2,E4,E6,T4,T6,T8,P6,P8,P10}",
        "TDCCCS-{E2,E4,E6,T4,T6,T8,P6,P8,P10}",
        "TDCCCS-CI-{T4,T6,T8,P10}",
        "CI-{E2,E4,E6,T4,T6,T8,P6,P8,P10}",
        "TDCCS-{E4,E6,T4,T6,T8,P6,P8,P10} (alias TDCCS-TE-...)",
        "TDCCS-LS-{T4,T6,T8,P10}",
        "TDCCS-CI-{T4,T6,T8,P10}",
        "TDCCS-{TE,LS,CI}-1-<tag>, TDCCS-TE-{2,3}-<tag>",
        "CNCS-{T4,T6,T8}, CCS-{T4,T6,T8}"};
    return p;
}

inline std::string catalogue_listing() {
    std::string s;
    for (const auto& p : catalogue_patterns()) s += "  " + p + "\n";
    return s;
}

[[noreturn]] inline void unknown_scheme(std::string_view id) {
    throw LookupError("unknown scheme id '" + std::string(id) + "'; valid ids:\n" +
                      catalogue_listing());
}

inline SchemeId parse_scheme_id(std::string_view id) {
    std::vector<std::string> parts;
    {
        std::string cur;
        for (char ch : id) {
            if (ch == '-') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            }
        }
        parts.push_back(cur);
    }
    if (parts.size() < 2) unknown_scheme(id);
    auto tag = parse_order_tag(parts.back());
    if (!tag) unknown_scheme(id);

    SchemeId out;
    out.tag = *tag;
    const std::string& head = parts.front();
    std::vector<std::string> mid(parts.begin() + 1, parts.end() - 1);
    bool ls_tag = tag->str() == "T4" || tag->str() == "T6" || tag->str() == "T8" ||
                  tag->str() == "P10";

    if (head == "TDCNCS" || head == "CI" || head == "CNCS" || head == "CCS") {
        if (!mid.empty()) unknown_scheme(id);
        out.family = head == "TDCNCS" ? Family::tdcncs
                     : head == "CI"   ? Family::ci
                     : head == "CNCS" ? Family::cncs
                                      : Family::ccs;
        if ((out.family == Family::cncs || out.family == Family::ccs) && tag->kind != 'T')
            unknown_scheme(id);
    } else if (head == "TDCCCS") {
        out.family = Family::tdcccs;
        if (mid.size() == 1 && mid[0] == "CI" && ls_tag)
            out.method = Method::ci;
        else if (!mid.empty())
            unknown_scheme(id);
    } else if (head == "TDCCS") {
        out.family = Family::tdccs;
        std::size_t i = 0;
        if (i < mid.size() && (mid[i] == "TE" || mid[i] == "LS" || mid[i] == "CI")) {
            out.method = mid[i] == "TE" ? Method::te : mid[i] == "LS" ? Method::ls : Method::ci;
            ++i;
        }
        if (i < mid.size()) {
            if (mid[i].size() != 1 || mid[i][0] < '1' || mid[i][0] > '3') unknown_scheme(id);
            out.variant = mid[i][0] - '0';
            ++i;
        }
        if (i != mid.size()) unknown_scheme(id);
        if (tag->str() == "E2") unknown_scheme(id);
        if (out.method != Method::te && !ls_tag) unknown_scheme(id);
        if (out.method != Method::te && out.variant > 1) unknown_scheme(id);
    } else {
        unknown_scheme(id);
    }

    // canonical text
    switch (out.family) {
        case Family::tdcncs: out.text = "TDCNCS"; break;
        case Family::tdcccs: out.text = out.method == Method::ci ? "TDCCCS-CI" : "TDCCCS"; break;
        case Family::ci: out.text = "CI"; break;
        case Family::cncs: out.text = "CNCS"; break;
        case Family::ccs: out.text = "CCS"; break;
        case Family::tdccs:
            out.text = "TDCCS";
            if (out.method == Method::ls) out.text += "-LS";
            if (out.method == Method::ci) out.text += "-CI";
            if (out.variant) out.text += (out.method == Method::te ? "-TE-" : "-") +
                                          std::to_string(out.variant);
            break;
    }
    out.text += "-" + tag->str();
    return out;
}

// ---------------------------------------------------------------------------
// Built-in exact tables
// ---------------------------------------------------------------------------

namespace detail {

struct TableRow {
    const char* tag;
    const char* a;
    const char* b;
    const char* c;
    const char* alpha;
    const char* beta;
};

inline const std::vector<TableRow>& tdcncs_table() {
    // The signs of alpha in T8 and beta in P8 follow from 1 + 2 alpha + 2 beta = a + b + c.
    static const std::vector<TableRow> t = {
        {"E2", "1", "0", "0", "0", "0"},
        {"E4", "2", "-1", "0", "0", "0"},
        {"E6", "169/60", "-12/5", "7/12", "0", "0"},
        {"T4", "2", "0", "0", "1/2", "0"},
        {"T6", "2", "-1/8", "0", "7/16", "0"},
        {"T8", "2367/1180", "-167/1180", "1/236", "205/472", "0"},
        {"P6", "40/21", "0", "0", "4/9", "1/126"},
        {"P8", "160/83", "-5/166", "0", "147/332", "1/166"},
        {"P10", "18221/5478", "-1846/913", "5/66", "799/2739", "-557/5478"}};
    return t;
}

inline const std::vector<TableRow>& tdcccs_table() {
    static const std::vector<TableRow> t = {
        {"E2", "1", "0", "0", "0", "0"},
        {"E4", "13/8", "-5/8", "0", "0", "0"},
        {"E6", "1299/640", "-499/384", "259/960", "0", "0"},
        {"T4", "4/3", "0", "0", "1/6", "0"},
        {"T6", "205/166", "35/166", "0", "37/166", "0"},
        {"T8", "1058279/975200", "96627/195040", "-24787/487600", "3229/12190", "0"},
        {"P6", "320/233", "0", "0", "134/699", "-7/1398"},
        {"P8", "49720/79903", "91400/79903", "0", "28838/79903", "3541/159806"},
        {"P10", "55463611/150617762", "677644345/451853286", "6301771/225926643",
         "93443398/225926643", "15505921/451853286"}};
    return t;
}

inline const std::vector<TableRow>& ci_table() {
    static const std::vector<TableRow> t = {
        {"E2", "1", "0", "0", "0", "0"},
        {"E4", "9/8", "-1/8", "0", "0", "0"},
        {"E6", "75/64", "-25/128", "3/128", "0", "0"},
        {"T4", "4/3", "0", "0", "1/6", "0"},
        {"T6", "3/2", "1/10", "0", "3/10", "0"},
        {"T8", "25/16", "5/32", "-1/224", "5/14", "0"},
        {"P6", "64/45", "0", "0", "2/9", "-1/90"},
        {"P8", "8/5", "8/35", "0", "2/5", "1/70"},
        {"P10", "5/3", "5/14", "1/126", "10/21", "5/126"}};
    return t;
}

inline const std::vector<TableRow>& tdccs_table() {
    static const std::vector<TableRow> t = {
        {"E4", "13/8", "-5/8", "0", "0", "0"},
        {"E6", "361/192", "-129/128", "49/384", "0", "0"},
        {"T4", "8/7", "0", "0", "1/14", "0"},
        {"T6", "5", "-5", "0", "-1/2", "0"},
        {"T8", "58021/14120", "-109007/28240", "1029/28240", "-1261/3530", "0"},
        {"P6", "320/273", "0", "0", "74/819", "-1/234"},
        {"P8", "19640/4621", "-353000/87799", "0", "-33746/87799", "-147/175598"},
        {"P10", "74390155/19635801", "-45752035/13090534", "4684435/39271602",
         "-5803114/19635801", "74747/39271602"}};
    return t;
}

inline std::optional<SchemeCoefficients> table_lookup(const std::vector<TableRow>& table,
                                                      const OrderTag& tag,
                                                      const std::string& family) {
    for (const auto& row : table) {
        if (tag.str() != row.tag) continue;
        SchemeCoefficients c;
        c.family = family;
        c.formal_order = tag.order;
        c[Slot::a] = parse_rational(row.a);
        c[Slot::b] = parse_rational(row.b);
        c[Slot::c] = parse_rational(row.c);
        c[Slot::alpha] = parse_rational(row.alpha);
        c[Slot::beta] = parse_rational(row.beta);
        return c;
    }
    return std::nullopt;
}

}  // namespace detail

struct BuiltinScheme {
    SchemeTemplate tmpl;
    SchemeCoefficients coeffs;
    SchemeId id;
};

/// Exact catalogue entry. Least-squares ids are real valued and live in the
/// spectral module; CI-scaled ids resolve to their underlying TE scheme.
inline BuiltinScheme builtin_scheme(std::string_view text) {
    SchemeId id = parse_scheme_id(text);
    if (id.method == Method::ls)
        throw LookupError("'" + std::string(text) +
                          "' has real-valued least-squares coefficients; no exact table entry");
    SchemeTemplate t = template_for(id.family, id.variant);
    std::string fam = t.name + "-" + id.tag.str();
    std::optional<SchemeCoefficients> c;
    if (id.variant == 0) {
        switch (id.family) {
            case Family::tdcncs: c = detail::table_lookup(detail::tdcncs_table(), id.tag, fam); break;
            case Family::tdcccs: c = detail::table_lookup(detail::tdcccs_table(), id.tag, fam); break;
            case Family::ci: c = detail::table_lookup(detail::ci_table(), id.tag, fam); break;
            case Family::tdccs: c = detail::table_lookup(detail::tdccs_table(), id.tag, fam); break;
            default: break;
        }
    }
    if (!c) c = derive_coefficients(t, id.tag.zeroed(), id.tag.order, fam);
    return {std::move(t), std::move(*c), id};
}

/// The interpolation scheme used to supply center values in CI composites.
inline constexpr const char* kCompositeInterpolation = "CI-P10";

}  // namespace dispersive
