#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdlib>
#include <initializer_list>
#include <string>
#include <vector>

#include "dispersive/errors.hpp"
#include "dispersive/rational.hpp"

namespace dispersive {

/// Unknown coefficient slots. a, b, c scale RHS tap groups; alpha, beta scale
/// the implicit LHS neighbours.
enum class Slot { a = 0, b = 1, c = 2, alpha = 3, beta = 4 };
inline constexpr int kSlotCount = 5;
inline constexpr std::array<Slot, kSlotCount> kAllSlots{Slot::a, Slot::b, Slot::c, Slot::alpha,
                                                        Slot::beta};

inline const char* slot_name(Slot s) {
    static constexpr const char* names[] = {"a", "b", "c", "alpha", "beta"};
    return names[static_cast<int>(s)];
}

inline bool is_rhs_slot(Slot s) { return static_cast<int>(s) < 3; }

/// Small bitset over slots.
class SlotSet {
public:
    constexpr SlotSet() = default;
    constexpr SlotSet(std::initializer_list<Slot> slots) {
        for (Slot s : slots) insert(s);
    }
    constexpr void insert(Slot s) { bits_ |= 1u << static_cast<unsigned>(s); }
    constexpr void erase(Slot s) { bits_ &= ~(1u << static_cast<unsigned>(s)); }
    constexpr bool contains(Slot s) const { return bits_ & (1u << static_cast<unsigned>(s)); }
    constexpr int size() const { return std::popcount(bits_); }
    constexpr bool operator==(const SlotSet&) const = default;
    std::vector<Slot> members() const {
        std::vector<Slot> out;
        for (Slot s : kAllSlots)
            if (contains(s)) out.push_back(s);
        return out;
    }

private:
    unsigned bits_ = 0;
};

enum class LhsSlot { unit, alpha, beta };

/// Where the RHS taps live relative to the target point. Offsets are in h/2
/// units, so even offsets land on points of the target's own kind and odd
/// offsets on the other kind.
enum class GridKind { node_only, center_only, dual };

inline const char* grid_kind_name(GridKind g) {
    switch (g) {
        case GridKind::node_only: return "node_only";
        case GridKind::center_only: return "center_only";
        case GridKind::dual: return "dual";
    }
    return "?";
}

struct LhsTerm {
    int offset;
    LhsSlot slot;
};

struct Tap {
    int offset;
    Rational weight;
};

struct RhsGroup {
    Slot slot;
    std::vector<Tap> taps;
};

/// Symbolic stencil. The scheme reads
///   sum_lhs coef(slot) * f^(d)(x + off*h/2) = h^-d * sum_groups slot * sum_taps w * f(x + off*h/2)
struct SchemeTemplate {
    std::string name;
    int derivative_order = 3;
    std::vector<LhsTerm> lhs;
    std::vector<RhsGroup> rhs;
    GridKind grid = GridKind::node_only;
    /// Target point is a cell center (compact interpolation) rather than a node.
    bool center_target = false;

    bool has_slot(Slot s) const {
        if (is_rhs_slot(s))
            return std::any_of(rhs.begin(), rhs.end(), [&](const RhsGroup& g) { return g.slot == s; });
        LhsSlot want = s == Slot::alpha ? LhsSlot::alpha : LhsSlot::beta;
        return std::any_of(lhs.begin(), lhs.end(), [&](const LhsTerm& t) { return t.slot == want; });
    }

    SlotSet slots() const {
        SlotSet out;
        for (Slot s : kAllSlots)
            if (has_slot(s)) out.insert(s);
        return out;
    }

    int max_rhs_offset() const {
        int m = 0;
        for (const auto& g : rhs)
            for (const auto& t : g.taps) m = std::max(m, std::abs(t.offset));
        return m;
    }

    int max_lhs_offset() const {
        int m = 0;
        for (const auto& t : lhs) m = std::max(m, std::abs(t.offset));
        return m;
    }
};

/// Throws StructuralError unless the template is a well formed central scheme.
inline void validate(const SchemeTemplate& t) {
    auto fail = [&](const std::string& why) { throw StructuralError(t.name + ": " + why); };
    if (t.derivative_order < 0) fail("negative derivative order");

    int units = 0;
    for (const auto& term : t.lhs) {
        if (term.offset % 2 != 0) fail("LHS offsets must couple points of the target's kind");
        if (term.slot == LhsSlot::unit) {
            if (term.offset != 0) fail("unit LHS entry must sit at offset 0");
            ++units;
            continue;
        }
        if (term.offset == 0) fail("alpha/beta LHS entries cannot sit at offset 0");
        int mirrors = 0;
        for (const auto& other : t.lhs)
            if (other.offset == -term.offset && other.slot == term.slot) ++mirrors;
        if (mirrors != 1) fail("LHS is not symmetric about 0");
        for (const auto& other : t.lhs)
            if (&other != &term && other.offset == term.offset) fail("duplicate LHS offset");
    }
    if (units != 1) fail("LHS needs exactly one unit entry at offset 0");

    if (t.rhs.empty()) fail("no RHS groups");
    bool odd = t.derivative_order % 2 == 1;
    bool any_even = false, any_odd = false;
    SlotSet seen;
    for (const auto& g : t.rhs) {
        if (!is_rhs_slot(g.slot)) fail("RHS groups must use slots a, b or c");
        if (seen.contains(g.slot)) fail(std::string("duplicate RHS group ") + slot_name(g.slot));
        seen.insert(g.slot);
        if (g.taps.empty()) fail("empty RHS group");
        for (const auto& tap : g.taps) {
            (tap.offset % 2 == 0 ? any_even : any_odd) = true;
            int partners = 0;
            for (const auto& other : g.taps) {
                if (&other != &tap && other.offset == tap.offset) fail("duplicate RHS offset");
                if (other.offset == -tap.offset && &other != &tap) {
                    ++partners;
                    Rational expect = odd ? Rational(-tap.weight) : tap.weight;
                    if (other.weight != expect)
                        fail(odd ? "RHS group is not antisymmetric" : "RHS group is not symmetric");
                }
            }
            if (tap.offset == 0) {
                if (odd) fail("odd-derivative stencil cannot use the centre tap");
            } else if (partners != 1) {
                fail("RHS tap without mirror partner");
            }
        }
    }
    GridKind expect = any_even && any_odd ? GridKind::dual
                      : any_odd          ? GridKind::center_only
                                         : GridKind::node_only;
    if (expect != t.grid) fail(std::string("grid kind should be ") + grid_kind_name(expect));
}

}  // namespace dispersive
