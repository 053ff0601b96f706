#pragma once

// Independent reference implementations shared by unit tests and the
// acceptance runner.

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "dispersive/banded.hpp"
#include "dispersive/order_conditions.hpp"

namespace oracle {

using namespace dispersive;

// RHS assembled on the fine grid of 2N points (even index = node, odd =
// center), LHS at the target level, solved by dense LU.
inline std::vector<double> dense_apply(const SchemeTemplate& t, const RealCoefficients& c, int n,
                                       double h, bool center_target, const std::vector<double>& nodes,
                                       const std::vector<double>& centers) {
    const int nf = 2 * n;
    std::vector<double> fine(nf, 0.0);
    for (int j = 0; j < n; ++j) {
        fine[2 * j] = nodes.empty() ? 0.0 : nodes[j];
        fine[2 * j + 1] = centers.empty() ? 0.0 : centers[j];
    }
    const double scale = 1.0 / std::pow(h, t.derivative_order);
    std::vector<double> b(n, 0.0);
    for (int j = 0; j < n; ++j) {
        const int p = 2 * j + (center_target ? 1 : 0);
        for (const auto& g : t.rhs)
            for (const auto& tap : g.taps)
                b[j] += c[g.slot] * to_double(tap.weight) * scale * fine[((p + tap.offset) % nf + nf) % nf];
    }
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (int j = 0; j < n; ++j)
        for (const auto& term : t.lhs) {
            double v = term.slot == LhsSlot::unit    ? 1.0
                       : term.slot == LhsSlot::alpha ? c[Slot::alpha]
                                                     : c[Slot::beta];
            a[j][((j + term.offset / 2) % n + n) % n] += v;
        }
    return dense_oracle_solve(a, b);
}

inline std::vector<double> random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace oracle
