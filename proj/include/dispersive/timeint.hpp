#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dispersive/errors.hpp"

namespace dispersive {

/// Flat state: one value vector (nodes, or nodes followed by centers) and time.
struct StageState {
    std::vector<double> values;
    double time = 0.0;
};

/// rate = S(t, u); must not alias u.
using RhsFunction = std::function<void(double, std::span<const double>, std::span<double>)>;

/// Reusable stage buffers for the three-stage TVD Runge-Kutta scheme
///   u1 = u + dt S(u)
///   u2 = 3/4 u + 1/4 u1 + 1/4 dt S(u1)
///   u  = 1/3 u + 2/3 u2 + 2/3 dt S(u2)
class Tvdrk3 {
public:
    void step(StageState& s, const RhsFunction& rhs, double dt, long step_index = 0) {
        if (!(dt > 0.0)) throw ArgumentError("time step must be positive");
        const std::size_t n = s.values.size();
        u1_.resize(n);
        u2_.resize(n);
        rate_.resize(n);
        auto& u = s.values;

        rhs(s.time, u, rate_);
        for (std::size_t i = 0; i < n; ++i) u1_[i] = u[i] + dt * rate_[i];
        check(u1_, step_index, s.time, 1);

        rhs(s.time + dt, u1_, rate_);
        for (std::size_t i = 0; i < n; ++i)
            u2_[i] = 0.75 * u[i] + 0.25 * u1_[i] + 0.25 * dt * rate_[i];
        check(u2_, step_index, s.time, 2);

        rhs(s.time + 0.5 * dt, u2_, rate_);
        for (std::size_t i = 0; i < n; ++i)
            u[i] = u[i] / 3.0 + 2.0 / 3.0 * u2_[i] + 2.0 / 3.0 * dt * rate_[i];
        check(u, step_index, s.time, 3);
        s.time += dt;
    }

private:
    static void check(const std::vector<double>& v, long step, double t, int stage) {
        for (double x : v)
            if (!std::isfinite(x))
                throw DivergenceError("non-finite value in stage " + std::to_string(stage) +
                                          " of step " + std::to_string(step) + " at t = " +
                                          std::to_string(t),
                                      step, t);
    }

    std::vector<double> u1_, u2_, rate_;
};

inline StageState tvdrk3_step(StageState s, const RhsFunction& rhs, double dt, long step_index = 0) {
    Tvdrk3 rk;
    rk.step(s, rhs, dt, step_index);
    return s;
}

/// Amplification factor of one step for u' = lambda u, z = lambda dt.
inline std::complex<double> rk3_amplification(std::complex<double> z) {
    return 1.0 + z + z * z / 2.0 + z * z * z / 6.0;
}

inline bool rk3_stability_contains(std::complex<double> z) {
    return std::abs(rk3_amplification(z)) <= 1.0 + 1e-14;
}

/// Where the stability boundary crosses the imaginary axis:
/// |A(iy)|^2 = 1 - y^4/12 + y^6/36 = 1 gives y = sqrt(3) (quoted as 1.732).
inline double rk3_imaginary_intercept() { return std::sqrt(3.0); }

}  // namespace dispersive
