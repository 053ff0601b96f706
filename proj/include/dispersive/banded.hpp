#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dispersive/errors.hpp"

namespace dispersive {

/// Periodic matrix constant along its diagonals, |offset| <= 2.
class CyclicBandedMatrix {
public:
    CyclicBandedMatrix(int n, std::map<int, double> bands) : n_(n), bands_(std::move(bands)) {
        for (const auto& [off, v] : bands_) {
            (void)v;
            if (off < -2 || off > 2) throw ArgumentError("band offset outside -2..2");
        }
        if (n_ < 2 * bandwidth() + 1)
            throw ArgumentError("cyclic matrix of size " + std::to_string(n_) +
                                " too small for bandwidth " + std::to_string(bandwidth()));
    }

    /// The (beta, alpha, 1, alpha, beta) pattern of the compact schemes.
    static CyclicBandedMatrix symmetric(int n, double alpha, double beta = 0.0) {
        std::map<int, double> b{{0, 1.0}};
        if (alpha != 0.0 || beta != 0.0) b[-1] = b[1] = alpha;
        if (beta != 0.0) b[-2] = b[2] = beta;
        return {n, std::move(b)};
    }

    int size() const { return n_; }
    const std::map<int, double>& bands() const { return bands_; }

    int bandwidth() const {
        int p = 0;
        for (const auto& [off, v] : bands_)
            if (v != 0.0) p = std::max(p, std::abs(off));
        return p;
    }

    double band(int off) const {
        auto it = bands_.find(off);
        return it == bands_.end() ? 0.0 : it->second;
    }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const {
        check(x.size());
        check(y.size());
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (const auto& [off, v] : bands_) s += v * x[wrap(i + off)];
            y[i] = s;
        }
    }

    std::vector<double> multiply(std::span<const double> x) const {
        std::vector<double> y(n_);
        multiply(x, y);
        return y;
    }

    std::vector<std::vector<double>> dense() const {
        std::vector<std::vector<double>> m(n_, std::vector<double>(n_, 0.0));
        for (int i = 0; i < n_; ++i)
            for (const auto& [off, v] : bands_) m[i][wrap(i + off)] += v;
        return m;
    }

    /// Circulant symbol sum_k band_k e^{i k w}; real for symmetric bands.
    double symbol(double omega) const {
        double s = 0.0;
        for (const auto& [off, v] : bands_) s += v * std::cos(off * omega);
        return s;
    }

    bool is_symmetric() const {
        for (const auto& [off, v] : bands_)
            if (band(-off) != v) return false;
        return true;
    }

private:
    void check(std::size_t len) const {
        if (static_cast<int>(len) != n_)
            throw ArgumentError("vector length " + std::to_string(len) + " != matrix size " +
                                std::to_string(n_));
    }
    int wrap(int j) const { return ((j % n_) + n_) % n_; }

    int n_;
    std::map<int, double> bands_;
};

/// Factorization of a cyclic banded matrix: banded LU of the non-periodic part
/// plus a Woodbury correction for the wrap-around corners (rank 2p).
/// Immutable after construction; solves only touch caller-owned memory.
class CyclicSolver {
public:
    explicit CyclicSolver(const CyclicBandedMatrix& a) : n_(a.size()), p_(a.bandwidth()) {
        check_symbol(a);
        factor_band(a);
        if (p_ > 0) build_correction(a);
    }

    int size() const { return n_; }
    int bandwidth() const { return p_; }

    void solve_in_place(std::span<double> x) const {
        if (static_cast<int>(x.size()) != n_)
            throw ArgumentError("rhs length " + std::to_string(x.size()) + " != " +
                                std::to_string(n_));
        band_solve(x);
        if (p_ == 0) return;
        const int r = 2 * p_;
        std::array<double, 4> w{};
        for (int k = 0; k < r; ++k) {
            double s = 0.0;
            for (const auto& [col, v] : vrows_[k]) s += v * x[col];
            w[k] = s;
        }
        // capacitance solve, LU with row permutation stored in perm_
        std::array<double, 4> q{};
        for (int i = 0; i < r; ++i) {
            double s = w[perm_[i]];
            for (int j = 0; j < i; ++j) s -= cap_[i][j] * q[j];
            q[i] = s;
        }
        for (int i = r - 1; i >= 0; --i) {
            double s = q[i];
            for (int j = i + 1; j < r; ++j) s -= cap_[i][j] * q[j];
            q[i] = s / cap_[i][i];
        }
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int k = 0; k < r; ++k) s += z_[i * r + k] * q[k];
            x[i] -= s;
        }
    }

    std::vector<double> solve(std::span<const double> rhs) const {
        std::vector<double> x(rhs.begin(), rhs.end());
        solve_in_place(x);
        return x;
    }

private:
    static void check_symbol(const CyclicBandedMatrix& a) {
        if (!a.is_symmetric()) return;  // only symmetric bands have a real symbol to scan
        constexpr int kSamples = 4096;
        double scale = 0.0;
        for (const auto& [off, v] : a.bands()) scale += std::abs(v);
        double lo = INFINITY;
        for (int k = 0; k < kSamples; ++k)
            lo = std::min(lo, std::abs(a.symbol(2.0 * std::numbers::pi * k / kSamples)));
        if (lo <= 1e-10 * scale)
            throw SingularityError("cyclic LHS symbol vanishes on [0, 2pi) (min " +
                                   std::to_string(lo) + ")");
    }

    // row-major band storage lu_[i*(2p+1) + (j-i+p)]
    double& lu(int i, int j) { return lu_[i * (2 * p_ + 1) + (j - i + p_)]; }
    double lu(int i, int j) const { return lu_[i * (2 * p_ + 1) + (j - i + p_)]; }

    void factor_band(const CyclicBandedMatrix& a) {
        lu_.assign(static_cast<std::size_t>(n_) * (2 * p_ + 1), 0.0);
        for (int i = 0; i < n_; ++i)
            for (int off = -p_; off <= p_; ++off)
                if (i + off >= 0 && i + off < n_) lu(i, i + off) = a.band(off);
        double scale = 0.0;
        for (const auto& [off, v] : a.bands()) scale = std::max(scale, std::abs(v));
        for (int k = 0; k < n_; ++k) {
            double piv = lu(k, k);
            if (std::abs(piv) <= 1e-14 * scale)
                throw SingularityError("zero pivot in banded factorization at row " +
                                       std::to_string(k));
            for (int i = k + 1; i <= std::min(k + p_, n_ - 1); ++i) {
                double f = lu(i, k) / piv;
                lu(i, k) = f;
                for (int j = k + 1; j <= std::min(k + p_, n_ - 1); ++j) lu(i, j) -= f * lu(k, j);
            }
        }
    }

    void band_solve(std::span<double> x) const {
        for (int i = 0; i < n_; ++i) {
            double s = x[i];
            for (int j = std::max(0, i - p_); j < i; ++j) s -= lu(i, j) * x[j];
            x[i] = s;
        }
        for (int i = n_ - 1; i >= 0; --i) {
            double s = x[i];
            for (int j = i + 1; j <= std::min(i + p_, n_ - 1); ++j) s -= lu(i, j) * x[j];
            x[i] = s / lu(i, i);
        }
    }

    void build_correction(const CyclicBandedMatrix& a) {
        const int r = 2 * p_;
        std::vector<int> rows;
        for (int i = 0; i < p_; ++i) rows.push_back(i);
        for (int i = n_ - p_; i < n_; ++i) rows.push_back(i);
        vrows_.assign(r, {});
        for (int k = 0; k < r; ++k) {
            int i = rows[k];
            for (int off = -p_; off <= p_; ++off) {
                int j = i + off;
                if (j >= 0 && j < n_) continue;
                double v = a.band(off);
                if (v != 0.0) vrows_[k].push_back({(j + n_) % n_, v});
            }
        }
        z_.assign(static_cast<std::size_t>(n_) * r, 0.0);
        std::vector<double> col(n_);
        for (int k = 0; k < r; ++k) {
            std::fill(col.begin(), col.end(), 0.0);
            col[rows[k]] = 1.0;
            band_solve(col);
            for (int i = 0; i < n_; ++i) z_[i * r + k] = col[i];
        }
        // C = I + V^T Z
        std::array<std::array<double, 4>, 4> c{};
        for (int k = 0; k < r; ++k)
            for (int m = 0; m < r; ++m) {
                double s = k == m ? 1.0 : 0.0;
                for (const auto& [colj, v] : vrows_[k]) s += v * z_[colj * r + m];
                c[k][m] = s;
            }
        std::array<int, 4> perm{0, 1, 2, 3};
        for (int k = 0; k < r; ++k) {
            int piv = k;
            for (int i = k + 1; i < r; ++i)
                if (std::abs(c[i][k]) > std::abs(c[piv][k])) piv = i;
            if (std::abs(c[piv][k]) < 1e-13)
                throw SingularityError("cyclic correction matrix is singular");
            std::swap(c[piv], c[k]);
            std::swap(perm[piv], perm[k]);
            for (int i = k + 1; i < r; ++i) {
                c[i][k] /= c[k][k];
                for (int j = k + 1; j < r; ++j) c[i][j] -= c[i][k] * c[k][j];
            }
        }
        cap_ = c;
        perm_ = perm;
    }

    int n_;
    int p_;
    std::vector<double> lu_;
    std::vector<std::vector<std::pair<int, double>>> vrows_;
    std::vector<double> z_;
    std::array<std::array<double, 4>, 4> cap_{};
    std::array<int, 4> perm_{0, 1, 2, 3};
};

inline std::vector<double> solve_cyclic(const CyclicBandedMatrix& a, std::span<const double> rhs) {
    return CyclicSolver(a).solve(rhs);
}

/// Gaussian elimination with partial pivoting on a full matrix (test oracle).
inline std::vector<double> dense_oracle_solve(std::vector<std::vector<double>> m,
                                              std::vector<double> rhs) {
    const std::size_t n = m.size();
    if (n == 0 || rhs.size() != n) throw ArgumentError("dense solve: size mismatch");
    if (n > 512) throw ArgumentError("dense oracle limited to n <= 512");
    double scale = 0.0;
    for (const auto& row : m) {
        if (row.size() != n) throw ArgumentError("dense solve: matrix not square");
        for (double v : row) scale = std::max(scale, std::abs(v));
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(m[i][k]) > std::abs(m[piv][k])) piv = i;
        if (std::abs(m[piv][k]) <= 1e-14 * scale || scale == 0.0)
            throw SingularityError("matrix singular to working precision");
        std::swap(m[piv], m[k]);
        std::swap(rhs[piv], rhs[k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = m[i][k] / m[k][k];
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) m[i][j] -= f * m[k][j];
            rhs[i] -= f * rhs[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = rhs[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= m[i][j] * x[j];
        x[i] = s / m[i][i];
    }
    return x;
}

}  // namespace dispersive
