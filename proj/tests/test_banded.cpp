#include <gtest/gtest.h>

#include <random>

#include "dispersive/banded.hpp"

using namespace dispersive;

namespace {

std::vector<double> random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(CyclicBanded, IdentityBandsReturnRhs) {
    auto a = CyclicBandedMatrix::symmetric(12, 0.0, 0.0);
    auto r = random_vector(12, 1);
    EXPECT_LT(max_diff(solve_cyclic(a, r), r), 1e-15);
}

TEST(CyclicBanded, DenseMatrixWrapsCorners) {
    auto a = CyclicBandedMatrix::symmetric(6, 0.25, 0.125);
    auto d = a.dense();
    EXPECT_DOUBLE_EQ(d[0][5], 0.25);
    EXPECT_DOUBLE_EQ(d[0][4], 0.125);
    EXPECT_DOUBLE_EQ(d[5][0], 0.25);
    EXPECT_DOUBLE_EQ(d[1][5], 0.125);
    EXPECT_DOUBLE_EQ(d[2][2], 1.0);
}

TEST(CyclicBanded, TridiagonalMatchesDenseLu) {
    for (int n : {8, 13, 32, 64}) {
        for (double alpha : {0.25, 0.4, -0.357, 0.49}) {
            auto a = CyclicBandedMatrix::symmetric(n, alpha);
            auto r = random_vector(n, n + 7);
            auto x = solve_cyclic(a, r);
            auto ref = dense_oracle_solve(a.dense(), r);
            EXPECT_LT(max_diff(x, ref), 1e-11) << n << " " << alpha;
        }
    }
}

TEST(CyclicBanded, PentadiagonalMatchesDenseLu) {
    for (int n : {9, 16, 40, 64}) {
        for (auto [al, be] : {std::pair{0.4435, 0.006}, std::pair{0.2918, -0.1017},
                             std::pair{-0.3843, -0.0008}, std::pair{0.4136, 0.0343}}) {
            auto a = CyclicBandedMatrix::symmetric(n, al, be);
            auto r = random_vector(n, 3 * n);
            EXPECT_LT(max_diff(solve_cyclic(a, r), dense_oracle_solve(a.dense(), r)), 1e-11) << n;
        }
    }
}

TEST(CyclicBanded, ResidualSmallAtLargeN) {
    const int n = 4096;
    auto a = CyclicBandedMatrix::symmetric(n, 0.43, 0.0058);
    auto r = random_vector(n, 99);
    auto x = solve_cyclic(a, r);
    EXPECT_LT(max_diff(a.multiply(x), r), 1e-13);
}

TEST(CyclicBanded, FactorizationReusedAcrossSolves) {
    auto a = CyclicBandedMatrix::symmetric(30, 0.3, 0.02);
    CyclicSolver s(a);
    for (unsigned k = 0; k < 5; ++k) {
        auto r = random_vector(30, k);
        auto x = s.solve(r);
        EXPECT_LT(max_diff(a.multiply(x), r), 1e-13);
    }
}

TEST(CyclicBanded, SingularSymbolRejected) {
    // 1 + 2 alpha cos w vanishes at w = pi when alpha = 1/2
    EXPECT_THROW(CyclicSolver(CyclicBandedMatrix::symmetric(16, 0.5)), SingularityError);
    // 1 + 2 alpha cos w + 2 beta cos 2w = 0 at w = pi for alpha = 0.6, beta = 0.1
    EXPECT_THROW(CyclicSolver(CyclicBandedMatrix::symmetric(20, 0.6, 0.1)), SingularityError);
}

TEST(CyclicBanded, NonSymmetricBandsSupported) {
    CyclicBandedMatrix a(10, {{-1, 0.2}, {0, 1.0}, {1, 0.3}});
    EXPECT_FALSE(a.is_symmetric());
    auto r = random_vector(10, 5);
    EXPECT_LT(max_diff(solve_cyclic(a, r), dense_oracle_solve(a.dense(), r)), 1e-12);
}

TEST(CyclicBanded, LengthMismatchThrows) {
    auto a = CyclicBandedMatrix::symmetric(10, 0.2);
    std::vector<double> r(9, 1.0);
    EXPECT_THROW(solve_cyclic(a, r), ArgumentError);
}

TEST(DenseOracle, ThreeByThreeIdentity) {
    std::vector<std::vector<double>> id = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    std::vector<double> r = {3, -1, 2};
    EXPECT_EQ(dense_oracle_solve(id, r), r);
}

TEST(DenseOracle, SingularMatrixThrows) {
    std::vector<std::vector<double>> m = {{1, 2}, {2, 4}};
    EXPECT_THROW(dense_oracle_solve(m, {1, 1}), SingularityError);
}
