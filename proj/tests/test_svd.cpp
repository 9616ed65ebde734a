#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "inmo/error.hpp"
#include "inmo/svd.hpp"
#include "test_util.hpp"

using namespace inmo;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& a) {
    Eigen::MatrixXd e(a.rows(), a.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) e(r, c) = a(r, c);
    return e;
}

double orthonormality_error(const Matrix& q) {
    const Matrix g = matmul_tn(q, q);
    return max_abs(g - Matrix::identity(g.rows()));
}

}  // namespace

TEST(SymmetricEigen, MatchesEigenSolverOnRandomSymmetric) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t n = 5 + 7 * seed;
        const Matrix a = fixtures::random_matrix(n, n, seed);
        const Matrix s = a + transpose(a);
        const auto ours = symmetric_eigen(s);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(to_eigen(s));
        for (std::size_t k = 0; k < n; ++k)
            EXPECT_NEAR(ours.values[k], oracle.eigenvalues()(static_cast<Eigen::Index>(n - 1 - k)), 1e-10);
        EXPECT_LT(orthonormality_error(ours.vectors), 1e-12);
        // A·v = λ·v
        const Matrix av = matmul(s, ours.vectors);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t r = 0; r < n; ++r) EXPECT_NEAR(av(r, k), ours.values[k] * ours.vectors(r, k), 1e-10);
    }
}

TEST(TruncatedSvd, IdentityHasUnitSpectrumAndZeroResidual) {
    const auto f = truncated_svd(Matrix::identity(3), 3);
    for (double s : f.s) EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_NEAR(f.eps_min, 0.0, 1e-12);
}

TEST(TruncatedSvd, AllOnesIsRankOne) {
    const auto f = truncated_svd(Matrix(3, 3, 1.0), 1);
    EXPECT_NEAR(f.s[0], 3.0, 1e-12);
    EXPECT_NEAR(f.eps_min, 0.0, 1e-10);
    EXPECT_EQ(f.numerical_rank, 1u);
}

TEST(TruncatedSvd, ResidualMatchesGramEigenOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Matrix y = fixtures::random_dataset(12, 9, 0.35, seed).to_dense();
        const auto f = truncated_svd(y, 4);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(to_eigen(y).transpose() * to_eigen(y));
        // eigenvalues ascending: the tail past the top 4 are indices 0..4
        double tail = 0.0;
        for (Eigen::Index k = 0; k < 5; ++k) tail += std::max(0.0, oracle.eigenvalues()(k));
        EXPECT_NEAR(f.eps_min * f.eps_min, tail, 1e-8);
        double spec_tail = 0.0;
        for (std::size_t k = 4; k < f.spectrum.size(); ++k) spec_tail += f.spectrum[k] * f.spectrum[k];
        EXPECT_NEAR(spec_tail, f.eps_min * f.eps_min, 1e-8);
        EXPECT_LT(orthonormality_error(f.u), 1e-8);
        EXPECT_LT(orthonormality_error(f.v), 1e-8);
        for (std::size_t k = 1; k < f.s.size(); ++k) EXPECT_GE(f.s[k - 1], f.s[k]);
    }
}

TEST(TruncatedSvd, WideMatrixUsesRowGram) {
    const Matrix y = fixtures::random_dataset(8, 20, 0.3, 4).to_dense();
    const auto f = truncated_svd(y, 5);
    Eigen::JacobiSVD<Eigen::MatrixXd> oracle(to_eigen(y));
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(f.s[k], oracle.singularValues()(static_cast<Eigen::Index>(k)), 1e-9);
    EXPECT_LT(orthonormality_error(f.u), 1e-8);
    EXPECT_LT(orthonormality_error(f.v), 1e-8);
}

TEST(TruncatedSvd, ResidualIsOrthogonalToLeftFactor) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Matrix y = fixtures::random_dataset(30, 20, 0.25, seed).to_dense();
        const auto f = truncated_svd(y, 6);
        Matrix us = f.u;
        for (std::size_t r = 0; r < us.rows(); ++r)
            for (std::size_t k = 0; k < 6; ++k) us(r, k) *= f.s[k];
        const Matrix residual = y - matmul(us, transpose(f.v));
        EXPECT_LT(max_abs(matmul_tn(f.u, residual)), 1e-8);
    }
}

TEST(TruncatedSvd, SignConventionMakesLargestRightEntryPositive) {
    const Matrix y = fixtures::random_dataset(15, 10, 0.3, 2).to_dense();
    const auto f = truncated_svd(y, 4);
    for (std::size_t k = 0; k < 4; ++k) {
        double best = 0.0;
        for (std::size_t r = 0; r < f.v.rows(); ++r)
            if (std::abs(f.v(r, k)) > std::abs(best)) best = f.v(r, k);
        EXPECT_GT(best, 0.0);
    }
}

TEST(TruncatedSvd, RankDeficientPadsWithZeros) {
    Matrix y(4, 3);
    y(0, 0) = y(1, 0) = 1.0;
    y(2, 1) = y(3, 1) = 1.0;
    const auto f = truncated_svd(y, 3);
    EXPECT_EQ(f.numerical_rank, 2u);
    EXPECT_EQ(f.s[2], 0.0);
    for (std::size_t r = 0; r < 4; ++r) EXPECT_EQ(f.u(r, 2), 0.0);
    EXPECT_NEAR(f.eps_min, 0.0, 1e-12);
}

TEST(TruncatedSvd, RefusesOverCapAndOversizedRank) {
    EXPECT_THROW(truncated_svd(Matrix(10, 10), 2, 99), SizeCapError);
    EXPECT_THROW(truncated_svd(Matrix(4, 3), 4), std::invalid_argument);
}

TEST(TruncatedSvd, DegenerateSpectrumIsFlagged) {
    const auto f = truncated_svd(Matrix::identity(4), 2);
    EXPECT_TRUE(f.degenerate());
}
