#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sae/metrics.hpp"

using sae::Matrix;

namespace {

Matrix random_orthogonal(int n, std::mt19937_64& rng)
{
    const Matrix A = oracle::random_matrix(n, n, rng);
    return Eigen::HouseholderQR<Matrix>(A).householderQ();
}

} // namespace

TEST(RelativeMse, Examples)
{
    std::mt19937_64 rng(1);
    const Matrix mu = oracle::random_matrix(4, 3, rng);
    EXPECT_EQ(sae::relative_mse(mu, mu), 0.0);
    EXPECT_NEAR(sae::relative_mse(Matrix::Zero(4, 3), mu), 1.0, 1e-15);
    EXPECT_NEAR(sae::relative_mse(Matrix(2.0 * mu), mu), 1.0, 1e-14);
    EXPECT_THROW(sae::relative_mse(mu, Matrix::Zero(4, 3)), sae::invalid_input);
    EXPECT_THROW(sae::relative_mse(Matrix::Zero(3, 3), mu), sae::invalid_input);
}

TEST(RelativeMse, RotationInvariant)
{
    std::mt19937_64 rng(2);
    const Matrix mu = oracle::random_matrix(5, 4, rng);
    const Matrix est = mu + 0.3 * oracle::random_matrix(5, 4, rng);
    const Matrix P = random_orthogonal(5, rng);
    const Matrix Q = random_orthogonal(4, rng);
    EXPECT_NEAR(sae::relative_mse(Matrix(P * est * Q), Matrix(P * mu * Q)), sae::relative_mse(est, mu), 1e-12);
}

TEST(RvCoefficient, Examples)
{
    std::mt19937_64 rng(3);
    const Matrix U = oracle::random_matrix(6, 2, rng);
    EXPECT_NEAR(sae::rv_coefficient(U, U), 1.0, 1e-14);

    Matrix A = Matrix::Zero(4, 2);
    A(0, 0) = 1;
    A(1, 1) = 1;
    Matrix B = Matrix::Zero(4, 1);
    B(3, 0) = 2;
    EXPECT_NEAR(sae::rv_coefficient(A, B), 0.0, 1e-15);
    EXPECT_THROW(sae::rv_coefficient(A, Matrix::Zero(4, 1)), sae::invalid_input);
    EXPECT_THROW(sae::rv_coefficient(A, Matrix::Ones(3, 1)), sae::invalid_input);
}

TEST(RvCoefficient, OrthogonalRightFactorInvariance)
{
    std::mt19937_64 rng(4);
    const Matrix U = oracle::random_matrix(8, 3, rng);
    const Matrix W = oracle::random_matrix(8, 2, rng);
    const double rv = sae::rv_coefficient(U, W);
    EXPECT_NEAR(sae::rv_coefficient(Matrix(U * random_orthogonal(3, rng)), W), rv, 1e-12);
    EXPECT_NEAR(sae::rv_coefficient(U, Matrix(W * random_orthogonal(2, rng))), rv, 1e-12);
}

TEST(RvCoefficient, MatchesDirectFormulaAndStaysInUnitInterval)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 200; ++t) {
        const Matrix U = oracle::random_matrix(7, 1 + t % 3, rng);
        const Matrix W = oracle::random_matrix(7, 1 + t % 4, rng);
        const Matrix UU = U * U.transpose();
        const Matrix WW = W * W.transpose();
        const double direct = (UU * WW).trace() / std::sqrt((UU * UU).trace() * (WW * WW).trace());
        const double rv = sae::rv_coefficient(U, W);
        EXPECT_NEAR(rv, direct, 1e-12);
        EXPECT_GE(rv, 0.0);
        EXPECT_LE(rv, 1.0 + 1e-12);
    }
}

TEST(NumericalRank, Examples)
{
    EXPECT_EQ(sae::numerical_rank(Matrix::Identity(3, 3), 1e-7), 3);
    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 1.0;
    D(1, 1) = 1e-12;
    EXPECT_EQ(sae::numerical_rank(D, 1e-7), 1);
    EXPECT_EQ(sae::numerical_rank(Matrix::Zero(3, 2), 1e-7), 0);
}
