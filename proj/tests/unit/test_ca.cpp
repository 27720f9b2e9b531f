#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "sae/ca.hpp"

using sae::Matrix;
using sae::Vector;

namespace {

Matrix random_table(int n, int p, std::mt19937_64& rng, double mean = 6.0)
{
    std::poisson_distribution<int> pois(mean);
    Matrix X(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) {
            X(i, j) = 1 + pois(rng);
        }
    }
    return X;
}

} // namespace

TEST(CaTransform, IndependenceTablesGiveZero)
{
    EXPECT_EQ(sae::ca_transform(Matrix(Matrix::Ones(2, 2))).M.norm(), 0.0);
    Vector a(4), b(3);
    a << 1, 2.5, 3, 0.5;
    b << 2, 7, 1;
    const auto dec = sae::ca_transform(Matrix(a * b.transpose()));
    EXPECT_LT(dec.M.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(dec.N, a.sum() * b.sum(), 1e-12);
}

TEST(CaTransform, DiagonalTable)
{
    Matrix X(2, 2);
    X << 2, 0, 0, 2;
    Matrix expect(2, 2);
    expect << 0.5, -0.5, -0.5, 0.5;
    EXPECT_LT((sae::ca_transform(X).M - expect).norm(), 1e-15);
    EXPECT_NEAR(sae::chi_square_stat(X), 4.0, 1e-14);
    EXPECT_NEAR(oracle::chi_square(X), 4.0, 1e-14);
}

TEST(CaTransform, DegenerateMarginsAndNegativeEntries)
{
    Matrix X(2, 3);
    X << 1, 0, 2, 3, 0, 4;
    EXPECT_THROW(sae::ca_transform(X), sae::degenerate_margin);
    X(0, 1) = -1;
    X(1, 1) = 2;
    EXPECT_THROW(sae::ca_transform(X), sae::invalid_input);
}

TEST(ChiSquare, MatchesPearsonAndIsPermutationInvariant)
{
    std::mt19937_64 rng(1);
    for (int t = 0; t < 20; ++t) {
        const Matrix X = random_table(3 + t % 5, 2 + t % 7, rng);
        const double stat = sae::chi_square_stat(X);
        EXPECT_NEAR(stat, oracle::chi_square(X), 1e-9 * std::max(1.0, stat));
        const Matrix Y = X.colwise().reverse().rowwise().reverse();
        EXPECT_NEAR(sae::chi_square_stat(Y), stat, 1e-9 * std::max(1.0, stat));
    }
    EXPECT_NEAR(sae::chi_square_stat(Matrix(Matrix::Constant(3, 4, 5.0))), 0.0, 1e-20);
}

TEST(CaRestore, RoundTripAndIndependenceFit)
{
    std::mt19937_64 rng(2);
    const Matrix X = random_table(6, 4, rng);
    const auto dec = sae::ca_transform(X);
    EXPECT_LT((sae::ca_restore(dec.M, dec) - X).cwiseAbs().maxCoeff(), 1e-10);
    const Matrix indep = dec.r * dec.c.transpose() / dec.N;
    EXPECT_LT((sae::ca_restore(Matrix(Matrix::Zero(6, 4)), dec) - indep).norm(), 1e-12);
    EXPECT_THROW(sae::ca_restore(Matrix(Matrix::Zero(4, 6)), dec), sae::invalid_input);
}

TEST(CaPlain, MatchesDirectAlgebra)
{
    std::mt19937_64 rng(3);
    const Matrix X = random_table(7, 5, rng);
    const auto dec = sae::ca_transform(X);
    const auto f = sae::svd(dec.M);
    const Matrix Mk = f.U.leftCols(2) * f.d.head(2).asDiagonal() * f.V.leftCols(2).transpose();
    const Matrix R = dec.r.cwiseSqrt().asDiagonal();
    const Matrix C = dec.c.cwiseSqrt().asDiagonal();
    const Matrix expect = R * Mk * C + dec.r * dec.c.transpose() / dec.N;
    const auto res = sae::ca_plain(X, 2);
    EXPECT_LT((res.mu_hat - expect).norm(), 1e-10 * expect.norm());
    EXPECT_EQ(res.effective_rank, 2);
}

TEST(CaPenalty, Examples)
{
    const int n = 4, p = 5;
    const double N = 200.0;
    const Matrix U = Matrix::Constant(n, p, N / (n * p));
    const auto S = sae::ca_penalty(U, 0.5);
    for (int j = 0; j < p; ++j) {
        EXPECT_NEAR(S[j], n / N, 1e-15);
    }
    EXPECT_LT(sae::ca_penalty(U, 1e-12).values().maxCoeff(), 1e-12);

    std::mt19937_64 rng(4);
    const Matrix X = random_table(n, p, rng);
    const auto dec = sae::ca_transform(X);
    const auto Sx = sae::ca_penalty(X, 0.3);
    for (int j = 0; j < p; ++j) {
        double direct = 0.0;
        for (int i = 0; i < n; ++i) {
            direct += (0.3 / 0.7) * X(i, j) / dec.r[i];
        }
        EXPECT_NEAR(Sx[j], direct / dec.c[j], 1e-14);
    }
    const auto Si = sae::ca_penalty_independent(n, p, N, 0.5);
    EXPECT_NEAR(Si[0], n / N, 1e-15);
}

TEST(CaStable, ConstantPenaltyIsSingularValueShrinkage)
{
    std::mt19937_64 rng(5);
    const Matrix X = random_table(8, 5, rng);
    const auto dec = sae::ca_transform(X);
    const auto S = sae::ca_penalty_independent(8, 5, dec.N, 0.5);
    const Matrix B = sae::solve_reduced_rank(dec.M, S, 2);
    const Matrix M_hat = dec.M * B;
    const auto f = sae::svd(dec.M);
    Vector psi = Vector::Zero(f.rank());
    for (int l = 0; l < 2; ++l) {
        psi[l] = f.d[l] / (1.0 + S[0] / (f.d[l] * f.d[l]));
    }
    EXPECT_LT((M_hat - sae::shrink_and_rebuild(f, psi)).norm(), 1e-10);
}

TEST(CaStable, TinyDeltaIsPlainCa)
{
    std::mt19937_64 rng(6);
    const Matrix X = random_table(6, 9, rng);
    EXPECT_LT((sae::ca_stable(X, 2, 1e-10).mu_hat - sae::ca_plain(X, 2).mu_hat).norm(), 1e-6);
}

TEST(CaStable, RankOneMatchesBruteForce)
{
    std::mt19937_64 rng(7);
    for (int t = 0; t < 3; ++t) {
        const Matrix X = random_table(3, 3, rng, 4.0);
        const auto dec = sae::ca_transform(X);
        const Vector s = sae::ca_penalty(X, 0.5).values();
        const auto res = sae::ca_stable(X, 1, 0.5);
        const Matrix B = sae::solve_reduced_rank(dec.M, sae::PenaltyDiagonal<double>(s), 1);
        EXPECT_LT((dec.M * B - res.M_hat).norm(), 1e-12);
        EXPECT_LE(oracle::objective(dec.M, s, B), oracle::rank1_brute_force(dec.M, s) + 1e-6);
    }
}

TEST(CaIsa, IndependenceTableGivesIndependenceFit)
{
    Vector a(3), b(4);
    a << 10, 20, 5;
    b << 1, 2, 3, 4;
    const Matrix X = a * b.transpose();
    const auto res = sae::ca_isa(X, 0.5);
    const auto dec = sae::ca_transform(X);
    EXPECT_LT(res.M_hat.norm(), 1e-12);
    EXPECT_EQ(res.effective_rank, 0);
    EXPECT_LT((res.mu_hat - dec.r * dec.c.transpose() / dec.N).norm(), 1e-10);
}

TEST(CaIsa, FixedPointIsDominated)
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 5; ++t) {
        const Matrix X = random_table(6 + t, 10 - t, rng, 3.0 + t);
        const auto res = sae::ca_isa(X, 0.3);
        const auto dec = sae::ca_transform(X);
        const Matrix A = res.M_hat.transpose() * res.M_hat;
        EXPECT_TRUE(sae::psd_leq(Matrix(0.5 * (A + A.transpose())), Matrix(dec.M.transpose() * dec.M), 1e-8));
        EXPECT_LT(res.final_residual, 1e-9);
    }
}

TEST(CaIsa, WideAndTallAgree)
{
    std::mt19937_64 rng(9);
    const Matrix X = random_table(5, 11, rng);
    const auto a = sae::ca_isa(X, 0.4);
    const auto b = sae::ca_isa(Matrix(X.transpose()), 0.4);
    EXPECT_LT((a.mu_hat - b.mu_hat.transpose()).norm(), 1e-12);
}

TEST(CaCoordinates, PrincipalCoordinatesReproduceChiSquare)
{
    std::mt19937_64 rng(10);
    const Matrix X = random_table(7, 6, rng);
    const auto dec = sae::ca_transform(X);
    const auto c = sae::ca_coordinates(dec.M, dec, 5);
    // sum_i r_i ||F_i||^2 / N = sum_l d_l^2 = chi2 / N
    double inertia = 0.0;
    for (int i = 0; i < 7; ++i) {
        inertia += dec.r[i] * c.rows.row(i).squaredNorm() / dec.N;
    }
    EXPECT_NEAR(inertia * dec.N, oracle::chi_square(X), 1e-9 * oracle::chi_square(X));
}

TEST(NonEmptyMargins, DropsEmptyRowsAndColumns)
{
    Matrix X(3, 3);
    X << 1, 0, 2, 0, 0, 0, 3, 0, 4;
    const auto idx = sae::non_empty_margins(X);
    EXPECT_EQ(idx.rows, (std::vector<sae::Index>{0, 2}));
    EXPECT_EQ(idx.cols, (std::vector<sae::Index>{0, 2}));
    Matrix expect(2, 2);
    expect << 1, 2, 3, 4;
    EXPECT_EQ(sae::select(X, idx), expect);
}
