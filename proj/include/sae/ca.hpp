#pragma once

// Correspondence analysis of a count table and its stable-autoencoder
// regularisation.

#include <cmath>
#include <string>
#include <vector>

#include "sae/estimators.hpp"
#include "sae/linalg.hpp"

namespace sae {

template <typename Scalar>
struct CaDecomposition {
    MatrixX<Scalar> M; // R^{-1/2} (X - r c' / N) C^{-1/2}
    VectorX<Scalar> r; // row sums
    VectorX<Scalar> c; // column sums
    Scalar N{};        // grand total
};

template <typename Scalar>
struct CaResult : EstimateResult<Scalar> {
    MatrixX<Scalar> M_hat;
};

template <typename Scalar>
struct CaCoordinates {
    MatrixX<Scalar> rows; // sqrt(N) R^{-1/2} U D
    MatrixX<Scalar> cols; // sqrt(N) C^{-1/2} V D
    VectorX<Scalar> singular_values;
};

template <typename Derived>
CaDecomposition<typename Derived::Scalar> ca_transform(const Eigen::MatrixBase<Derived>& X)
{
    using Scalar = typename Derived::Scalar;
    detail::require_finite(X, "contingency table");
    detail::require((X.array() >= Scalar(0)).all(), "contingency table must be nonnegative");

    CaDecomposition<Scalar> dec;
    dec.r = X.rowwise().sum();
    dec.c = X.colwise().sum().transpose();
    for (Index i = 0; i < dec.r.size(); ++i) {
        if (!(dec.r[i] > Scalar(0))) {
            throw degenerate_margin("row " + std::to_string(i) + " of the table is empty");
        }
    }
    for (Index j = 0; j < dec.c.size(); ++j) {
        if (!(dec.c[j] > Scalar(0))) {
            throw degenerate_margin("column " + std::to_string(j) + " of the table is empty");
        }
    }
    dec.N = dec.r.sum();
    const VectorX<Scalar> ri = dec.r.cwiseSqrt().cwiseInverse();
    const VectorX<Scalar> ci = dec.c.cwiseSqrt().cwiseInverse();
    dec.M = ri.asDiagonal() * (X - dec.r * dec.c.transpose() / dec.N) * ci.asDiagonal();
    return dec;
}

/// Pearson's statistic N ||M||_F^2.
template <typename Derived>
typename Derived::Scalar chi_square_stat(const Eigen::MatrixBase<Derived>& X)
{
    const auto dec = ca_transform(X);
    return dec.N * dec.M.squaredNorm();
}

/// R^{1/2} M_hat C^{1/2} + r c' / N.
template <typename Scalar, typename Derived>
MatrixX<Scalar> ca_restore(const Eigen::MatrixBase<Derived>& M_hat, const CaDecomposition<Scalar>& dec)
{
    detail::require(M_hat.rows() == dec.r.size() && M_hat.cols() == dec.c.size(), "ca_restore: dimension mismatch");
    return dec.r.cwiseSqrt().asDiagonal() * M_hat * dec.c.cwiseSqrt().asDiagonal() + dec.r * dec.c.transpose() / dec.N;
}

/// (S_M)_jj = c_j^{-1} delta/(1-delta) sum_i X_ij / r_i under Poisson thinning.
template <typename Derived>
PenaltyDiagonal<typename Derived::Scalar> ca_penalty(const Eigen::MatrixBase<Derived>& X, double delta)
{
    using Scalar = typename Derived::Scalar;
    detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    const auto dec = ca_transform(X);
    const Scalar odds = static_cast<Scalar>(delta / (1.0 - delta));
    const VectorX<Scalar> s = (dec.r.cwiseInverse().asDiagonal() * X).colwise().sum().transpose();
    return PenaltyDiagonal<Scalar>(odds * s.cwiseQuotient(dec.c));
}

/// Penalty when the bootstrap is taken around the independence table:
/// n delta / (N (1 - delta)) I.
template <typename Scalar = double>
PenaltyDiagonal<Scalar> ca_penalty_independent(Index n, Index p, Scalar N, double delta)
{
    detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    detail::require(N > Scalar(0), "grand total must be positive");
    return PenaltyDiagonal<Scalar>::constant(p, static_cast<Scalar>(static_cast<double>(n) * delta /
                                                                   (static_cast<double>(N) * (1.0 - delta))));
}

namespace detail {

enum class CaMode { plain, stable, iterated };

template <typename Derived>
CaResult<typename Derived::Scalar> ca_fit(const Eigen::MatrixBase<Derived>& X, CaMode mode, Index k, double delta,
                                          const IsaConfig& cfg)
{
    using Scalar = typename Derived::Scalar;
    const auto dec = ca_transform(X);
    auto [T, transposed] = orient(X);
    const MatrixX<Scalar> Mt = transposed ? MatrixX<Scalar>(dec.M.transpose()) : dec.M;

    EstimateResult<Scalar> est;
    if (mode == CaMode::iterated) {
        est = iterated_penalized_autoencoder(Mt, ca_penalty(T, delta), cfg);
    } else {
        require(k >= 1 && k <= std::min(X.rows(), X.cols()), "rank k must lie in [1, min(n, p)]");
        if (mode == CaMode::plain) {
            est.mu_hat = truncate(svd(Mt), k);
            est.iterations = 1;
        } else {
            est = penalized_autoencoder(Mt, ca_penalty(T, delta), k, cfg.rank_tolerance);
        }
    }

    CaResult<Scalar> out;
    out.M_hat = transposed ? MatrixX<Scalar>(est.mu_hat.transpose()) : est.mu_hat;
    const Scalar top = singular_values(dec.M)[0];
    out.effective_rank = rank_of_spectrum(singular_values(out.M_hat), cfg.rank_tolerance, static_cast<double>(top));
    out.iterations = est.iterations;
    out.final_residual = est.final_residual;
    out.mu_hat = ca_restore(out.M_hat, dec);
    return out;
}

} // namespace detail

/// Classical rank-k CA reconstruction.
template <typename Derived>
CaResult<typename Derived::Scalar> ca_plain(const Eigen::MatrixBase<Derived>& X, Index k)
{
    return detail::ca_fit(X, detail::CaMode::plain, k, 0.5, IsaConfig{});
}

/// M_hat = M B_k with B_k the rank-k solve under S_M.
template <typename Derived>
CaResult<typename Derived::Scalar> ca_stable(const Eigen::MatrixBase<Derived>& X, Index k, double delta = 0.5)
{
    return detail::ca_fit(X, detail::CaMode::stable, k, delta, IsaConfig{});
}

/// Iterated fit on M with S_M fixed from the observed table.
template <typename Derived>
CaResult<typename Derived::Scalar> ca_isa(const Eigen::MatrixBase<Derived>& X, double delta = 0.5,
                                          const IsaConfig& cfg = {})
{
    return detail::ca_fit(X, detail::CaMode::iterated, 0, delta, cfg);
}

/// Principal coordinates of the top k dimensions of M_hat. Dimensions beyond
/// the numerical rank of M_hat are returned as zero columns.
template <typename Scalar, typename Derived>
CaCoordinates<Scalar> ca_coordinates(const Eigen::MatrixBase<Derived>& M_hat, const CaDecomposition<Scalar>& dec, Index k)
{
    detail::require(M_hat.rows() == dec.r.size() && M_hat.cols() == dec.c.size(), "ca_coordinates: dimension mismatch");
    detail::require(k >= 0, "ca_coordinates: k must be nonnegative");
    const auto f = svd(M_hat);
    k = std::min(k, std::min(M_hat.rows(), M_hat.cols()));
    const Index r = std::min(k, f.rank());
    const Scalar rootN = std::sqrt(dec.N);
    CaCoordinates<Scalar> out;
    out.singular_values = VectorX<Scalar>::Zero(k);
    out.rows = MatrixX<Scalar>::Zero(M_hat.rows(), k);
    out.cols = MatrixX<Scalar>::Zero(M_hat.cols(), k);
    out.singular_values.head(r) = f.d.head(r);
    out.rows.leftCols(r) = rootN * dec.r.cwiseSqrt().cwiseInverse().asDiagonal() * f.U.leftCols(r) * f.d.head(r).asDiagonal();
    out.cols.leftCols(r) = rootN * dec.c.cwiseSqrt().cwiseInverse().asDiagonal() * f.V.leftCols(r) * f.d.head(r).asDiagonal();
    return out;
}

/// Rows and columns of X that are not entirely zero.
struct NonEmptyIndex {
    std::vector<Index> rows;
    std::vector<Index> cols;
};

template <typename Derived>
NonEmptyIndex non_empty_margins(const Eigen::MatrixBase<Derived>& X)
{
    NonEmptyIndex idx;
    for (Index i = 0; i < X.rows(); ++i) {
        if (X.row(i).cwiseAbs().sum() > 0) {
            idx.rows.push_back(i);
        }
    }
    for (Index j = 0; j < X.cols(); ++j) {
        if (X.col(j).cwiseAbs().sum() > 0) {
            idx.cols.push_back(j);
        }
    }
    return idx;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> select(const Eigen::MatrixBase<Derived>& X, const NonEmptyIndex& idx)
{
    MatrixX<typename Derived::Scalar> out(static_cast<Index>(idx.rows.size()), static_cast<Index>(idx.cols.size()));
    for (std::size_t i = 0; i < idx.rows.size(); ++i) {
        for (std::size_t j = 0; j < idx.cols.size(); ++j) {
            out(static_cast<Index>(i), static_cast<Index>(j)) = X(idx.rows[i], idx.cols[j]);
        }
    }
    return out;
}

} // namespace sae
