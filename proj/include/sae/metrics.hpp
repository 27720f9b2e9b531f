#pragma once

#include <cmath>

#include "sae/linalg.hpp"

namespace sae {

/// ||mu_hat - mu||^2 / ||mu||^2.
template <typename DA, typename DB>
typename DA::Scalar relative_mse(const Eigen::MatrixBase<DA>& mu_hat, const Eigen::MatrixBase<DB>& mu)
{
    using Scalar = typename DA::Scalar;
    detail::require(mu_hat.rows() == mu.rows() && mu_hat.cols() == mu.cols(), "relative_mse: shape mismatch");
    const Scalar denom = mu.squaredNorm();
    detail::require(denom > Scalar(0), "relative_mse: signal is zero");
    return (mu_hat - mu).squaredNorm() / denom;
}

/// RV coefficient tr(U'W W'U) / sqrt(tr((U'U)^2) tr((W'W)^2)).
template <typename DA, typename DB>
typename DA::Scalar rv_coefficient(const Eigen::MatrixBase<DA>& U, const Eigen::MatrixBase<DB>& W)
{
    using Scalar = typename DA::Scalar;
    detail::require(U.rows() == W.rows(), "rv_coefficient: row counts differ");
    const MatrixX<Scalar> cross = U.transpose() * W;
    const Scalar a = (U.transpose() * U).squaredNorm();
    const Scalar b = (W.transpose() * W).squaredNorm();
    detail::require(a > Scalar(0) && b > Scalar(0), "rv_coefficient: zero matrix");
    return cross.squaredNorm() / std::sqrt(a * b);
}

template <typename Derived>
Index rank_of_spectrum(const Eigen::MatrixBase<Derived>& d, double rel_tol, double reference)
{
    if (!(reference > 0.0)) {
        return 0;
    }
    Index count = 0;
    for (Index i = 0; i < d.size(); ++i) {
        if (static_cast<double>(d[i]) > rel_tol * reference) {
            ++count;
        }
    }
    return count;
}

/// Number of singular values above rel_tol * d_1(A).
template <typename Derived>
Index numerical_rank(const Eigen::MatrixBase<Derived>& A, double rel_tol)
{
    detail::require(rel_tol > 0.0, "numerical_rank: rel_tol must be positive");
    const auto d = singular_values(A);
    return rank_of_spectrum(d, rel_tol, d.size() ? static_cast<double>(d[0]) : 0.0);
}

} // namespace sae
