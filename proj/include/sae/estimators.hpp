#pragma once

// Stable autoencoder (SA) and iterated stable autoencoder (ISA), plus the
// closed forms they reduce to under isotropic Gaussian noise.

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "sae/linalg.hpp"
#include "sae/metrics.hpp"
#include "sae/noise.hpp"

namespace sae {

struct IsaConfig {
    int max_iterations = 500;
    double convergence_tolerance = 1e-9;
    double rank_tolerance = 1e-7;

    void validate() const
    {
        detail::require(max_iterations >= 1, "max_iterations must be at least 1");
        detail::require(convergence_tolerance > 0.0, "convergence_tolerance must be positive");
        detail::require(rank_tolerance > 0.0, "rank_tolerance must be positive");
    }
};

template <typename Scalar>
struct EstimateResult {
    MatrixX<Scalar> mu_hat;
    Index effective_rank = 0;
    int iterations = 0;
    double final_residual = 0.0;
};

/// Called with M_0 = X'X and every subsequent M_t = mu_t' mu_t of an ISA run,
/// restricted to the columns that enter the solve.
template <typename Scalar>
using IsaObserver = std::function<void(const MatrixX<Scalar>&)>;

/// Transposes X when it has more columns than rows.
template <typename Derived>
std::pair<MatrixX<typename Derived::Scalar>, bool> orient(const Eigen::MatrixBase<Derived>& X)
{
    if (X.cols() > X.rows()) {
        return {X.transpose(), true};
    }
    return {X, false};
}

namespace detail {

/// Columns with zero penalty and no data cannot influence the objective; they
/// are left out of the solve and returned as zero columns.
template <typename Derived>
std::vector<Index> active_columns(const Eigen::MatrixBase<Derived>& X, const VectorX<typename Derived::Scalar>& s)
{
    std::vector<Index> active;
    for (Index j = 0; j < X.cols(); ++j) {
        if (s[j] > 0 || X.col(j).squaredNorm() > 0) {
            active.push_back(j);
        }
    }
    return active;
}

template <typename Scalar>
MatrixX<Scalar> take_columns(const MatrixX<Scalar>& X, const std::vector<Index>& cols)
{
    MatrixX<Scalar> out(X.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(static_cast<Index>(j)) = X.col(cols[j]);
    }
    return out;
}

template <typename Scalar>
MatrixX<Scalar> scatter_columns(const MatrixX<Scalar>& part, const std::vector<Index>& cols, Index total)
{
    MatrixX<Scalar> out = MatrixX<Scalar>::Zero(part.rows(), total);
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(cols[j]) = part.col(static_cast<Index>(j));
    }
    return out;
}

template <typename Scalar>
VectorX<Scalar> take_entries(const VectorX<Scalar>& v, const std::vector<Index>& idx)
{
    VectorX<Scalar> out(static_cast<Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
        out[static_cast<Index>(j)] = v[idx[j]];
    }
    return out;
}

template <typename Scalar>
EstimateResult<Scalar> finish(MatrixX<Scalar> mu, bool transposed, Index rank, int iterations, double residual)
{
    EstimateResult<Scalar> out;
    out.mu_hat = transposed ? MatrixX<Scalar>(mu.transpose()) : std::move(mu);
    out.effective_rank = rank;
    out.iterations = iterations;
    out.final_residual = residual;
    return out;
}

template <typename Scalar, typename Shrink>
EstimateResult<Scalar> spectral_estimate(const MatrixX<Scalar>& X, Shrink&& shrink, double rank_tol)
{
    auto [Z, transposed] = orient(X);
    const auto f = svd(Z);
    VectorX<Scalar> psi(f.rank());
    for (Index l = 0; l < f.rank(); ++l) {
        psi[l] = shrink(f.d[l], l, Z.rows(), Z.cols());
    }
    const double top = f.rank() ? static_cast<double>(f.d[0]) : 0.0;
    const Index rank = rank_of_spectrum(psi, rank_tol, top);
    return finish<Scalar>(shrink_and_rebuild(f, psi), transposed, rank, 1, 0.0);
}

} // namespace detail

/// mu_hat = X B_k with B_k = solve_reduced_rank(X, S, k), in the orientation given.
template <typename Derived>
EstimateResult<typename Derived::Scalar> penalized_autoencoder(const Eigen::MatrixBase<Derived>& X,
                                                               const PenaltyDiagonal<typename Derived::Scalar>& S,
                                                               Index k,
                                                               double rank_tol = 1e-7,
                                                               const LinalgTolerances& tol = {})
{
    using Scalar = typename Derived::Scalar;
    detail::require_finite(X, "estimator input");
    detail::require(S.size() == X.cols(), "penalty diagonal length must equal the number of columns");
    detail::require(k >= 1 && k <= std::min(X.rows(), X.cols()), "rank k must lie in [1, min(n, p)]");

    const MatrixX<Scalar> Xd = X;
    const auto active = detail::active_columns(Xd, S.values());
    if (active.empty()) {
        return detail::finish<Scalar>(MatrixX<Scalar>::Zero(X.rows(), X.cols()), false, 0, 1, 0.0);
    }
    const MatrixX<Scalar> Xa = detail::take_columns(Xd, active);
    const PenaltyDiagonal<Scalar> Sa(detail::take_entries(S.values(), active));
    const Index ka = std::min<Index>(k, std::min(Xa.rows(), Xa.cols()));

    const MatrixX<Scalar> mu = detail::scatter_columns<Scalar>(Xa * solve_reduced_rank(Xa, Sa, ka, tol), active, X.cols());
    const Scalar top = singular_values(Xd)[0];
    const Index rank = rank_of_spectrum(singular_values(mu), rank_tol, static_cast<double>(top));
    return detail::finish<Scalar>(mu, false, rank, 1, 0.0);
}

/// Iterated penalized autoencoder with a fixed penalty S, in the orientation given.
///
/// Works on the p x p Gram matrices: with G0 = X'X and M_t = mu_t' mu_t,
/// B_t = (M_t + S)^{-1} M_t and M_{t+1} = B_t' G0 B_t. The step size
/// ||mu_t - mu_{t-1}||_F equals sqrt(tr(dB' G0 dB)).
template <typename Derived>
EstimateResult<typename Derived::Scalar> iterated_penalized_autoencoder(const Eigen::MatrixBase<Derived>& X,
                                                                        const PenaltyDiagonal<typename Derived::Scalar>& S,
                                                                        const IsaConfig& cfg = {},
                                                                        const IsaObserver<typename Derived::Scalar>& observer = {})
{
    using Scalar = typename Derived::Scalar;
    using Mat = MatrixX<Scalar>;
    cfg.validate();
    detail::require_finite(X, "estimator input");
    detail::require(S.size() == X.cols(), "penalty diagonal length must equal the number of columns");

    const Mat Xd = X;
    const auto active = detail::active_columns(Xd, S.values());
    const Scalar top = singular_values(Xd)[0];
    if (active.empty()) {
        return detail::finish<Scalar>(Mat::Zero(X.rows(), X.cols()), false, 0, 0, 0.0);
    }
    const Mat Xa = detail::take_columns(Xd, active);
    const VectorX<Scalar> s = detail::take_entries(S.values(), active);
    const Index p = Xa.cols();
    const double scale = std::max(static_cast<double>(Xd.norm()), 1.0);

    const Mat G0 = Xa.transpose() * Xa;
    Mat M = G0;
    Mat B_prev = Mat::Identity(p, p);
    Mat B = B_prev;
    if (observer) {
        observer(M);
    }

    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    while (iterations < cfg.max_iterations) {
        Mat A = M;
        A.diagonal() += s;
        Eigen::LLT<Mat> chol(A);
        if (chol.info() != Eigen::Success) {
            throw ill_posed_penalty("mu'mu + S is not positive definite");
        }
        B = chol.solve(M);
        M = detail::symmetric_part(B.transpose() * G0 * B);
        ++iterations;
        if (observer) {
            observer(M);
        }

        const Mat dB = B - B_prev;
        const double step2 = static_cast<double>((dB.transpose() * G0 * dB).trace());
        residual = std::sqrt(std::max(step2, 0.0)) / scale;
        B_prev = B;
        if (residual < cfg.convergence_tolerance) {
            break;
        }
    }

    const Mat mu = detail::scatter_columns<Scalar>(Xa * B, active, X.cols());
    const Index rank = rank_of_spectrum(singular_values(mu), cfg.rank_tolerance, static_cast<double>(top));
    return detail::finish<Scalar>(mu, false, rank, iterations, residual);
}

/// SA estimate under a bootstrap noise model: orient, build S from the cell
/// variances, solve, transpose back.
template <typename Derived>
EstimateResult<typename Derived::Scalar> stable_autoencoder(const Eigen::MatrixBase<Derived>& X,
                                                            const NoiseModel& model,
                                                            Index k,
                                                            const LinalgTolerances& tol = {})
{
    using Scalar = typename Derived::Scalar;
    auto [Z, transposed] = orient(X);
    auto result = penalized_autoencoder(Z, penalty_diagonal(model, Z), k, IsaConfig{}.rank_tolerance, tol);
    if (transposed) {
        result.mu_hat = MatrixX<Scalar>(result.mu_hat.transpose());
    }
    return result;
}

template <typename Derived>
EstimateResult<typename Derived::Scalar> iterated_stable_autoencoder(const Eigen::MatrixBase<Derived>& X,
                                                                     const NoiseModel& model,
                                                                     const IsaConfig& cfg = {},
                                                                     const IsaObserver<typename Derived::Scalar>& observer = {})
{
    using Scalar = typename Derived::Scalar;
    auto [Z, transposed] = orient(X);
    auto result = iterated_penalized_autoencoder(Z, penalty_diagonal(model, Z), cfg, observer);
    if (transposed) {
        result.mu_hat = MatrixX<Scalar>(result.mu_hat.transpose());
    }
    return result;
}

/// Ridge shrinker d / (1 + lambda / d^2) on the top k singular values,
/// lambda = delta/(1-delta) n sigma2 with n the row count after orienting.
template <typename Derived>
EstimateResult<typename Derived::Scalar> gaussian_sa_closed_form(const Eigen::MatrixBase<Derived>& X,
                                                                 double sigma2, double delta, Index k)
{
    using Scalar = typename Derived::Scalar;
    detail::require(sigma2 >= 0.0, "sigma2 must be nonnegative");
    detail::require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    detail::require(k >= 1 && k <= std::min(X.rows(), X.cols()), "rank k must lie in [1, min(n, p)]");
    const double odds = delta / (1.0 - delta);
    return detail::spectral_estimate<Scalar>(
        X,
        [&](Scalar d, Index l, Index n, Index) -> Scalar {
            if (l >= k || d <= Scalar(0)) {
                return Scalar(0);
            }
            const Scalar lambda = static_cast<Scalar>(odds * static_cast<double>(n) * sigma2);
            return d / (Scalar(1) + lambda / (d * d));
        },
        IsaConfig{}.rank_tolerance);
}

/// psi(d) = (d + sqrt(d^2 - 4 n sigma2)) / 2 when d^2 >= 4 n sigma2, else 0.
template <typename Scalar>
Scalar isa_gaussian_shrink(Scalar d, Index n, double sigma2)
{
    const Scalar edge = static_cast<Scalar>(4.0 * static_cast<double>(n) * sigma2);
    if (d * d < edge) {
        return Scalar(0);
    }
    return (d + std::sqrt(d * d - edge)) / Scalar(2);
}

/// Fixed point of ISA for isotropic Gaussian noise at delta = 1/2.
template <typename Derived>
EstimateResult<typename Derived::Scalar> gaussian_isa_closed_form(const Eigen::MatrixBase<Derived>& X, double sigma2)
{
    using Scalar = typename Derived::Scalar;
    detail::require(sigma2 >= 0.0, "sigma2 must be nonnegative");
    return detail::spectral_estimate<Scalar>(
        X, [&](Scalar d, Index, Index n, Index) { return isa_gaussian_shrink(d, n, sigma2); },
        IsaConfig{}.rank_tolerance);
}

/// Optimal shrinker for operator-norm loss at aspect ratio 1:
/// sqrt(d^2 - 2 n sigma2 + sqrt((d^2 - 2 n sigma2)^2 - 4 n^2 sigma2^2)) / sqrt(2).
template <typename Scalar>
Scalar operator_loss_shrink(Scalar d, Index n, double sigma2)
{
    const Scalar ns = static_cast<Scalar>(static_cast<double>(n) * sigma2);
    if (d * d < Scalar(4) * ns) {
        return Scalar(0);
    }
    // (d^2 - 2 n sigma2)^2 - 4 n^2 sigma2^2 = d^2 (d^2 - 4 n sigma2), factored to avoid cancellation
    const Scalar t = d * d - Scalar(2) * ns;
    const Scalar root = d * std::sqrt(std::max(d * d - Scalar(4) * ns, Scalar(0)));
    return std::sqrt((t + root) / Scalar(2));
}

} // namespace sae
