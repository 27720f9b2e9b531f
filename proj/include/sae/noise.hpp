#pragma once

// Bootstrap noise models: cell variances of the perturbed data X~ and a sampler
// for X~ itself.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "sae/linalg.hpp"
#include "sae/random.hpp"

namespace sae {

enum class NoiseKind { gaussian, poisson };

inline const char* to_string(NoiseKind kind)
{
    return kind == NoiseKind::gaussian ? "gaussian" : "poisson";
}

class NoiseModel {
public:
    /// X~ = X + e, e ~ N(0, delta/(1-delta) sigma2).
    static NoiseModel gaussian(double sigma2, double delta = 0.5)
    {
        detail::require(std::isfinite(sigma2) && sigma2 > 0.0, "gaussian noise needs sigma2 > 0");
        return NoiseModel(NoiseKind::gaussian, sigma2, delta);
    }

    /// X~ = Binomial(X, 1-delta) / (1-delta).
    static NoiseModel poisson(double delta = 0.5) { return NoiseModel(NoiseKind::poisson, 0.0, delta); }

    NoiseKind kind() const { return kind_; }
    double sigma2() const { return sigma2_; }
    double delta() const { return delta_; }

    /// delta / (1 - delta): the multiplier shared by both variance formulas.
    double odds() const { return delta_ / (1.0 - delta_); }

    NoiseModel with_delta(double delta) const { return NoiseModel(kind_, sigma2_, delta); }

private:
    NoiseModel(NoiseKind kind, double sigma2, double delta) : kind_(kind), sigma2_(sigma2), delta_(delta)
    {
        detail::require(std::isfinite(delta) && delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    }

    NoiseKind kind_;
    double sigma2_;
    double delta_;
};

namespace detail {

template <typename Derived>
void check_counts(const NoiseModel& model, const Eigen::MatrixBase<Derived>& X)
{
    require_finite(X, "noise model input");
    if (model.kind() == NoiseKind::poisson) {
        require((X.array() >= typename Derived::Scalar(0)).all(), "poisson noise needs nonnegative entries");
    }
}

} // namespace detail

/// V_ij = Var[X~_ij].
template <typename Derived>
MatrixX<typename Derived::Scalar> variance_matrix(const NoiseModel& model, const Eigen::MatrixBase<Derived>& X)
{
    using Scalar = typename Derived::Scalar;
    detail::check_counts(model, X);
    const Scalar odds = static_cast<Scalar>(model.odds());
    if (model.kind() == NoiseKind::gaussian) {
        return MatrixX<Scalar>::Constant(X.rows(), X.cols(), odds * static_cast<Scalar>(model.sigma2()));
    }
    return odds * X;
}

/// S_jj = sum_i V_ij.
template <typename Derived>
PenaltyDiagonal<typename Derived::Scalar> penalty_diagonal(const Eigen::MatrixBase<Derived>& V)
{
    using Scalar = typename Derived::Scalar;
    detail::require(V.allFinite() && (V.array() >= Scalar(0)).all(), "variances must be finite and nonnegative");
    return PenaltyDiagonal<Scalar>(V.colwise().sum().transpose());
}

template <typename Derived>
PenaltyDiagonal<typename Derived::Scalar> penalty_diagonal(const NoiseModel& model, const Eigen::MatrixBase<Derived>& X)
{
    return penalty_diagonal(variance_matrix(model, X));
}

/// One bootstrap pseudo-dataset X~. Poisson entries are rounded to the nearest
/// count before thinning.
template <typename Derived>
MatrixX<typename Derived::Scalar> sample(const NoiseModel& model, const Eigen::MatrixBase<Derived>& X, Rng& rng)
{
    using Scalar = typename Derived::Scalar;
    detail::check_counts(model, X);
    MatrixX<Scalar> out(X.rows(), X.cols());

    if (model.kind() == NoiseKind::gaussian) {
        std::normal_distribution<double> normal(0.0, std::sqrt(model.odds() * model.sigma2()));
        for (Index j = 0; j < X.cols(); ++j) {
            for (Index i = 0; i < X.rows(); ++i) {
                out(i, j) = X(i, j) + static_cast<Scalar>(normal(rng));
            }
        }
        return out;
    }

    const double keep = 1.0 - model.delta();
    for (Index j = 0; j < X.cols(); ++j) {
        for (Index i = 0; i < X.rows(); ++i) {
            const auto trials = static_cast<std::int64_t>(std::llround(static_cast<double>(X(i, j))));
            out(i, j) = static_cast<Scalar>(static_cast<double>(sample_binomial(trials, keep, rng)) / keep);
        }
    }
    return out;
}

} // namespace sae
