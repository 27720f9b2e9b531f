#pragma once

// Classical singular-value shrinkers used as baselines, and the two noise
// scale estimators they rely on.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sae/estimators.hpp"
#include "sae/linalg.hpp"
#include "sae/marchenko_pastur.hpp"

namespace sae {

enum class LnScale { sigma2, n_sigma2 };

inline LnScale parse_ln_scale(const std::string& s)
{
    if (s == "sigma2") {
        return LnScale::sigma2;
    }
    if (s == "n_sigma2") {
        return LnScale::n_sigma2;
    }
    throw invalid_input("unknown ln_scale '" + s + "' (expected sigma2 or n_sigma2)");
}

namespace detail {

template <typename Derived, typename Shrink>
MatrixX<typename Derived::Scalar> shrink_oriented(const Eigen::MatrixBase<Derived>& X, Shrink&& shrink)
{
    using Scalar = typename Derived::Scalar;
    require_finite(X, "shrinker input");
    return spectral_estimate<Scalar>(MatrixX<Scalar>(X), std::forward<Shrink>(shrink), 1e-7).mu_hat;
}

inline void require_sigma(double sigma)
{
    require(std::isfinite(sigma) && sigma > 0.0, "sigma must be positive");
}

} // namespace detail

/// Closest rank-k matrix.
template <typename Derived>
MatrixX<typename Derived::Scalar> tsvd_k(const Eigen::MatrixBase<Derived>& X, Index k)
{
    detail::require(k >= 1 && k <= std::min(X.rows(), X.cols()), "rank k must lie in [1, min(n, p)]");
    return truncate(svd(X), k);
}

/// Optimal hard-threshold coefficient lambda*(beta) for known noise level.
inline double optimal_hard_threshold(double beta)
{
    detail::require(beta > 0.0 && beta <= 1.0, "aspect ratio must lie in (0, 1]");
    return std::sqrt(2.0 * (beta + 1.0) + 8.0 * beta / ((beta + 1.0) + std::sqrt(beta * beta + 14.0 * beta + 1.0)));
}

/// Keeps singular values above lambda*(beta) sqrt(n) sigma.
template <typename Derived>
MatrixX<typename Derived::Scalar> tsvd_tau(const Eigen::MatrixBase<Derived>& X, double sigma)
{
    using Scalar = typename Derived::Scalar;
    detail::require_sigma(sigma);
    return detail::shrink_oriented(X, [&](Scalar d, Index, Index n, Index p) {
        const double beta = static_cast<double>(p) / static_cast<double>(n);
        const double tau = optimal_hard_threshold(beta) * std::sqrt(static_cast<double>(n)) * sigma;
        return static_cast<double>(d) > tau ? d : Scalar(0);
    });
}

/// Frobenius-optimal shrinker for a spiked model:
/// psi(d) = sqrt((d^2 - (1 + beta) n sigma^2)^2 - 4 beta n^2 sigma^4) / d above the bulk edge.
template <typename Scalar>
Scalar asymp_shrink(Scalar d, Index n, Index p, double sigma)
{
    const double nn = static_cast<double>(n);
    const double beta = static_cast<double>(p) / nn;
    const double s2 = sigma * sigma;
    const double dd = static_cast<double>(d);
    const double edge = (1.0 + std::sqrt(beta)) * (1.0 + std::sqrt(beta)) * nn * s2;
    if (dd * dd < edge || dd <= 0.0) {
        return Scalar(0);
    }
    const double t = dd * dd - (1.0 + beta) * nn * s2;
    return static_cast<Scalar>(std::sqrt(std::max(t * t - 4.0 * beta * nn * nn * s2 * s2, 0.0)) / dd);
}

template <typename Derived>
MatrixX<typename Derived::Scalar> asymp(const Eigen::MatrixBase<Derived>& X, double sigma)
{
    using Scalar = typename Derived::Scalar;
    detail::require_sigma(sigma);
    return detail::shrink_oriented(X, [&](Scalar d, Index, Index n, Index p) { return asymp_shrink(d, n, p, sigma); });
}

/// psi(d_l) = d_l (1 - s / d_l^2) for l <= k, clamped at zero, with s = sigma^2
/// or n sigma^2 depending on `scale`.
template <typename Derived>
MatrixX<typename Derived::Scalar> ln_shrink(const Eigen::MatrixBase<Derived>& X, Index k, double sigma,
                                            LnScale scale = LnScale::sigma2)
{
    using Scalar = typename Derived::Scalar;
    detail::require(sigma >= 0.0, "sigma must be nonnegative");
    detail::require(k >= 1 && k <= std::min(X.rows(), X.cols()), "rank k must lie in [1, min(n, p)]");
    return detail::shrink_oriented(X, [&](Scalar d, Index l, Index n, Index) {
        if (l >= k || d <= Scalar(0)) {
            return Scalar(0);
        }
        const double s = (scale == LnScale::n_sigma2 ? static_cast<double>(n) : 1.0) * sigma * sigma;
        const double dd = static_cast<double>(d);
        return static_cast<Scalar>(std::max(dd * (1.0 - s / (dd * dd)), 0.0));
    });
}

/// Stein unbiased risk estimate for singular-value soft thresholding.
class SoftThresholdSure {
public:
    /// d: singular values (descending) of an n x p matrix; sigma: noise level.
    SoftThresholdSure(std::vector<double> d, Index n, Index p, double sigma)
        : d_(std::move(d)), dp_(d_), n_(n), p_(p), s2_(sigma * sigma)
    {
        const double top = d_.empty() ? 0.0 : d_.front();
        for (std::size_t i = 1; i < dp_.size(); ++i) {
            if (dp_[i] > 0.0 && dp_[i] >= dp_[i - 1] - 1e-10) {
                dp_[i] = dp_[i - 1] - 1e-9 * top;
            }
        }
    }

    double divergence(double tau) const
    {
        const double gap = std::abs(static_cast<double>(n_ - p_));
        double div = 0.0;
        for (std::size_t i = 0; i < dp_.size(); ++i) {
            const double di = dp_[i];
            if (!(di > tau)) {
                continue;
            }
            div += 1.0 + gap * (1.0 - tau / di);
            for (std::size_t j = 0; j < dp_.size(); ++j) {
                if (j != i) {
                    div += 2.0 * di * (di - tau) / (di * di - dp_[j] * dp_[j]);
                }
            }
        }
        return div;
    }

    double operator()(double tau) const
    {
        double fit = 0.0;
        for (double di : d_) {
            const double m = std::min(di, tau);
            fit += m * m;
        }
        return -static_cast<double>(n_) * static_cast<double>(p_) * s2_ + fit + 2.0 * s2_ * divergence(tau);
    }

    /// Unconstrained minimiser of the quadratic piece active on (d_{m+1}, d_m),
    /// where exactly the first m values exceed tau.
    double stationary_point(std::size_t m) const
    {
        const double gap = std::abs(static_cast<double>(n_ - p_));
        double slope = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double di = dp_[i];
            slope += gap / di;
            for (std::size_t j = 0; j < dp_.size(); ++j) {
                if (j != i) {
                    slope += 2.0 * di / (di * di - dp_[j] * dp_[j]);
                }
            }
        }
        return s2_ * slope / static_cast<double>(m);
    }

    const std::vector<double>& values() const { return d_; }

private:
    std::vector<double> d_;
    std::vector<double> dp_; // ties separated, used in the divergence only
    Index n_;
    Index p_;
    double s2_;
};

template <typename Scalar>
struct SvstResult {
    MatrixX<Scalar> estimate;
    double tau = 0.0;
    double sure = 0.0;
};

/// Soft thresholding at the SURE-minimising tau. Candidates are 0, every
/// singular value, and the stationary point of each quadratic piece of SURE.
template <typename Derived>
SvstResult<typename Derived::Scalar> svst_sure(const Eigen::MatrixBase<Derived>& X, double sigma)
{
    using Scalar = typename Derived::Scalar;
    detail::require_sigma(sigma);
    auto [Z, transposed] = orient(X);
    const auto f = svd(Z);

    std::vector<double> d(f.d.data(), f.d.data() + f.d.size());
    const SoftThresholdSure sure(d, Z.rows(), Z.cols(), sigma);

    std::vector<double> candidates{0.0};
    candidates.insert(candidates.end(), d.begin(), d.end());
    for (std::size_t m = 1; m <= d.size() && d[m - 1] > 0.0; ++m) {
        const double lo = m < d.size() ? d[m] : 0.0;
        const double t = sure.stationary_point(m);
        if (t > lo && t < d[m - 1]) {
            candidates.push_back(t);
        }
    }

    SvstResult<Scalar> out;
    out.sure = std::numeric_limits<double>::infinity();
    for (double tau : candidates) {
        const double value = sure(tau);
        if (value < out.sure || (value == out.sure && tau < out.tau)) {
            out.sure = value;
            out.tau = tau;
        }
    }

    VectorX<Scalar> psi(f.rank());
    for (Index l = 0; l < f.rank(); ++l) {
        psi[l] = std::max(f.d[l] - static_cast<Scalar>(out.tau), Scalar(0));
    }
    MatrixX<Scalar> est = shrink_and_rebuild(f, psi);
    out.estimate = transposed ? MatrixX<Scalar>(est.transpose()) : std::move(est);
    return out;
}

/// sigma^2 estimate from the residual of a rank-k fit:
/// sum_{l > k} d_l^2 / (np - nk - kp + k^2).
template <typename Derived>
double estimate_sigma_residual(const Eigen::MatrixBase<Derived>& X, Index k)
{
    detail::require_finite(X, "sigma estimator input");
    const double n = static_cast<double>(X.rows());
    const double p = static_cast<double>(X.cols());
    const double kk = static_cast<double>(k);
    const double denom = n * p - n * kk - kk * p + kk * kk;
    detail::require(k >= 0 && denom > 0.0, "residual sigma estimator needs (n - k)(p - k) > 0");
    const auto d = singular_values(X);
    double tail = 0.0;
    for (Index l = k; l < d.size(); ++l) {
        tail += static_cast<double>(d[l]) * static_cast<double>(d[l]);
    }
    return tail / denom;
}

/// Robust sigma estimate d_med / sqrt(n mu_beta), mu_beta the Marchenko-Pastur median.
template <typename Derived>
double estimate_sigma_mp(const Eigen::MatrixBase<Derived>& X)
{
    detail::require(X.rows() >= 2 && X.cols() >= 2, "MP sigma estimator needs at least a 2 x 2 matrix");
    auto [Z, transposed] = orient(X);
    (void)transposed;
    const auto dv = singular_values(Z);
    std::vector<double> d(dv.data(), dv.data() + dv.size());
    std::sort(d.begin(), d.end());
    const std::size_t r = d.size();
    const double med = r % 2 ? d[r / 2] : 0.5 * (d[r / 2 - 1] + d[r / 2]);
    const double n = static_cast<double>(Z.rows());
    const double beta = static_cast<double>(Z.cols()) / n;
    return med / std::sqrt(n * mp::median(beta));
}

} // namespace sae
