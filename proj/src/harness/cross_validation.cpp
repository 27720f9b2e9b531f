#include <algorithm>
#include <cmath>
#include <numeric>

#include "sae/estimators.hpp"
#include "sae/harness.hpp"
#include "sae/random.hpp"
#include "sae/shrinkers.hpp"

namespace sae {

namespace {

using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

Mask draw_mask(Index n, Index p, double fraction, Rng& rng)
{
    const Index cells = n * p;
    const Index hidden = std::max<Index>(1, static_cast<Index>(std::llround(fraction * static_cast<double>(cells))));
    std::vector<Index> order(static_cast<std::size_t>(cells));
    std::iota(order.begin(), order.end(), Index(0));

    for (int attempt = 0; attempt < 1000; ++attempt) {
        // Partial Fisher-Yates: the first `hidden` slots are a uniform subset.
        for (Index i = 0; i < hidden; ++i) {
            const Index j = std::uniform_int_distribution<Index>(i, cells - 1)(rng);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
        Mask mask = Mask::Constant(n, p, false);
        for (Index i = 0; i < hidden; ++i) {
            mask.data()[order[static_cast<std::size_t>(i)]] = true;
        }
        bool ok = true;
        for (Index i = 0; i < n && ok; ++i) {
            ok = !mask.row(i).all();
        }
        for (Index j = 0; j < p && ok; ++j) {
            ok = !mask.col(j).all();
        }
        if (ok) {
            return mask;
        }
    }
    throw invalid_input("could not draw a holdout mask that leaves every row and column observed");
}

/// Least-squares fit m + a_i + b_j to the visible cells.
Matrix additive_fit(const Matrix& X, const Mask& mask)
{
    const Index n = X.rows();
    const Index p = X.cols();
    const Matrix W = (!mask.array()).cast<double>().matrix();
    const Matrix Y = X.cwiseProduct(W);
    const double m = Y.sum() / W.sum();
    const Vector row_count = W.rowwise().sum();
    const Vector col_count = W.colwise().sum().transpose();

    Vector a = Vector::Zero(n);
    Vector b = Vector::Zero(p);
    for (int sweep = 0; sweep < 50; ++sweep) {
        a = ((Y - W * m - W * b.asDiagonal()).rowwise().sum()).cwiseQuotient(row_count);
        b = ((Y - W * m - a.asDiagonal() * W).colwise().sum().transpose()).cwiseQuotient(col_count);
    }
    return (Matrix::Constant(n, p, m) + a * Vector::Ones(p).transpose() + Vector::Ones(n) * b.transpose());
}

Matrix estimate(const Matrix& Y, const NoiseModel& model, const CvOptions& options)
{
    if (options.method == CvMethod::sa) {
        return stable_autoencoder(Y, model, options.rank).mu_hat;
    }
    return iterated_stable_autoencoder(Y, model, options.isa).mu_hat;
}

} // namespace

CvResult cross_validate_delta(const Matrix& X, NoiseKind kind, const std::vector<double>& grid, double holdout_fraction,
                              int folds, std::uint64_t seed, const CvOptions& options)
{
    detail::require_finite(X, "cross-validation input");
    detail::require(X.rows() >= 2 && X.cols() >= 2, "cross-validation needs at least a 2 x 2 matrix");
    detail::require(!grid.empty(), "delta grid is empty");
    for (double d : grid) {
        detail::require(d > 0.0 && d < 1.0, "delta grid values must lie in (0, 1)");
    }
    detail::require(holdout_fraction > 0.0 && holdout_fraction < 0.5, "holdout fraction must lie in (0, 0.5)");
    detail::require(folds >= 1, "folds must be at least 1");
    if (options.method == CvMethod::sa) {
        detail::require(options.rank >= 1 && options.rank <= std::min(X.rows(), X.cols()),
                        "cross-validating SA needs a rank in [1, min(n, p)]");
    }
    if (kind == NoiseKind::poisson) {
        detail::require((X.array() >= 0.0).all(), "poisson noise needs nonnegative entries");
    }
    if (options.sigma2) {
        detail::require(*options.sigma2 > 0.0, "sigma2 must be positive");
    }

    const double scale = std::max(1.0, X.cwiseAbs().maxCoeff());
    CvResult result;
    result.grid = grid;
    result.errors.assign(grid.size(), 0.0);

    for (int fold = 0; fold < folds; ++fold) {
        Rng rng = make_rng(seed, static_cast<std::uint64_t>(fold));
        const Mask mask = draw_mask(X.rows(), X.cols(), holdout_fraction, rng);
        const double hidden = static_cast<double>(mask.count());

        Matrix filled = mask.select(additive_fit(X, mask), X);
        if (kind == NoiseKind::poisson) {
            filled = filled.cwiseMax(0.0);
        }
        double sigma2 = 0.0;
        if (kind == NoiseKind::gaussian) {
            if (options.sigma2) {
                sigma2 = *options.sigma2;
            } else {
                const double s = estimate_sigma_mp(filled);
                sigma2 = std::max(s * s, 1e-300);
            }
        }

        for (std::size_t g = 0; g < grid.size(); ++g) {
            const NoiseModel model = kind == NoiseKind::gaussian ? NoiseModel::gaussian(sigma2, grid[g])
                                                                 : NoiseModel::poisson(grid[g]);
            Matrix Y = filled;
            Matrix mu = estimate(Y, model, options);
            for (int pass = 1; pass < options.em_passes; ++pass) {
                Matrix next = mask.select(mu, X);
                if (kind == NoiseKind::poisson) {
                    next = next.cwiseMax(0.0);
                }
                const double change = (next - Y).cwiseAbs().maxCoeff();
                Y = std::move(next);
                if (change < options.em_tolerance * scale) {
                    break;
                }
                mu = estimate(Y, model, options);
            }
            const double sse = mask.select(mu - X, Matrix::Zero(X.rows(), X.cols())).squaredNorm();
            result.errors[g] += sse / hidden / folds;
        }
    }

    std::size_t best = 0;
    for (std::size_t g = 1; g < grid.size(); ++g) {
        if (result.errors[g] < result.errors[best] ||
            (result.errors[g] == result.errors[best] && grid[g] < grid[best])) {
            best = g;
        }
    }
    result.best_delta = grid[best];
    return result;
}

} // namespace sae
