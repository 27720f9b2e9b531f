#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>

#include "sae/harness.hpp"
#include "sae/random.hpp"

namespace sae {

namespace {

Vector bump(Index length, Index begin, Index end, double center, double width)
{
    Vector v = Vector::Zero(length);
    for (Index i = begin; i < end; ++i) {
        const double z = (static_cast<double>(i) - center) / width;
        v[i] = std::exp(-0.5 * z * z);
    }
    return v;
}

constexpr Index kPoissonRows = 50;
constexpr Index kPoissonCols = 20;

} // namespace

GaussianInstance gen_gaussian_instance(Index n, Index p, Index k, double snr, std::uint64_t seed)
{
    detail::require(n > 0 && p > 0, "instance dimensions must be positive");
    detail::require(k >= 1 && k <= std::min(n, p), "rank k must lie in [1, min(n, p)]");
    detail::require(snr > 0.0, "snr must be positive");

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](Index r, Index c) {
        Matrix A(r, c);
        for (Index j = 0; j < c; ++j) {
            for (Index i = 0; i < r; ++i) {
                A(i, j) = normal(rng);
            }
        }
        return A;
    };

    const Matrix L = draw(n, k);
    const Matrix R = draw(p, k);
    GaussianInstance inst;
    inst.mu = L * R.transpose();
    inst.mu /= inst.mu.norm();
    inst.sigma = 1.0 / (snr * std::sqrt(static_cast<double>(n) * static_cast<double>(p)));
    inst.X = inst.mu + inst.sigma * draw(n, p);
    return inst;
}

const std::vector<BumpComponent>& poisson_signal_components()
{
    // Disjoint row and column blocks, so the component norms are exactly the
    // singular values of the sum.
    static const std::vector<BumpComponent> components{
        {0, 25, 12.0, 10.0, 0, 10, 5.0, 5.0, 1.1},        // diffuse
        {25, 40, 32.5, 1.875, 10, 16, 13.0, 0.75, 1.4},   // mid-width
        {40, 50, 49.0, 0.6, 16, 20, 19.0, 0.5, 1.0},      // corner
    };
    return components;
}

Matrix poisson_signal(double total)
{
    detail::require(total > 0.0, "total count must be positive");
    Matrix mu = Matrix::Zero(kPoissonRows, kPoissonCols);
    for (const auto& c : poisson_signal_components()) {
        const Vector a = bump(kPoissonRows, c.row_begin, c.row_end, c.row_center, c.row_width);
        const Vector b = bump(kPoissonCols, c.col_begin, c.col_end, c.col_center, c.col_width);
        mu += c.singular_value / (a.norm() * b.norm()) * a * b.transpose();
    }
    return mu * (total / mu.sum());
}

PoissonInstance gen_poisson_instance(double total, std::uint64_t seed)
{
    PoissonInstance inst;
    inst.mu = poisson_signal(total);
    inst.X.resize(inst.mu.rows(), inst.mu.cols());
    Rng rng(seed);
    for (Index j = 0; j < inst.mu.cols(); ++j) {
        for (Index i = 0; i < inst.mu.rows(); ++i) {
            std::poisson_distribution<std::int64_t> poisson(inst.mu(i, j));
            inst.X(i, j) = static_cast<double>(poisson(rng));
        }
    }
    return inst;
}

Matrix subsample_counts(const Matrix& X, std::int64_t n_sub, std::uint64_t seed)
{
    detail::require_finite(X, "count table");
    std::vector<std::int64_t> cumulative;
    cumulative.reserve(static_cast<std::size_t>(X.size()));
    std::int64_t total = 0;
    for (Index idx = 0; idx < X.size(); ++idx) {
        const double v = X.data()[idx];
        detail::require(v >= 0.0 && v == std::floor(v), "subsampling needs nonnegative integer counts");
        total += static_cast<std::int64_t>(v);
        cumulative.push_back(total);
    }
    detail::require(n_sub > 0 && n_sub <= total, "subsample size must lie in [1, sum(X)]");

    // Floyd's algorithm: n_sub distinct unit indices out of [0, total).
    Rng rng(seed);
    std::unordered_set<std::int64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(n_sub) * 2);
    for (std::int64_t j = total - n_sub; j < total; ++j) {
        const std::int64_t t = std::uniform_int_distribution<std::int64_t>(0, j)(rng);
        if (!chosen.insert(t).second) {
            chosen.insert(j);
        }
    }

    Matrix out = Matrix::Zero(X.rows(), X.cols());
    for (std::int64_t unit : chosen) {
        const auto cell = std::upper_bound(cumulative.begin(), cumulative.end(), unit) - cumulative.begin();
        out.data()[cell] += 1.0;
    }
    return out;
}

} // namespace sae
