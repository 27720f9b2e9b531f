#pragma once

// Marchenko-Pastur law with unit variance and aspect ratio beta in (0, 1]:
// density sqrt((b - x)(x - a)) / (2 pi beta x) on [a, b] = [(1 - sqrt beta)^2, (1 + sqrt beta)^2].

#include <cmath>
#include <numbers>

#include "sae/errors.hpp"

namespace sae::mp {

struct Support {
    double lower;
    double upper;
};

inline Support support(double beta)
{
    sae::detail::require(beta > 0.0 && beta <= 1.0, "Marchenko-Pastur aspect ratio must lie in (0, 1]");
    const double r = std::sqrt(beta);
    return {(1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
}

namespace detail {

// With x = a + (b - a) sin^2(theta / 2) the square-root endpoints disappear
// and the integrand is smooth on [0, pi].
inline double integrand(double theta, double a, double b, double beta)
{
    const double s = std::sin(0.5 * theta);
    const double c = std::cos(0.5 * theta);
    if (a == 0.0) {
        return b * c * c / (2.0 * std::numbers::pi * beta);
    }
    const double w = b - a;
    return w * w * s * s * c * c / (2.0 * std::numbers::pi * beta * (a + w * s * s));
}

inline double simpson(double lo, double hi, double flo, double fmid, double fhi)
{
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
}

template <typename F>
double adaptive_simpson(F&& f, double lo, double hi, double flo, double fmid, double fhi, double whole, double eps,
                        int depth)
{
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid);
    const double rm = 0.5 * (mid + hi);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson(lo, mid, flo, flm, fmid);
    const double right = simpson(mid, hi, fmid, frm, fhi);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson(f, lo, mid, flo, flm, fmid, left, 0.5 * eps, depth - 1) +
           adaptive_simpson(f, mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth - 1);
}

} // namespace detail

/// P(x <= m) under the law.
inline double cdf(double m, double beta, double eps = 1e-13)
{
    const auto [a, b] = support(beta);
    if (m <= a) {
        return 0.0;
    }
    if (m >= b) {
        return 1.0;
    }
    const double theta = 2.0 * std::asin(std::sqrt((m - a) / (b - a)));
    auto f = [&](double t) { return detail::integrand(t, a, b, beta); };
    const double f0 = f(0.0);
    const double fm = f(0.5 * theta);
    const double f1 = f(theta);
    const double whole = detail::simpson(0.0, theta, f0, fm, f1);
    return detail::adaptive_simpson(f, 0.0, theta, f0, fm, f1, whole, eps, 50);
}

/// Median of the law, by bisection on the CDF.
inline double median(double beta)
{
    auto [lo, hi] = support(beta);
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid, beta) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace sae::mp
