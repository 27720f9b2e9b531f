#pragma once

// Dense decompositions and the rank-constrained weighted encoder solve that
// every estimator in the library reduces to.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "sae/errors.hpp"

namespace sae {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Numerical thresholds shared by the decompositions.
struct LinalgTolerances {
    /// Eigenvalues of X'X + S below this fraction of the largest are treated as zero.
    double eigen_floor = 1e-12;
    /// A singular-vector entry at or below this magnitude does not fix the sign.
    double sign_zero = 1e-12;
};

/// Thin SVD with singular values in descending order.
template <typename Scalar>
struct SvdFactors {
    MatrixX<Scalar> U;
    VectorX<Scalar> d;
    MatrixX<Scalar> V;

    Index rank() const { return d.size(); }

    MatrixX<Scalar> reconstruct() const { return U * d.asDiagonal() * V.transpose(); }
};

/// Diagonal of the p x p penalty S in ||X - XB||^2 + ||S^{1/2} B||^2.
template <typename Scalar>
class PenaltyDiagonal {
public:
    PenaltyDiagonal() = default;

    explicit PenaltyDiagonal(VectorX<Scalar> values) : values_(std::move(values))
    {
        detail::require(values_.allFinite(), "penalty diagonal must be finite");
        detail::require((values_.array() >= Scalar(0)).all(), "penalty diagonal must be nonnegative");
    }

    static PenaltyDiagonal constant(Index p, Scalar value)
    {
        return PenaltyDiagonal(VectorX<Scalar>::Constant(p, value));
    }

    const VectorX<Scalar>& values() const { return values_; }
    Index size() const { return values_.size(); }
    Scalar operator[](Index j) const { return values_[j]; }

    PenaltyDiagonal scaled(Scalar c) const { return PenaltyDiagonal(values_ * c); }

private:
    VectorX<Scalar> values_;
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& X, const char* what)
{
    require(X.rows() > 0 && X.cols() > 0, std::string(what) + " must be non-empty");
    require(X.allFinite(), std::string(what) + " has non-finite entries");
}

template <typename Derived>
MatrixX<typename Derived::Scalar> symmetric_part(const Eigen::MatrixBase<Derived>& A)
{
    return (A + A.transpose()) / typename Derived::Scalar(2);
}

} // namespace detail

/// Thin SVD of X with the sign of each right singular vector fixed so that its
/// first non-negligible component is positive (U follows).
template <typename Derived>
SvdFactors<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& X,
                                         const LinalgTolerances& tol = {})
{
    using Scalar = typename Derived::Scalar;
    detail::require_finite(X, "svd input");

    Eigen::BDCSVD<MatrixX<Scalar>> solver(X.eval(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactors<Scalar> f{solver.matrixU(), solver.singularValues(), solver.matrixV()};

    for (Index l = 0; l < f.rank(); ++l) {
        for (Index i = 0; i < f.V.rows(); ++i) {
            const Scalar v = f.V(i, l);
            if (std::abs(v) > Scalar(tol.sign_zero)) {
                if (v < Scalar(0)) {
                    f.V.col(l) *= Scalar(-1);
                    f.U.col(l) *= Scalar(-1);
                }
                break;
            }
        }
    }
    return f;
}

template <typename Derived>
VectorX<typename Derived::Scalar> singular_values(const Eigen::MatrixBase<Derived>& X)
{
    using Scalar = typename Derived::Scalar;
    detail::require_finite(X, "svd input");
    Eigen::BDCSVD<MatrixX<Scalar>> solver(X.eval());
    return solver.singularValues();
}

/// Sum_l u_l psi_l v_l'.
template <typename Scalar, typename Derived>
MatrixX<Scalar> shrink_and_rebuild(const SvdFactors<Scalar>& f, const Eigen::MatrixBase<Derived>& psi)
{
    detail::require(psi.size() == f.rank(), "shrinkage vector length must equal the number of singular values");
    detail::require(psi.allFinite() && (psi.array() >= Scalar(0)).all(),
                    "shrunk singular values must be finite and nonnegative");
    return f.U * psi.asDiagonal() * f.V.transpose();
}

/// Best rank-k approximation from precomputed factors.
template <typename Scalar>
MatrixX<Scalar> truncate(const SvdFactors<Scalar>& f, Index k)
{
    detail::require(k >= 0 && k <= f.rank(), "truncation rank out of range");
    return f.U.leftCols(k) * f.d.head(k).asDiagonal() * f.V.leftCols(k).transpose();
}

/// ||X - XB||_F^2 + ||S^{1/2} B||_F^2.
template <typename DX, typename DB>
typename DX::Scalar reduced_rank_objective(const Eigen::MatrixBase<DX>& X,
                                           const PenaltyDiagonal<typename DX::Scalar>& S,
                                           const Eigen::MatrixBase<DB>& B)
{
    const auto fit = (X - X * B).squaredNorm();
    const auto penalty = (S.values().array().sqrt().matrix().asDiagonal() * B).squaredNorm();
    return fit + penalty;
}

namespace detail {

template <typename Scalar>
struct GramRoot {
    MatrixX<Scalar> gram;     // X'X
    MatrixX<Scalar> inv_sqrt; // (X'X + S)^{-1/2}
    MatrixX<Scalar> inverse;  // (X'X + S)^{-1}
};

template <typename Derived>
GramRoot<typename Derived::Scalar> penalized_gram_root(const Eigen::MatrixBase<Derived>& X,
                                                       const PenaltyDiagonal<typename Derived::Scalar>& S,
                                                       const LinalgTolerances& tol)
{
    using Scalar = typename Derived::Scalar;
    require(S.size() == X.cols(), "penalty diagonal length must equal the number of columns");

    GramRoot<Scalar> out;
    out.gram = X.transpose() * X;
    MatrixX<Scalar> G = out.gram;
    G.diagonal() += S.values();

    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(G);
    if (eig.info() != Eigen::Success) {
        throw ill_posed_penalty("eigendecomposition of X'X + S failed");
    }
    const VectorX<Scalar>& lambda = eig.eigenvalues();
    const Scalar top = lambda.maxCoeff();
    if (!(top > Scalar(0)) || lambda.minCoeff() <= Scalar(tol.eigen_floor) * top) {
        throw ill_posed_penalty("X'X + S is singular: smallest eigenvalue " + std::to_string(double(lambda.minCoeff())) +
                                " vs largest " + std::to_string(double(top)));
    }
    const MatrixX<Scalar>& E = eig.eigenvectors();
    out.inv_sqrt = E * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * E.transpose();
    out.inverse = E * lambda.cwiseInverse().asDiagonal() * E.transpose();
    return out;
}

} // namespace detail

/// Unconstrained minimiser (X'X + S)^{-1} X'X of the penalised autoencoder.
template <typename Derived>
MatrixX<typename Derived::Scalar> ridge_encoder(const Eigen::MatrixBase<Derived>& X,
                                                const PenaltyDiagonal<typename Derived::Scalar>& S,
                                                const LinalgTolerances& tol = {})
{
    detail::require_finite(X, "encoder input");
    const auto root = detail::penalized_gram_root(X, S, tol);
    return root.inverse * root.gram;
}

/// Encoder B_k minimising ||X - XB||^2 + ||S^{1/2}B||^2 subject to rank(B) <= k.
///
/// With G = X'X + S the objective equals ||G^{1/2}(B - B_hat)||^2 up to a
/// constant, where B_hat is the unconstrained solution. Since G^{1/2} is
/// invertible, G^{1/2}B ranges over all rank-k matrices, so the minimiser is
/// G^{-1/2} [G^{1/2} B_hat]_k with [.]_k the truncated SVD. Note that
/// G^{1/2} B_hat = G^{-1/2} X'X.
template <typename Derived>
MatrixX<typename Derived::Scalar> solve_reduced_rank(const Eigen::MatrixBase<Derived>& X,
                                                     const PenaltyDiagonal<typename Derived::Scalar>& S,
                                                     Index k,
                                                     const LinalgTolerances& tol = {})
{
    detail::require_finite(X, "encoder input");
    detail::require(k >= 1 && k <= std::min(X.rows(), X.cols()), "rank k must lie in [1, min(n, p)]");

    const auto root = detail::penalized_gram_root(X, S, tol);
    const MatrixX<typename Derived::Scalar> whitened = root.inv_sqrt * root.gram;
    return root.inv_sqrt * truncate(svd(whitened, tol), k);
}

/// A <= B in the Loewner order: the smallest eigenvalue of B - A is at least -tol.
template <typename DA, typename DB>
bool psd_leq(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& B, double tol)
{
    using Scalar = typename DA::Scalar;
    detail::require(A.rows() == A.cols() && B.rows() == B.cols() && A.rows() == B.rows(),
                    "psd_leq needs square matrices of equal size");
    detail::require((A - A.transpose()).cwiseAbs().maxCoeff() <= tol, "psd_leq: first argument is not symmetric");
    detail::require((B - B.transpose()).cwiseAbs().maxCoeff() <= tol, "psd_leq: second argument is not symmetric");

    const MatrixX<Scalar> diff = detail::symmetric_part(B - A);
    Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(diff, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= Scalar(-tol);
}

} // namespace sae
