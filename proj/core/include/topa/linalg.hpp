#pragma once

// The two dense kernels the closed-form block updates need: a thin SVD and a
// small regularized Hermitian solve. Both wrap Eigen; the factor matrices here
// are small (I_m x R_m with R_m <= I_m), so JacobiSVD is accurate and fast
// enough.

#include "topa/tensor.hpp"

#include <Eigen/SVD>
#include <Eigen/Cholesky>

#include <stdexcept>

namespace topa {

struct SingularSystemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class Scalar>
struct ThinSvd {
    Matrix<Scalar> left;        // I x R, orthonormal columns
    Vector<double> singular;    // R, descending, nonnegative
    Matrix<Scalar> right;       // R x R, unitary; A = left * diag(singular) * right^H
};

template <class Scalar>
ThinSvd<Scalar> thin_svd(const Matrix<Scalar>& a) {
    if (a.rows() == 0 || a.cols() == 0) throw std::invalid_argument("thin_svd: empty matrix");
    if (a.rows() < a.cols()) throw std::invalid_argument("thin_svd: expected rows >= cols");
    Eigen::JacobiSVD<Matrix<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Orthonormal polar factor L * R^H of W: the maximizer of Re trace(U^H W)
/// over matrices with orthonormal columns.
template <class Scalar>
Matrix<Scalar> procrustes(const Matrix<Scalar>& w) {
    auto svd = thin_svd(w);
    return svd.left * svd.right.adjoint();
}

/// Solves (R + (lambda/2) I) alpha = r + (lambda/2) alpha_prev for a Hermitian
/// PSD R via Cholesky. lambda > 0 makes the system positive definite; with
/// lambda = 0 a rank-deficient R is reported as SingularSystemError.
template <class Scalar>
Vector<Scalar> solve_reg_normal(const Matrix<Scalar>& r_mat, const Vector<Scalar>& r_vec, double lambda,
                                const Vector<Scalar>& alpha_prev) {
    if (r_mat.rows() != r_mat.cols() || r_mat.rows() != r_vec.size() || r_vec.size() != alpha_prev.size())
        throw std::invalid_argument("solve_reg_normal: inconsistent shapes");
    if (lambda < 0) throw std::invalid_argument("solve_reg_normal: lambda must be >= 0");

    Matrix<Scalar> lhs = r_mat;
    lhs.diagonal().array() += Scalar(0.5 * lambda);
    Vector<Scalar> rhs = r_vec + Scalar(0.5 * lambda) * alpha_prev;

    Eigen::LLT<Matrix<Scalar>> llt(lhs);
    if (llt.info() != Eigen::Success)
        throw SingularSystemError("solve_reg_normal: system is singular (lambda = 0 and R rank-deficient?)");
    return llt.solve(rhs);
}

}  // namespace topa
