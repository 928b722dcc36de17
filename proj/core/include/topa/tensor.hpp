#pragma once

// Dense order-M tensor over double or complex<double> scalars, plus the
// multilinear kernels (unfolding, mode product, joint projection) the
// predictor is built on.
//
// Memory layout: the last index varies fastest, i.e. element (i_0,...,i_{M-1})
// lives at flat offset ((i_0*I_1 + i_1)*I_2 + ...) + i_{M-1}.
//
// Unfolding convention: unfold(X, m) is the I_m x (prod_{l != m} I_l) matrix
// whose column index runs over the remaining modes in ascending order with the
// lowest-numbered remaining mode varying fastest.

#include <Eigen/Dense>

#include <complex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace topa {

using Index = Eigen::Index;
using Complex = std::complex<double>;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
inline constexpr bool is_complex_v = false;
template <>
inline constexpr bool is_complex_v<Complex> = true;

/// Field-generic conjugate (std::conj would promote double to complex).
template <class Scalar>
Scalar conj_scalar(const Scalar& v) {
    if constexpr (is_complex_v<Scalar>)
        return std::conj(v);
    else
        return v;
}

namespace detail {

inline Index checked_volume(std::span<const Index> dims) {
    if (dims.empty()) throw std::invalid_argument("tensor must have order >= 1");
    Index n = 1;
    for (Index d : dims) {
        if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
        if (d != 0 && n > std::numeric_limits<Index>::max() / d)
            throw std::invalid_argument("tensor volume overflows Index");
        n *= d;
    }
    return n;
}

}  // namespace detail

template <class Scalar>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<Index> dims)
        : dims_(std::move(dims)), data_(Vector<Scalar>::Zero(detail::checked_volume(dims_))) {}

    Tensor(std::vector<Index> dims, Vector<Scalar> data) : dims_(std::move(dims)), data_(std::move(data)) {
        if (data_.size() != detail::checked_volume(dims_))
            throw std::invalid_argument("tensor data length does not match dimensions");
    }

    Index order() const { return static_cast<Index>(dims_.size()); }
    const std::vector<Index>& dims() const { return dims_; }
    Index dim(Index m) const { return dims_.at(static_cast<std::size_t>(m)); }
    Index size() const { return data_.size(); }

    Vector<Scalar>& data() { return data_; }
    const Vector<Scalar>& data() const { return data_; }

    Scalar& operator[](Index flat) { return data_[flat]; }
    const Scalar& operator[](Index flat) const { return data_[flat]; }

    Index flat_index(std::span<const Index> idx) const {
        if (idx.size() != dims_.size()) throw std::invalid_argument("index order mismatch");
        Index f = 0;
        for (std::size_t m = 0; m < dims_.size(); ++m) {
            if (idx[m] < 0 || idx[m] >= dims_[m]) throw std::out_of_range("tensor index out of range");
            f = f * dims_[m] + idx[m];
        }
        return f;
    }

    Scalar& at(std::initializer_list<Index> idx) { return data_[flat_index({idx.begin(), idx.size()})]; }
    const Scalar& at(std::initializer_list<Index> idx) const {
        return data_[flat_index({idx.begin(), idx.size()})];
    }

    bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

    double squared_norm() const { return data_.squaredNorm(); }
    double norm() const { return data_.norm(); }

    Tensor& operator+=(const Tensor& o) { require_same_shape(o); data_ += o.data_; return *this; }
    Tensor& operator-=(const Tensor& o) { require_same_shape(o); data_ -= o.data_; return *this; }
    Tensor& operator*=(Scalar c) { data_ *= c; return *this; }
    Tensor& operator/=(Scalar c) { data_ /= c; return *this; }

    friend Tensor operator+(Tensor a, const Tensor& b) { a += b; return a; }
    friend Tensor operator-(Tensor a, const Tensor& b) { a -= b; return a; }
    friend Tensor operator*(Tensor a, Scalar c) { a *= c; return a; }
    friend Tensor operator*(Scalar c, Tensor a) { a *= c; return a; }

private:
    void require_same_shape(const Tensor& o) const {
        if (!same_shape(o)) throw std::invalid_argument("tensor shape mismatch");
    }

    std::vector<Index> dims_;
    Vector<Scalar> data_;
};

using TensorR = Tensor<double>;
using TensorC = Tensor<Complex>;

/// Real tensor reinterpreted in the complex field (imaginary parts all zero).
inline TensorC widen(const TensorR& x) {
    return TensorC(x.dims(), x.data().template cast<Complex>());
}

/// <X, Y> = sum_e X_e * conj(Y_e); conjugate-linear in Y, so inner(X, X) = |X|_F^2.
template <class Scalar>
Scalar inner(const Tensor<Scalar>& x, const Tensor<Scalar>& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("inner: shape mismatch");
    // Eigen's dot conjugates its *object* argument: y.dot(x) = sum conj(y) x.
    return y.data().dot(x.data());
}

template <class Scalar>
double frob_norm(const Tensor<Scalar>& x) {
    return x.norm();
}

template <class Scalar>
double tuple_sq_norm(std::span<const Tensor<Scalar>> xs) {
    double s = 0.0;
    for (const auto& x : xs) s += x.squared_norm();
    return s;
}

/// |(X_1,...,X_n)|_F = sqrt(sum |X_i|_F^2).
template <class Scalar>
double tuple_norm(std::span<const Tensor<Scalar>> xs) {
    return std::sqrt(tuple_sq_norm(xs));
}

template <class Scalar>
Matrix<Scalar> unfold(const Tensor<Scalar>& x, Index mode) {
    const Index order = x.order();
    if (mode < 0 || mode >= order) throw std::out_of_range("unfold: mode out of range");
    const auto& dims = x.dims();
    const Index rows = dims[static_cast<std::size_t>(mode)];
    const Index cols = x.size() / rows;

    // Column strides for remaining modes, lowest remaining mode fastest.
    std::vector<Index> cstride(static_cast<std::size_t>(order), 0);
    Index acc = 1;
    for (Index l = 0; l < order; ++l) {
        if (l == mode) continue;
        cstride[static_cast<std::size_t>(l)] = acc;
        acc *= dims[static_cast<std::size_t>(l)];
    }

    Matrix<Scalar> out(rows, cols);
    std::vector<Index> idx(static_cast<std::size_t>(order), 0);
    const Index n = x.size();
    for (Index f = 0; f < n; ++f) {
        Index col = 0;
        for (Index l = 0; l < order; ++l)
            if (l != mode) col += idx[static_cast<std::size_t>(l)] * cstride[static_cast<std::size_t>(l)];
        out(idx[static_cast<std::size_t>(mode)], col) = x[f];
        // advance multi-index, last mode fastest
        for (Index l = order - 1; l >= 0; --l) {
            auto& il = idx[static_cast<std::size_t>(l)];
            if (++il < dims[static_cast<std::size_t>(l)]) break;
            il = 0;
        }
    }
    return out;
}

template <class Scalar>
Tensor<Scalar> fold(const Matrix<Scalar>& mx, Index mode, std::vector<Index> dims) {
    const Index order = static_cast<Index>(dims.size());
    if (mode < 0 || mode >= order) throw std::out_of_range("fold: mode out of range");
    Tensor<Scalar> out(std::move(dims));
    const auto& d = out.dims();
    if (mx.rows() != d[static_cast<std::size_t>(mode)] || mx.cols() != out.size() / mx.rows())
        throw std::invalid_argument("fold: matrix shape inconsistent with dims");

    std::vector<Index> cstride(static_cast<std::size_t>(order), 0);
    Index acc = 1;
    for (Index l = 0; l < order; ++l) {
        if (l == mode) continue;
        cstride[static_cast<std::size_t>(l)] = acc;
        acc *= d[static_cast<std::size_t>(l)];
    }

    std::vector<Index> idx(static_cast<std::size_t>(order), 0);
    const Index n = out.size();
    for (Index f = 0; f < n; ++f) {
        Index col = 0;
        for (Index l = 0; l < order; ++l)
            if (l != mode) col += idx[static_cast<std::size_t>(l)] * cstride[static_cast<std::size_t>(l)];
        out[f] = mx(idx[static_cast<std::size_t>(mode)], col);
        for (Index l = order - 1; l >= 0; --l) {
            auto& il = idx[static_cast<std::size_t>(l)];
            if (++il < d[static_cast<std::size_t>(l)]) break;
            il = 0;
        }
    }
    return out;
}

/// X x_m U: contracts mode m of X against the columns of U (U.cols() == I_m),
/// replacing I_m by U.rows(). Satisfies unfold(result, m) = U * unfold(X, m).
template <class Scalar>
Tensor<Scalar> mode_product(const Tensor<Scalar>& x, const Matrix<Scalar>& u, Index mode) {
    const Index order = x.order();
    if (mode < 0 || mode >= order) throw std::out_of_range("mode_product: mode out of range");
    const auto& dims = x.dims();
    const Index im = dims[static_cast<std::size_t>(mode)];
    if (u.cols() != im) throw std::invalid_argument("mode_product: U.cols() != I_m");

    std::vector<Index> odims = dims;
    odims[static_cast<std::size_t>(mode)] = u.rows();
    Tensor<Scalar> out(std::move(odims));

    // Flat layout splits as [outer][I_m][inner]; each outer slice is a GEMM.
    Index outer = 1, inner = 1;
    for (Index l = 0; l < mode; ++l) outer *= dims[static_cast<std::size_t>(l)];
    for (Index l = mode + 1; l < order; ++l) inner *= dims[static_cast<std::size_t>(l)];

    const Matrix<Scalar> ut = u.transpose();
    for (Index o = 0; o < outer; ++o) {
        Eigen::Map<const Matrix<Scalar>> src(x.data().data() + o * im * inner, inner, im);
        Eigen::Map<Matrix<Scalar>> dst(out.data().data() + o * u.rows() * inner, inner, u.rows());
        dst.noalias() = src * ut;
    }
    return out;
}

/// Sequential mode products over every mode: X prod_m x_m U_m (conjugate=false)
/// or X prod_m x_m U_m^H (conjugate=true). Us[m].cols() (resp. rows) must match
/// the evolving mode-m dimension.
template <class Scalar>
Tensor<Scalar> multi_project(const Tensor<Scalar>& x, std::span<const Matrix<Scalar>> us, bool conjugate) {
    if (static_cast<Index>(us.size()) != x.order())
        throw std::invalid_argument("multi_project: need one factor per mode");
    Tensor<Scalar> cur = x;
    for (Index m = 0; m < x.order(); ++m) {
        const auto& u = us[static_cast<std::size_t>(m)];
        cur = conjugate ? mode_product(cur, Matrix<Scalar>(u.adjoint()), m) : mode_product(cur, u, m);
    }
    return cur;
}

/// Core of X in the joint subspaces: X prod_m x_m U_m^H.
template <class Scalar>
Tensor<Scalar> to_core(const Tensor<Scalar>& x, std::span<const Matrix<Scalar>> us) {
    return multi_project(x, us, true);
}

/// Reconstruction from a core: G prod_m x_m U_m.
template <class Scalar>
Tensor<Scalar> from_core(const Tensor<Scalar>& g, std::span<const Matrix<Scalar>> us) {
    return multi_project(g, us, false);
}

}  // namespace topa
