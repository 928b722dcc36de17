#pragma once

// AR(p) regression on core-tensor series with optional d-th order differencing
// (the ARIMA(p,d,0) device): Yule-Walker statistics, proximal-regularized
// fitting, one-step forecasting.
//
// Differencing is handled through the levels polynomial
//   pi(B) = (1 - B)^d (1 - sum_i alpha_i B^i),  pi_0 = 1,
// so the regression residual at time t is sum_u pi_u G_{t-u}. This is
// algebraically identical to differencing d times, regressing, and
// integrating back with the retained tail values.

#include "topa/linalg.hpp"
#include "topa/tensor.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace topa {

struct ARSpec {
    int p = 1;  // regression order, >= 1
    int d = 0;  // differencing order, 0..2 supported

    void validate() const {
        if (p < 1) throw std::invalid_argument("ARSpec: p must be >= 1");
        if (d < 0 || d > 2) throw std::invalid_argument("ARSpec: d must be in [0, 2]");
    }
    /// Number of past values a forecast needs.
    int memory() const { return p + d; }
};

template <class Scalar>
struct ARParams {
    Vector<Scalar> alpha;  // length p

    static ARParams zeros(int p) { return {Vector<Scalar>::Zero(p)}; }
};

/// Successive differences, applied d times; output length shrinks by d.
template <class Scalar>
std::vector<Tensor<Scalar>> difference(std::span<const Tensor<Scalar>> series, int d) {
    std::vector<Tensor<Scalar>> cur(series.begin(), series.end());
    for (int k = 0; k < d; ++k) {
        if (cur.size() < 2) throw std::invalid_argument("difference: series too short");
        std::vector<Tensor<Scalar>> next;
        next.reserve(cur.size() - 1);
        for (std::size_t i = 1; i < cur.size(); ++i) next.push_back(cur[i] - cur[i - 1]);
        cur = std::move(next);
    }
    return cur;
}

/// Coefficients pi_0..pi_{p+d} of (1 - B)^d (1 - sum alpha_i B^i).
template <class Scalar>
std::vector<Scalar> level_coeffs(const ARParams<Scalar>& params, const ARSpec& spec) {
    const int p = static_cast<int>(params.alpha.size());
    if (p != spec.p) throw std::invalid_argument("level_coeffs: alpha length != spec.p");
    std::vector<Scalar> pi(static_cast<std::size_t>(p) + 1, Scalar(0));
    pi[0] = Scalar(1);
    for (int i = 1; i <= p; ++i) pi[static_cast<std::size_t>(i)] = -params.alpha[i - 1];
    for (int k = 0; k < spec.d; ++k) {  // multiply by (1 - B)
        std::vector<Scalar> nxt(pi.size() + 1, Scalar(0));
        for (std::size_t u = 0; u < pi.size(); ++u) {
            nxt[u] += pi[u];
            nxt[u + 1] -= pi[u];
        }
        pi = std::move(nxt);
    }
    return pi;
}

/// Yule-Walker accumulation over a series of same-shape tensors:
/// the normal-equation system R alpha = r of the least-squares AR(p) fit,
///   R[i][j] = sum_{t=p+1..T} <G_{t-i}, G_{t-j}>,  r[i] = sum_t <G_{t-i}, G_t>,
/// with the bracket conjugating the lag-i factor, so R is Hermitian PSD and
/// the solve recovers the true coefficients in the complex field as well.
template <class Scalar>
std::pair<Matrix<Scalar>, Vector<Scalar>> yule_walker_stats(std::span<const Tensor<Scalar>> series, int p) {
    const Index t_len = static_cast<Index>(series.size());
    if (p < 1) throw std::invalid_argument("yule_walker_stats: p must be >= 1");
    if (t_len < p + 1) throw std::invalid_argument("yule_walker_stats: series shorter than p + 1");

    Matrix<Scalar> r_mat = Matrix<Scalar>::Zero(p, p);
    Vector<Scalar> r_vec = Vector<Scalar>::Zero(p);
    for (Index t = p; t < t_len; ++t) {  // 0-based targets: t = p .. T-1
        for (int i = 0; i < p; ++i) {
            const auto& lag_i = series[static_cast<std::size_t>(t - 1 - i)];
            r_vec[i] += inner(series[static_cast<std::size_t>(t)], lag_i);
            for (int j = 0; j < p; ++j)
                r_mat(i, j) += inner(series[static_cast<std::size_t>(t - 1 - j)], lag_i);
        }
    }
    return {std::move(r_mat), std::move(r_vec)};
}

/// Proximal AR fit: differences the series d times, then solves
/// (R + (lambda/2) I) alpha = r + (lambda/2) alpha_prev. With lambda = 0 this
/// is the exact least-squares minimizer of sum_t |G_t - sum_i alpha_i G_{t-i}|_F^2
/// on the differenced series.
template <class Scalar>
ARParams<Scalar> fit_ar(std::span<const Tensor<Scalar>> series, const ARSpec& spec, double lambda,
                        const ARParams<Scalar>& alpha_prev) {
    spec.validate();
    if (alpha_prev.alpha.size() != spec.p) throw std::invalid_argument("fit_ar: alpha_prev length != p");
    auto diffed = difference(series, spec.d);
    if (static_cast<int>(diffed.size()) < spec.p + 1)
        throw std::invalid_argument("fit_ar: series shorter than p + 1 after differencing");
    auto [r_mat, r_vec] = yule_walker_stats<Scalar>(diffed, spec.p);
    return {solve_reg_normal<Scalar>(r_mat, r_vec, lambda, alpha_prev.alpha)};
}

/// One-step-ahead forecast of the next series element:
/// G_hat_{T+1} = -sum_{u=1..p+d} pi_u G_{T+1-u}.
template <class Scalar>
Tensor<Scalar> forecast(const ARParams<Scalar>& params, const ARSpec& spec, std::span<const Tensor<Scalar>> series) {
    spec.validate();
    const int mem = spec.memory();
    if (static_cast<int>(series.size()) < mem) throw std::invalid_argument("forecast: series shorter than p + d");
    const auto pi = level_coeffs(params, spec);
    Tensor<Scalar> out(series.back().dims());
    for (int u = 1; u <= mem; ++u)
        out += series[series.size() - static_cast<std::size_t>(u)] * (-pi[static_cast<std::size_t>(u)]);
    return out;
}

}  // namespace topa
