#pragma once

// Automatically adaptive weights for the sliding-window update: each window
// time gets a weight combining an age damping factor with a floored
// decomposition-quality factor; the newest observation always has weight 1.

#include "topa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace topa {

struct AAWConfig {
    Index tau = 8;            // window length, >= 2 and > p + d
    double alpha_damp = 0.9;  // age damping, in (0, 1)
    double beta = 0.6;        // residual-factor floor, in (0, 1)

    void validate() const {
        if (tau < 2) throw std::invalid_argument("AAWConfig: tau must be >= 2");
        if (!(alpha_damp > 0.0 && alpha_damp < 1.0))
            throw std::invalid_argument("AAWConfig: alpha_damp must be in (0, 1)");
        if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("AAWConfig: beta must be in (0, 1)");
    }
};

/// Weights for the window times t = T-tau+2 .. T+1 (clamped to the start of
/// the stream); weights.back() is omega_{T+1} = 1.
struct WeightVector {
    std::vector<double> weights;
};

/// Relative joint-decomposition residual
/// eps_t = |X_t - G_t prod_m x_m U_m|_F^2 / |X_t|_F^2.
template <class Scalar>
double residual_eps(const Tensor<Scalar>& x, const Tensor<Scalar>& g, std::span<const Matrix<Scalar>> us) {
    const double xsq = x.squared_norm();
    if (xsq == 0.0) throw std::invalid_argument("residual_eps: zero-norm observation");
    return (x - from_core(g, us)).squared_norm() / xsq;
}

/// omega_t = (1 - alpha_damp^{t-(T-tau+1)}) * max{beta, 1 - eps_t} for window-
/// interior t, omega_{T+1} = 1. `residuals` holds eps_t for t = T-tau+2 .. T
/// (fewer when the stream is shorter than the window); entries may exceed 1,
/// in which case the beta floor is active.
inline WeightVector compute_weights(const AAWConfig& cfg, Index t_now, std::span<const double> residuals) {
    cfg.validate();
    WeightVector out;
    out.weights.reserve(residuals.size() + 1);
    // residuals.back() corresponds to t = T; walk forward from the oldest.
    const Index t_first = t_now - static_cast<Index>(residuals.size()) + 1;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        const Index t = t_first + static_cast<Index>(i);
        const Index age_exp = t - (t_now - cfg.tau + 1);
        const double damping = 1.0 - std::pow(cfg.alpha_damp, static_cast<double>(age_exp));
        const double quality = std::max(cfg.beta, 1.0 - residuals[i]);
        out.weights.push_back(damping * quality);
    }
    out.weights.push_back(1.0);
    return out;
}

}  // namespace topa
