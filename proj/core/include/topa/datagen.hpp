#pragma once

// Seeded synthetic streaming TTS generators: a jointly low-rank noisy model
// (core series from an entrywise ARIMA(p,d,0) recursion, shared random
// orthonormal subspaces, exact-ratio Gaussian noise) plus a drifting-subspace
// variant where each mode's subspace rotates by a fixed planar rotation per
// step.

#include "topa/ar.hpp"
#include "topa/linalg.hpp"
#include "topa/predictor.hpp"
#include "topa/rng.hpp"
#include "topa/tensor.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace topa {

struct SynthConfig {
    std::vector<Index> dims;
    std::vector<Index> ranks;
    Index t_len = 70;
    double rho = 0.1;                                  // noise-to-signal Frobenius ratio
    std::vector<double> core_coeffs = {0.5, -0.3, 0.2};  // AR coefficients of the differenced cores
    int core_diff = 1;                                 // differencing order of the core model
    double drift_angle = 0.0;                          // radians per step; 0 = static subspaces
    std::uint64_t seed = 0;

    void validate() const {
        if (dims.empty() || dims.size() != ranks.size())
            throw std::invalid_argument("SynthConfig: dims/ranks must be nonempty and aligned");
        for (std::size_t m = 0; m < dims.size(); ++m)
            if (ranks[m] < 1 || ranks[m] > dims[m]) throw std::invalid_argument("SynthConfig: need 1 <= R_m <= I_m");
        if (t_len < 1) throw std::invalid_argument("SynthConfig: t_len must be >= 1");
        if (rho < 0.0) throw std::invalid_argument("SynthConfig: rho must be >= 0");
        if (core_coeffs.empty()) throw std::invalid_argument("SynthConfig: core_coeffs must be nonempty");
        if (core_diff < 0 || core_diff > 2) throw std::invalid_argument("SynthConfig: core_diff must be in [0, 2]");
        if (drift_angle < 0.0) throw std::invalid_argument("SynthConfig: drift_angle must be >= 0");
        if (spectral_radius(core_coeffs) >= 1.0 - 1e-9)
            throw std::invalid_argument("SynthConfig: unstable core AR coefficients (companion spectral radius >= 1)");
    }

    /// Spectral radius of the AR companion matrix.
    static double spectral_radius(const std::vector<double>& coeffs) {
        const Index p = static_cast<Index>(coeffs.size());
        Matrix<double> comp = Matrix<double>::Zero(p, p);
        for (Index j = 0; j < p; ++j) comp(0, j) = coeffs[static_cast<std::size_t>(j)];
        comp.block(1, 0, p - 1, p - 1).setIdentity();
        return comp.eigenvalues().cwiseAbs().maxCoeff();
    }
};

/// Ground-truth decomposition alongside the observable record.
template <class Scalar>
struct SynthTTS {
    std::vector<Tensor<Scalar>> observations;            // X_t = signal_t + noise
    std::vector<Tensor<Scalar>> signals;                 // G_t prod x_m U_m(t)
    std::vector<Tensor<Scalar>> cores;                   // G_t
    std::vector<std::vector<Matrix<Scalar>>> subspaces;  // U_m(t) per step (drifting) or a single entry
};

/// Random joint subspaces: orthonormalized seeded Gaussian matrices.
template <class Scalar>
std::vector<Matrix<Scalar>> gen_subspaces(const SynthConfig& cfg) {
    cfg.validate();
    GaussianSampler rng(mix_seed(cfg.seed, 1));
    std::vector<Matrix<Scalar>> us;
    us.reserve(cfg.dims.size());
    for (std::size_t m = 0; m < cfg.dims.size(); ++m)
        us.push_back(procrustes(rng.matrix<Scalar>(cfg.dims[m], cfg.ranks[m])));
    return us;
}

/// Core series from an entrywise ARIMA(p,d,0) recursion with unit Gaussian
/// innovations; the recursion runs 50 burn-in steps that are discarded.
template <class Scalar>
std::vector<Tensor<Scalar>> gen_core_series(const SynthConfig& cfg) {
    cfg.validate();
    ARSpec spec{static_cast<int>(cfg.core_coeffs.size()), cfg.core_diff};
    ARParams<Scalar> params = ARParams<Scalar>::zeros(spec.p);
    for (int i = 0; i < spec.p; ++i) params.alpha[i] = Scalar(cfg.core_coeffs[static_cast<std::size_t>(i)]);
    const auto pi = level_coeffs(params, spec);
    const int mem = spec.memory();

    constexpr Index kBurnIn = 50;
    GaussianSampler rng(mix_seed(cfg.seed, 2));
    std::vector<Tensor<Scalar>> series;
    series.reserve(static_cast<std::size_t>(kBurnIn + cfg.t_len));
    std::vector<Index> rdims(cfg.ranks.begin(), cfg.ranks.end());
    for (Index t = 0; t < kBurnIn + cfg.t_len; ++t) {
        Tensor<Scalar> g = rng.tensor<Scalar>(rdims);  // innovation
        for (int u = 1; u <= mem && u <= t; ++u)
            g -= series[static_cast<std::size_t>(t - u)] * pi[static_cast<std::size_t>(u)];
        series.push_back(std::move(g));
    }
    series.erase(series.begin(), series.begin() + kBurnIn);
    return series;
}

namespace detail {

/// Rotation by `angle` in a random 2-plane of the ambient space.
template <class Scalar>
Matrix<Scalar> planar_rotation(Index n, double angle, GaussianSampler& rng) {
    Matrix<Scalar> basis = procrustes(rng.matrix<Scalar>(n, std::min<Index>(2, n)));
    Matrix<Scalar> q = Matrix<Scalar>::Identity(n, n);
    if (basis.cols() < 2) return q;
    const auto u = basis.col(0);
    const auto v = basis.col(1);
    const double c = std::cos(angle), s = std::sin(angle);
    q += Scalar(c - 1.0) * (u * u.adjoint() + v * v.adjoint());
    q += Scalar(s) * (v * u.adjoint() - u * v.adjoint());
    return q;
}

}  // namespace detail

/// Full synthetic stream: X_t = G_t prod x_m U_m(t) + rho |G_t|_F E_t with E_t
/// a seeded Gaussian tensor normalized to unit Frobenius norm, so the
/// noise-to-signal ratio is exactly rho at every step. With drift_angle > 0
/// each U_m advances by a fixed random planar rotation per step.
template <class Scalar>
SynthTTS<Scalar> synth_tts(const SynthConfig& cfg) {
    cfg.validate();
    SynthTTS<Scalar> out;
    out.cores = gen_core_series<Scalar>(cfg);
    std::vector<Matrix<Scalar>> us = gen_subspaces<Scalar>(cfg);

    GaussianSampler noise_rng(mix_seed(cfg.seed, 3));
    GaussianSampler drift_rng(mix_seed(cfg.seed, 4));
    std::vector<Matrix<Scalar>> rotations;
    if (cfg.drift_angle > 0.0)
        for (Index d : cfg.dims) rotations.push_back(detail::planar_rotation<Scalar>(d, cfg.drift_angle, drift_rng));

    out.subspaces.push_back(us);
    for (Index t = 0; t < cfg.t_len; ++t) {
        if (t > 0 && cfg.drift_angle > 0.0) {
            for (std::size_t m = 0; m < us.size(); ++m) us[m] = rotations[m] * us[m];
            out.subspaces.push_back(us);
        }
        const auto& g = out.cores[static_cast<std::size_t>(t)];
        Tensor<Scalar> signal = from_core(g, std::span<const Matrix<Scalar>>(us));
        Tensor<Scalar> x = signal;
        if (cfg.rho > 0.0) {
            Tensor<Scalar> e = noise_rng.tensor<Scalar>(signal.dims());
            const double en = e.norm();
            if (en > 0.0) x += e * Scalar(cfg.rho * g.norm() / en);
        }
        out.signals.push_back(std::move(signal));
        out.observations.push_back(std::move(x));
    }
    return out;
}

}  // namespace topa
