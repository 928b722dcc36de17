#pragma once

// Joint-Tucker online predictor: objective evaluation, the three proximal
// block updates (regression parameters, projection matrices, core series),
// batch fitting on a starting series, and the online ingest/update/predict
// cycle, in plain and sliding-window (weighted) forms.
//
// State layout: `cores` holds the retained core series; the first `frozen`
// entries are sliding-window leftovers kept only as fixed regression context
// (never updated, no paired observation). `history` holds the observations
// for the remaining (active) cores, index-aligned.

#include "topa/ar.hpp"
#include "topa/linalg.hpp"
#include "topa/rng.hpp"
#include "topa/tensor.hpp"
#include "topa/weights.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace topa {

enum class CoreUpdateMode {
    PaperForm,   // printed closed forms: later residuals where G_t is a regressor are ignored
    ExactBlock,  // exact single-block minimizer including those terms; guarantees descent
};

struct Hyperparams {
    std::vector<Index> ranks;  // R_1..R_M
    ARSpec spec;
    double varphi = 10.0;       // decomposition regularizer, > 0
    double lambda = 1.0;        // proximal step size, >= 0
    double eps = 1e-6;          // squared-change stopping tolerance
    int max_iter_stage1 = 200;
    int iters_online = 1;       // sweeps per online update
    CoreUpdateMode core_update_mode = CoreUpdateMode::PaperForm;

    void validate(std::span<const Index> dims) const {
        spec.validate();
        if (ranks.size() != dims.size()) throw std::invalid_argument("Hyperparams: one rank per mode required");
        for (std::size_t m = 0; m < ranks.size(); ++m)
            if (ranks[m] < 1 || ranks[m] > dims[m])
                throw std::invalid_argument("Hyperparams: ranks must satisfy 1 <= R_m <= I_m");
        if (!(varphi > 0.0)) throw std::invalid_argument("Hyperparams: varphi must be > 0");
        if (lambda < 0.0) throw std::invalid_argument("Hyperparams: lambda must be >= 0");
        if (!(eps > 0.0)) throw std::invalid_argument("Hyperparams: eps must be > 0");
        if (max_iter_stage1 < 1) throw std::invalid_argument("Hyperparams: max_iter_stage1 must be >= 1");
        if (iters_online < 1) throw std::invalid_argument("Hyperparams: iters_online must be >= 1");
    }
};

struct IterRecord {
    double objective;  // F after the sweep (F at the start point for the first record)
    double step_sq;    // |dG|^2 + |dU|^2 + |dP|^2 of the sweep
};

template <class Scalar>
struct PredictorState {
    std::vector<Matrix<Scalar>> subspaces;  // U_m, I_m x R_m, orthonormal columns
    std::vector<Tensor<Scalar>> cores;      // frozen context (first `frozen`), then active cores
    Index frozen = 0;
    std::vector<Tensor<Scalar>> history;    // observations aligned with the active cores
    ARParams<Scalar> params;
    Index time_index = 0;                   // T: sampling time of the newest retained observation
    double objective = 0.0;                 // last evaluated F
    std::vector<IterRecord> trace;          // per-iteration record of the last fit/update

    Index order() const { return static_cast<Index>(subspaces.size()); }
    Index active_count() const { return static_cast<Index>(cores.size()) - frozen; }
    const Tensor<Scalar>& active_core(Index i) const { return cores[static_cast<std::size_t>(frozen + i)]; }
};

/// Throws unless the state satisfies its structural invariants
/// (orthonormal subspaces within 1e-8, aligned lengths, consistent shapes).
template <class Scalar>
void validate_state(const PredictorState<Scalar>& st) {
    if (st.frozen < 0 || st.frozen > static_cast<Index>(st.cores.size()))
        throw std::logic_error("state: frozen count out of range");
    if (st.active_count() != static_cast<Index>(st.history.size()))
        throw std::logic_error("state: history not aligned with active cores");
    for (const auto& u : st.subspaces) {
        const double dev = (u.adjoint() * u - Matrix<Scalar>::Identity(u.cols(), u.cols())).norm();
        if (!(dev <= 1e-8)) throw std::logic_error("state: subspace columns not orthonormal");
    }
    for (const auto& g : st.cores) {
        if (g.order() != st.order()) throw std::logic_error("state: core order mismatch");
        for (Index m = 0; m < st.order(); ++m)
            if (g.dim(m) != st.subspaces[static_cast<std::size_t>(m)].cols())
                throw std::logic_error("state: core dims do not match ranks");
    }
    for (const auto& x : st.history) {
        if (x.order() != st.order()) throw std::logic_error("state: observation order mismatch");
        for (Index m = 0; m < st.order(); ++m)
            if (x.dim(m) != st.subspaces[static_cast<std::size_t>(m)].rows())
                throw std::logic_error("state: observation dims do not match subspaces");
    }
}

namespace detail {

template <class Scalar>
void check_weights(const PredictorState<Scalar>& st, const std::vector<double>* weights) {
    if (weights && static_cast<Index>(weights->size()) != st.active_count())
        throw std::invalid_argument("weights must align with the active cores");
}

inline double weight_at(const std::vector<double>* weights, Index i) {
    return weights ? (*weights)[static_cast<std::size_t>(i)] : 1.0;
}

/// X projected onto the current subspaces along `modes` in ascending order.
template <class Scalar>
Tensor<Scalar> chain_project(const Tensor<Scalar>& x, std::span<const Matrix<Scalar>> us, Index first_mode,
                             Index last_mode, Index skip) {
    Tensor<Scalar> cur = x;
    for (Index m = first_mode; m <= last_mode; ++m) {
        if (m == skip) continue;
        cur = mode_product(cur, Matrix<Scalar>(us[static_cast<std::size_t>(m)].adjoint()), m);
    }
    return cur;
}

}  // namespace detail

/// F value: sum of squared regression residuals over all well-defined targets
/// plus varphi * sum_i w_i |G_i - X_i prod x_m U_m^H|_F^2 over the active
/// cores (w_i = 1 when `weights` is absent). `projections` optionally supplies
/// precomputed X_i prod x_m U_m^H values for the current subspaces.
template <class Scalar>
double objective(const PredictorState<Scalar>& st, const Hyperparams& hp,
                 const std::vector<double>* weights = nullptr,
                 const std::vector<Tensor<Scalar>>* projections = nullptr) {
    detail::check_weights(st, weights);
    const int mem = hp.spec.memory();
    const auto pi = level_coeffs(st.params, hp.spec);
    const Index total = static_cast<Index>(st.cores.size());

    double reg = 0.0;
    for (Index c = mem; c < total; ++c) {
        Tensor<Scalar> rho = st.cores[static_cast<std::size_t>(c)];
        for (int u = 1; u <= mem; ++u)
            rho += st.cores[static_cast<std::size_t>(c - u)] * pi[static_cast<std::size_t>(u)];
        reg += rho.squared_norm();
    }

    double dec = 0.0;
    for (Index i = 0; i < st.active_count(); ++i) {
        const Tensor<Scalar> proj = projections
                                        ? (*projections)[static_cast<std::size_t>(i)]
                                        : to_core(st.history[static_cast<std::size_t>(i)],
                                                  std::span<const Matrix<Scalar>>(st.subspaces));
        dec += detail::weight_at(weights, i) * (st.active_core(i) - proj).squared_norm();
    }
    return reg + hp.varphi * dec;
}

/// New U_m: orthonormal polar factor of
///   W = sum_i w_i (X_i prod_{l != m} x_l U_l^H)_(m) (G_i)_(m)^H + (lambda/2 varphi) U_m.
/// Preconditions: modes 0..m-1 already updated this sweep (Gauss-Seidel order).
/// `prefixes`, when given, holds X_i with modes 0..m-1 already projected.
///
/// The polar factor maximizes the trace-linear part of the block subproblem
/// but, for the core-space residual |G - H x_m U^H|^2, the quadratic part
/// tr(U^H S U) still depends on U, so the step can increase the block
/// objective. In ExactBlock mode the candidate is therefore accepted only if
/// its prox-augmented block objective does not increase (else U_m is kept),
/// which restores the per-block descent certificate.
template <class Scalar>
Matrix<Scalar> update_projection(const PredictorState<Scalar>& st, const Hyperparams& hp, Index m,
                                 const std::vector<double>* weights = nullptr,
                                 const std::vector<Tensor<Scalar>>* prefixes = nullptr) {
    detail::check_weights(st, weights);
    if (m < 0 || m >= st.order()) throw std::out_of_range("update_projection: mode out of range");
    const auto& u_old = st.subspaces[static_cast<std::size_t>(m)];
    const std::span<const Matrix<Scalar>> us(st.subspaces);
    const bool guard = hp.core_update_mode == CoreUpdateMode::ExactBlock;

    Matrix<Scalar> v_acc = Matrix<Scalar>::Zero(u_old.rows(), u_old.cols());
    Matrix<Scalar> s_acc;  // sum_i w_i (H_i)_(m) (H_i)_(m)^H, only under the guard
    if (guard) s_acc = Matrix<Scalar>::Zero(u_old.rows(), u_old.rows());
    for (Index i = 0; i < st.active_count(); ++i) {
        const Tensor<Scalar>& base = prefixes ? (*prefixes)[static_cast<std::size_t>(i)]
                                              : st.history[static_cast<std::size_t>(i)];
        const Index first = prefixes ? m + 1 : 0;
        const Tensor<Scalar> h = detail::chain_project(base, us, first, st.order() - 1, m);
        const double wi = detail::weight_at(weights, i);
        const Matrix<Scalar> h_unf = unfold(h, m);
        v_acc.noalias() += Scalar(wi) * (h_unf * unfold(st.active_core(i), m).adjoint());
        if (guard) s_acc.noalias() += Scalar(wi) * (h_unf * h_unf.adjoint());
    }
    Matrix<Scalar> w_acc = v_acc + Scalar(hp.lambda / (2.0 * hp.varphi)) * u_old;
    Matrix<Scalar> cand = procrustes(w_acc);

    if (guard) {
        const Matrix<Scalar> diff = cand - u_old;
        const double delta = hp.varphi * (-2.0 * std::real((diff.adjoint() * v_acc).trace()) +
                                          std::real((cand.adjoint() * s_acc * cand).trace()) -
                                          std::real((u_old.adjoint() * s_acc * u_old).trace())) +
                             0.5 * hp.lambda * diff.squaredNorm();
        if (delta > 0.0) return u_old;
    }
    return cand;
}

/// New active core i (combined position frozen + i). PaperForm reproduces the
/// printed closed forms; ExactBlock solves the full single-block quadratic,
/// including the residuals at later times where this core appears as a
/// regressor (held at their current values). Preconditions: subspaces and
/// regression parameters already updated this sweep, as are cores before i.
/// `projection` optionally supplies X_i prod x_m U_m^H.
template <class Scalar>
Tensor<Scalar> update_core(const PredictorState<Scalar>& st, const Hyperparams& hp, Index i,
                           const std::vector<double>* weights = nullptr,
                           const Tensor<Scalar>* projection = nullptr) {
    detail::check_weights(st, weights);
    if (i < 0 || i >= st.active_count()) throw std::out_of_range("update_core: active index out of range");
    const int mem = hp.spec.memory();
    const auto pi = level_coeffs(st.params, hp.spec);
    const Index c = st.frozen + i;
    const Index total = static_cast<Index>(st.cores.size());
    const double wi = detail::weight_at(weights, i);
    const double phi_w = hp.varphi * wi;
    const double half_lambda = 0.5 * hp.lambda;

    const Tensor<Scalar> proj = projection ? *projection
                                           : to_core(st.history[static_cast<std::size_t>(i)],
                                                     std::span<const Matrix<Scalar>>(st.subspaces));
    const Tensor<Scalar>& g_old = st.cores[static_cast<std::size_t>(c)];

    Tensor<Scalar> numer = proj * Scalar(phi_w) + g_old * Scalar(half_lambda);
    double denom = phi_w + half_lambda;

    if (hp.core_update_mode == CoreUpdateMode::PaperForm) {
        if (c >= mem) {
            for (int u = 1; u <= mem; ++u)
                numer -= st.cores[static_cast<std::size_t>(c - u)] * pi[static_cast<std::size_t>(u)];
            denom += 1.0;
        }
    } else {
        const Index s_lo = std::max<Index>(mem, c);
        const Index s_hi = std::min<Index>(total - 1, c + mem);
        for (Index s = s_lo; s <= s_hi; ++s) {
            const Scalar coef = pi[static_cast<std::size_t>(s - c)];
            // a_s: residual at s with this core's contribution removed
            Tensor<Scalar> a_s(g_old.dims());
            for (int u = 0; u <= mem; ++u) {
                if (s - u == c) continue;
                a_s += st.cores[static_cast<std::size_t>(s - u)] * pi[static_cast<std::size_t>(u)];
            }
            numer -= a_s * conj_scalar(coef);
            denom += std::norm(coef);
        }
    }
    return numer * Scalar(1.0 / denom);
}

/// One proximal alternating sweep in place (P, then U_0..U_{M-1}, then the
/// active cores); returns the squared total change. `projections_out`, when
/// given, receives X_i prod x_m U_m^H under the updated subspaces.
template <class Scalar>
double run_sweep(PredictorState<Scalar>& st, const Hyperparams& hp,
                 const std::vector<double>* weights = nullptr,
                 std::vector<Tensor<Scalar>>* projections_out = nullptr) {
    detail::check_weights(st, weights);
    const Index n_active = st.active_count();
    const Index order = st.order();
    double step_sq = 0.0;

    ARParams<Scalar> new_params =
        fit_ar(std::span<const Tensor<Scalar>>(st.cores), hp.spec, hp.lambda, st.params);
    step_sq += (new_params.alpha - st.params.alpha).squaredNorm();
    st.params = std::move(new_params);

    // Gauss-Seidel over modes, carrying partially projected observations so the
    // mode-m accumulation reuses modes < m instead of re-projecting from scratch.
    std::vector<Tensor<Scalar>> prefixes;
    for (Index m = 0; m < order; ++m) {
        Matrix<Scalar> u_new = update_projection(st, hp, m, weights, m == 0 ? nullptr : &prefixes);
        step_sq += (u_new - st.subspaces[static_cast<std::size_t>(m)]).squaredNorm();
        st.subspaces[static_cast<std::size_t>(m)] = std::move(u_new);

        const Matrix<Scalar> u_adj = st.subspaces[static_cast<std::size_t>(m)].adjoint();
        if (m == 0) {
            prefixes.reserve(static_cast<std::size_t>(n_active));
            for (Index i = 0; i < n_active; ++i)
                prefixes.push_back(mode_product(st.history[static_cast<std::size_t>(i)], u_adj, m));
        } else {
            for (auto& t : prefixes) t = mode_product(t, u_adj, m);
        }
    }
    // prefixes now hold the full projections under the updated subspaces

    for (Index i = 0; i < n_active; ++i) {
        Tensor<Scalar> g_new = update_core(st, hp, i, weights, &prefixes[static_cast<std::size_t>(i)]);
        step_sq += (g_new - st.active_core(i)).squared_norm();
        st.cores[static_cast<std::size_t>(st.frozen + i)] = std::move(g_new);
    }

    if (projections_out) *projections_out = std::move(prefixes);
    return step_sq;
}

/// Runs up to `iters` sweeps with the squared-change early break, rebuilding
/// the trace: one leading record with the start-point objective, then one per
/// sweep. Updates st.objective.
template <class Scalar>
void run_online_iterations(PredictorState<Scalar>& st, const Hyperparams& hp,
                           const std::vector<double>* weights, int iters) {
    st.trace.clear();
    st.trace.push_back({objective(st, hp, weights), 0.0});
    std::vector<Tensor<Scalar>> projections;
    for (int k = 0; k < iters; ++k) {
        const double step_sq = run_sweep(st, hp, weights, &projections);
        const double f = objective(st, hp, weights, &projections);
        st.trace.push_back({f, step_sq});
        if (step_sq < hp.eps) break;
    }
    st.objective = st.trace.back().objective;
}

/// Stage-I batch fit on a starting series: random orthonormal initialization
/// (seeded), cores initialized by projection, then proximal alternating sweeps
/// until the squared-change criterion or the iteration budget.
template <class Scalar>
PredictorState<Scalar> stage1_fit(std::span<const Tensor<Scalar>> series, const Hyperparams& hp,
                                  std::uint64_t seed) {
    if (series.empty()) throw std::invalid_argument("stage1_fit: empty series");
    const auto& dims = series.front().dims();
    hp.validate(dims);
    if (static_cast<int>(series.size()) < hp.spec.memory() + 2)
        throw std::invalid_argument("stage1_fit: series shorter than p + d + 2");
    for (const auto& x : series)
        if (x.dims() != dims) throw std::invalid_argument("stage1_fit: inconsistent tensor shapes");

    PredictorState<Scalar> st;
    GaussianSampler rng(seed);
    for (std::size_t m = 0; m < dims.size(); ++m)
        st.subspaces.push_back(procrustes(rng.matrix<Scalar>(dims[m], hp.ranks[m])));
    st.history.assign(series.begin(), series.end());
    st.cores.reserve(series.size());
    for (const auto& x : series) st.cores.push_back(to_core(x, std::span<const Matrix<Scalar>>(st.subspaces)));
    st.params = ARParams<Scalar>::zeros(hp.spec.p);
    st.time_index = static_cast<Index>(series.size());

    run_online_iterations(st, hp, nullptr, hp.max_iter_stage1);
    return st;
}

/// Forecast of the next observation: the regression forecast of the next core,
/// reconstructed through the joint subspaces.
template <class Scalar>
Tensor<Scalar> predict_next(const PredictorState<Scalar>& st, const Hyperparams& hp) {
    const Tensor<Scalar> g_next = forecast(st.params, hp.spec, std::span<const Tensor<Scalar>>(st.cores));
    return from_core(g_next, std::span<const Matrix<Scalar>>(st.subspaces));
}

/// Initial core for a new observation before any sweeps:
/// (f_P(cores) + varphi w X prod x_m U_m^H) / (1 + varphi w).
template <class Scalar>
Tensor<Scalar> seed_new_core(const PredictorState<Scalar>& st, const Tensor<Scalar>& x, const Hyperparams& hp,
                             double w_new = 1.0) {
    Tensor<Scalar> g = forecast(st.params, hp.spec, std::span<const Tensor<Scalar>>(st.cores));
    g += to_core(x, std::span<const Matrix<Scalar>>(st.subspaces)) * Scalar(hp.varphi * w_new);
    return g * Scalar(1.0 / (1.0 + hp.varphi * w_new));
}

namespace detail {

template <class Scalar>
void check_ingest(const PredictorState<Scalar>& st, const Tensor<Scalar>& x) {
    if (st.active_count() != static_cast<Index>(st.history.size()) || st.history.empty())
        throw std::invalid_argument("ingest: state lacks observation history (prediction-only checkpoint?)");
    if (x.dims() != st.history.front().dims()) throw std::invalid_argument("ingest: observation shape mismatch");
}

}  // namespace detail

/// Online update: appends the new observation with a seeded core, warm-starts
/// from the current variables, and runs up to iters_online sweeps over the
/// full retained history.
template <class Scalar>
void ingest_and_update(PredictorState<Scalar>& st, const Tensor<Scalar>& x, const Hyperparams& hp) {
    detail::check_ingest(st, x);
    Tensor<Scalar> g0 = seed_new_core(st, x, hp);
    st.history.push_back(x);
    st.cores.push_back(std::move(g0));
    ++st.time_index;
    run_online_iterations(st, hp, nullptr, hp.iters_online);
}

/// Sliding-window weighted update. Weights come from the previous fit's
/// decomposition residuals (zero-norm observations count as residual 1, which
/// activates the beta floor); cores that leave the window are frozen as
/// regression context (at most p + d of them are kept).
template <class Scalar>
void aaw_ingest_and_update(PredictorState<Scalar>& st, const Tensor<Scalar>& x, const Hyperparams& hp,
                           const AAWConfig& cfg) {
    detail::check_ingest(st, x);
    cfg.validate();
    if (cfg.tau <= hp.spec.memory())
        throw std::invalid_argument("aaw: window must admit regression terms (tau > p + d)");

    // Residuals of the previous fit for the incoming window's interior times.
    const Index n_active = st.active_count();
    const Index n_interior = std::min<Index>(cfg.tau - 1, n_active);
    std::vector<double> residuals;
    residuals.reserve(static_cast<std::size_t>(n_interior));
    for (Index k = n_active - n_interior; k < n_active; ++k) {
        const auto& xt = st.history[static_cast<std::size_t>(k)];
        const double xsq = xt.squared_norm();
        residuals.push_back(
            xsq == 0.0 ? 1.0
                       : residual_eps(xt, st.active_core(k), std::span<const Matrix<Scalar>>(st.subspaces)));
    }
    WeightVector wv = compute_weights(cfg, st.time_index, residuals);

    Tensor<Scalar> g0 = seed_new_core(st, x, hp, wv.weights.back());
    st.history.push_back(x);
    st.cores.push_back(std::move(g0));
    ++st.time_index;

    // Slide: keep tau active cores; freeze the rest, retaining only p + d of
    // the frozen tail as regression context.
    const Index new_active = std::min<Index>(cfg.tau, n_active + 1);
    const Index to_freeze = (n_active + 1) - new_active;
    st.history.erase(st.history.begin(), st.history.begin() + to_freeze);
    st.frozen += to_freeze;
    const Index drop = st.frozen - std::min<Index>(st.frozen, hp.spec.memory());
    st.cores.erase(st.cores.begin(), st.cores.begin() + drop);
    st.frozen -= drop;

    run_online_iterations(st, hp, &wv.weights, hp.iters_online);
}

/// Projection-only ingestion: extends the core series through the fixed
/// subspaces without touching the model (the no-updating baseline).
template <class Scalar>
void append_projected(PredictorState<Scalar>& st, const Tensor<Scalar>& x) {
    detail::check_ingest(st, x);
    st.cores.push_back(to_core(x, std::span<const Matrix<Scalar>>(st.subspaces)));
    st.history.push_back(x);
    ++st.time_index;
}

/// Rebuild-from-scratch baseline: a full Stage-I fit on the entire current
/// history with fresh random initialization, then a one-step forecast.
template <class Scalar>
std::pair<PredictorState<Scalar>, Tensor<Scalar>> offline_refit_step(std::span<const Tensor<Scalar>> history,
                                                                     const Hyperparams& hp,
                                                                     std::uint64_t seed) {
    PredictorState<Scalar> st = stage1_fit(history, hp, seed);
    Tensor<Scalar> pred = predict_next(st, hp);
    return {std::move(st), std::move(pred)};
}

}  // namespace topa
