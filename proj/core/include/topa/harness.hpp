#pragma once

// Streaming evaluation harness: runs a prediction method over a tensor series
// (Stage-I fit on the first T0 tensors, then predict-then-ingest over the
// rest) and collects per-step accuracy and timing. Every reported NRMSE
// scores a forecast made before the scored tensor was ingested.

#include "topa/datagen.hpp"
#include "topa/metrics.hpp"
#include "topa/predictor.hpp"
#include "topa/rng.hpp"
#include "topa/weights.hpp"

#include <atomic>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace topa {

enum class Method { Topa, TopaAaw, TopaInit, OfflineRefit };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Topa: return "topa";
        case Method::TopaAaw: return "topa-aaw";
        case Method::TopaInit: return "topa-init";
        case Method::OfflineRefit: return "offline-refit";
    }
    throw std::logic_error("unknown method");
}

inline Method method_from_name(const std::string& s) {
    if (s == "topa") return Method::Topa;
    if (s == "topa-aaw") return Method::TopaAaw;
    if (s == "topa-init") return Method::TopaInit;
    if (s == "offline-refit") return Method::OfflineRefit;
    throw std::invalid_argument("unknown method: " + s);
}

struct StreamConfig {
    Method method = Method::Topa;
    Index t0 = 20;
    Hyperparams hyper;
    AAWConfig aaw;  // used by topa-aaw only
    std::uint64_t seed = 0;
};

struct RunReport {
    std::string method;
    std::uint64_t seed = 0;
    std::vector<double> per_step_nrmse;
    double mean_nrmse = 0.0;
    std::vector<double> per_step_micros;  // model update + next forecast, I/O excluded
    double mean_step_micros = 0.0;
    StreamConfig config;  // effective configuration echo

    void finalize() {
        auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return v.empty() ? 0.0 : s / static_cast<double>(v.size());
        };
        mean_nrmse = mean(per_step_nrmse);
        mean_step_micros = mean(per_step_micros);
    }
};

template <class Scalar>
RunReport run_stream(std::span<const Tensor<Scalar>> series, const StreamConfig& cfg) {
    if (cfg.t0 < 1 || cfg.t0 >= static_cast<Index>(series.size()))
        throw std::invalid_argument("run_stream: need 1 <= t0 < series length");

    RunReport report;
    report.method = method_name(cfg.method);
    report.seed = cfg.seed;
    report.config = cfg;

    auto starting = series.subspan(0, static_cast<std::size_t>(cfg.t0));
    PredictorState<Scalar> state = stage1_fit(starting, cfg.hyper, cfg.seed);
    Tensor<Scalar> pending = predict_next(state, cfg.hyper);

    std::vector<Tensor<Scalar>> observed(starting.begin(), starting.end());
    for (std::size_t j = static_cast<std::size_t>(cfg.t0); j < series.size(); ++j) {
        const Tensor<Scalar>& x_new = series[j];
        report.per_step_nrmse.push_back(nrmse(pending, x_new));

        const double micros = timed_void([&] {
            switch (cfg.method) {
                case Method::Topa:
                    ingest_and_update(state, x_new, cfg.hyper);
                    break;
                case Method::TopaAaw:
                    aaw_ingest_and_update(state, x_new, cfg.hyper, cfg.aaw);
                    break;
                case Method::TopaInit:
                    append_projected(state, x_new);
                    break;
                case Method::OfflineRefit: {
                    observed.push_back(x_new);
                    state = stage1_fit(std::span<const Tensor<Scalar>>(observed), cfg.hyper,
                                       mix_seed(cfg.seed, j));
                    break;
                }
            }
            pending = predict_next(state, cfg.hyper);
        });
        report.per_step_micros.push_back(micros);
        if (cfg.method != Method::OfflineRefit) observed.push_back(x_new);
    }
    report.finalize();
    return report;
}

struct BenchConfig {
    SynthConfig gen;
    StreamConfig stream;  // per-method template; seed is derived per replica
    std::vector<Method> methods = {Method::Topa, Method::OfflineRefit};
    int runs = 1;
    std::uint64_t seed = 0;
    int threads = 0;  // 0 = hardware concurrency
};

struct MethodSummary {
    std::string method;
    double mean_nrmse = 0.0;        // mean over replicas of per-replica mean NRMSE
    double stderr_nrmse = 0.0;      // standard error of that mean over replicas
    double mean_step_micros = 0.0;  // mean over replicas of per-replica mean step time
    std::vector<double> replica_nrmse;
};

struct BenchReport {
    BenchConfig config;
    std::vector<MethodSummary> methods;
};

/// Seeded Monte-Carlo comparison: each replica generates one synthetic stream
/// and runs every method on it. Replicas execute in parallel; results are
/// deterministic given (config, seed) apart from the timing fields.
inline BenchReport run_bench(const BenchConfig& cfg) {
    if (cfg.runs < 1) throw std::invalid_argument("run_bench: runs must be >= 1");
    if (cfg.methods.empty()) throw std::invalid_argument("run_bench: no methods selected");

    struct Cell {
        double nrmse = 0.0;
        double micros = 0.0;
    };
    std::vector<std::vector<Cell>> table(cfg.methods.size(),
                                         std::vector<Cell>(static_cast<std::size_t>(cfg.runs)));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int r = next.fetch_add(1); r < cfg.runs; r = next.fetch_add(1)) {
            SynthConfig gen = cfg.gen;
            gen.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(r));
            const auto data = synth_tts<double>(gen);
            for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
                StreamConfig sc = cfg.stream;
                sc.method = cfg.methods[mi];
                sc.seed = mix_seed(gen.seed, 1000 + mi);
                const RunReport rep = run_stream<double>(std::span<const Tensor<double>>(data.observations), sc);
                table[mi][static_cast<std::size_t>(r)] = {rep.mean_nrmse, rep.mean_step_micros};
            }
        }
    };

    int n_threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::max(1, std::min(n_threads, cfg.runs));
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads - 1; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    BenchReport report;
    report.config = cfg;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        MethodSummary s;
        s.method = method_name(cfg.methods[mi]);
        double sum = 0.0, sum_us = 0.0;
        for (const auto& c : table[mi]) {
            s.replica_nrmse.push_back(c.nrmse);
            sum += c.nrmse;
            sum_us += c.micros;
        }
        const auto n = static_cast<double>(cfg.runs);
        s.mean_nrmse = sum / n;
        s.mean_step_micros = sum_us / n;
        double var = 0.0;
        for (double v : s.replica_nrmse) var += (v - s.mean_nrmse) * (v - s.mean_nrmse);
        s.stderr_nrmse = cfg.runs > 1 ? std::sqrt(var / (n * (n - 1.0))) : 0.0;
        report.methods.push_back(std::move(s));
    }
    return report;
}

}  // namespace topa
