#pragma once

// JSON serialization of run and benchmark reports (flat snake_case keys) and
// the aligned text comparison table.

#include "topa/harness.hpp"

#include <nlohmann/json.hpp>

#include <iomanip>
#include <ostream>
#include <sstream>

namespace topa {

inline const char* core_mode_name(CoreUpdateMode m) {
    return m == CoreUpdateMode::ExactBlock ? "exact" : "paper";
}

inline CoreUpdateMode core_mode_from_name(const std::string& s) {
    if (s == "paper") return CoreUpdateMode::PaperForm;
    if (s == "exact") return CoreUpdateMode::ExactBlock;
    throw std::invalid_argument("unknown core update mode: " + s);
}

inline nlohmann::json to_json(const StreamConfig& cfg) {
    nlohmann::json j;
    j["method"] = method_name(cfg.method);
    j["t0"] = cfg.t0;
    j["ranks"] = cfg.hyper.ranks;
    j["p"] = cfg.hyper.spec.p;
    j["d"] = cfg.hyper.spec.d;
    j["varphi"] = cfg.hyper.varphi;
    j["lambda"] = cfg.hyper.lambda;
    j["eps"] = cfg.hyper.eps;
    j["stage1_iters"] = cfg.hyper.max_iter_stage1;
    j["iters"] = cfg.hyper.iters_online;
    j["mode"] = core_mode_name(cfg.hyper.core_update_mode);
    j["seed"] = cfg.seed;
    if (cfg.method == Method::TopaAaw) {
        j["tau"] = cfg.aaw.tau;
        j["alpha_damp"] = cfg.aaw.alpha_damp;
        j["beta"] = cfg.aaw.beta;
    }
    return j;
}

inline nlohmann::json to_json(const RunReport& r) {
    nlohmann::json j;
    j["method"] = r.method;
    j["seed"] = r.seed;
    j["mean_nrmse"] = r.mean_nrmse;
    j["per_step_nrmse"] = r.per_step_nrmse;
    j["mean_step_micros"] = r.mean_step_micros;
    j["per_step_micros"] = r.per_step_micros;
    j["config"] = to_json(r.config);
    return j;
}

inline nlohmann::json to_json(const SynthConfig& cfg) {
    nlohmann::json j;
    j["dims"] = cfg.dims;
    j["ranks"] = cfg.ranks;
    j["t"] = cfg.t_len;
    j["rho"] = cfg.rho;
    j["core_coeffs"] = cfg.core_coeffs;
    j["core_diff"] = cfg.core_diff;
    j["drift"] = cfg.drift_angle;
    j["seed"] = cfg.seed;
    return j;
}

inline nlohmann::json to_json(const BenchReport& r) {
    nlohmann::json j;
    j["runs"] = r.config.runs;
    j["seed"] = r.config.seed;
    j["gen"] = to_json(r.config.gen);
    j["stream"] = to_json(r.config.stream);
    nlohmann::json methods = nlohmann::json::array();
    for (const auto& m : r.methods) {
        nlohmann::json mj;
        mj["method"] = m.method;
        mj["mean_nrmse"] = m.mean_nrmse;
        mj["stderr_nrmse"] = m.stderr_nrmse;
        mj["mean_step_micros"] = m.mean_step_micros;
        mj["replica_nrmse"] = m.replica_nrmse;
        methods.push_back(std::move(mj));
    }
    j["methods"] = std::move(methods);
    return j;
}

inline void print_bench_table(std::ostream& os, const BenchReport& r) {
    os << std::left << std::setw(16) << "method" << std::right << std::setw(12) << "mean_nrmse" << std::setw(14)
       << "stderr" << std::setw(16) << "step_time_ms" << '\n';
    for (const auto& m : r.methods) {
        os << std::left << std::setw(16) << m.method << std::right << std::setw(12) << std::fixed
           << std::setprecision(4) << m.mean_nrmse << std::setw(14) << std::setprecision(5) << m.stderr_nrmse
           << std::setw(16) << std::setprecision(3) << (m.mean_step_micros / 1000.0) << '\n';
    }
    os.copyfmt(std::ios(nullptr));
}

}  // namespace topa
