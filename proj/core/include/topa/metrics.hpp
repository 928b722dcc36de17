#pragma once

// Prediction accuracy metric and a monotonic-clock timing helper.

#include "topa/tensor.hpp"

#include <chrono>
#include <stdexcept>
#include <utility>

namespace topa {

/// |pred - actual|_F / |actual|_F. Zero iff the prediction is exact.
template <class Scalar>
double nrmse(const Tensor<Scalar>& pred, const Tensor<Scalar>& actual) {
    const double an = actual.norm();
    if (an == 0.0) throw std::invalid_argument("nrmse: zero-norm reference tensor");
    return (pred - actual).norm() / an;
}

/// Wall-clock microseconds of f() on the monotonic clock, alongside its result.
template <class F>
auto timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = std::forward<F>(f)();
    const auto t1 = std::chrono::steady_clock::now();
    const double micros = std::chrono::duration<double, std::micro>(t1 - t0).count();
    return std::pair<decltype(result), double>{std::move(result), micros};
}

/// Microseconds of a void callable.
template <class F>
double timed_void(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    std::forward<F>(f)();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::micro>(t1 - t0).count();
}

}  // namespace topa
