#pragma once

// Seeded Gaussian sampling with a fixed draw sequence. std::normal_distribution
// is implementation-defined, so Box-Muller is spelled out here to keep seeded
// runs reproducible across standard libraries within one build.

#include "topa/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace topa {

/// splitmix64 step; used to derive independent stream seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : eng_(seed) {}

    /// One standard normal draw.
    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    template <class Scalar>
    Scalar next_scalar() {
        if constexpr (is_complex_v<Scalar>) {
            const double re = next();
            const double im = next();
            return Complex(re, im);
        } else {
            return next();
        }
    }

    template <class Scalar>
    Matrix<Scalar> matrix(Index rows, Index cols) {
        Matrix<Scalar> m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = next_scalar<Scalar>();
        return m;
    }

    template <class Scalar>
    Tensor<Scalar> tensor(std::vector<Index> dims) {
        Tensor<Scalar> t(std::move(dims));
        for (Index f = 0; f < t.size(); ++f) t[f] = next_scalar<Scalar>();
        return t;
    }

private:
    // Uniform in (0, 1]; never 0, so log() is safe.
    double uniform_open() {
        const std::uint64_t bits = eng_() >> 11;  // top 53 bits
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace topa
