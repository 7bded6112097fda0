// =============================================================================
// rng.hpp — Reproducible random streams.
//
// Reproducibility contract: a stream is fully determined by (seed, stream id).
// All sampling is integer-driven: raw 64-bit words from mt19937_64 are mapped
// to uniforms / indices / categorical draws by fixed arithmetic, never through
// std::*_distribution (whose output is implementation-defined). Draw order is
// part of each sampler's documented contract.
// =============================================================================
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

#include "math.hpp"

namespace moran {

class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : gen_(derive(seed, stream)) {}

    /// Seed for a child stream; mixing is SplitMix64 over (seed, stream+1).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        return splitmix64(s);
    }

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits. One word consumed.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform index in {0, ..., n-1} by 128-bit multiply-shift. One word consumed.
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
        __extension__ using uint128 = unsigned __int128;
        const uint128 wide = static_cast<uint128>(next_u64()) * static_cast<uint128>(n);
        return static_cast<std::size_t>(wide >> 64);
    }

    /// Inverse-CDF draw from unnormalized nonnegative weights. One word consumed.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::domain_error("categorical: negative weight");
            total += w;
        }
        if (total <= 0.0) throw std::domain_error("categorical: zero total weight");
        const double u = uniform01() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return i;
        }
        return weights.size() - 1;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace moran
