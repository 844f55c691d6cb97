#pragma once

#include <cstdint>
#include <limits>
#include <random>

#include "fmtt/types.hpp"

namespace fmtt {

/// SplitMix64: tiny, fast, and good enough for Monte Carlo draws. Satisfies
/// UniformRandomBitGenerator so it plugs into <random> distributions.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Purposes for keyed substreams; distinct purposes never share draws.
enum class StreamPurpose : std::uint64_t {
    init = 1,
    propagate = 2,
    inner = 3,
    hutchinson = 4,
    resample = 5,
    oracle = 6,
    user = 7,
};

/// Counter-based substream keyed by (seed, purpose, a, b). Results depend only
/// on the key, never on which thread draws them.
inline SplitMix64 substream(std::uint64_t seed, StreamPurpose purpose, std::uint64_t a = 0,
                            std::uint64_t b = 0) {
    SplitMix64 mix(seed ^ (static_cast<std::uint64_t>(purpose) * 0xD1B54A32D192ED03ULL));
    std::uint64_t key = mix();
    key ^= SplitMix64(key + a)();
    key ^= SplitMix64(key ^ (b * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL))();
    return SplitMix64(key);
}

template <class Engine>
Vec standard_normal(Engine& eng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z(dim);
    for (int i = 0; i < dim; ++i) z[i] = normal(eng);
    return z;
}

}  // namespace fmtt
