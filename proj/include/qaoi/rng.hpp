#pragma once

#include <cstdint>
#include <random>

namespace qaoi {

/// Independent random streams derived from one root seed.
enum class StreamId : std::uint64_t {
    Erasure = 1,
    Token = 2,
    ErrorChain = 3,
    QueryChain = 4,
};

/// splitmix64 finalizer, used only to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * A seedable 64-bit stream with a fixed, library-independent mapping to
 * doubles in [0, 1). Wraps std::mt19937_64 so that sequences are identical
 * across standard library implementations.
 */
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Derive the stream `id` of root seed `root`.
    static RandomStream derive(std::uint64_t root, StreamId id) {
        return RandomStream(mix_seed(root ^ mix_seed(static_cast<std::uint64_t>(id))));
    }

    /// Uniform double on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// True with probability p.
    bool bernoulli(double p) { return uniform() < p; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace qaoi
