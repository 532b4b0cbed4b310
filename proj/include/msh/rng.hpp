#pragma once

#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

namespace msh {

/// splitmix64 finalizer; used for seeding and for deriving independent streams.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// xoshiro256** (Blackman & Vigna), seeded through splitmix64.
///
/// Every random decision in the library (initialization, dropout masks,
/// shuffling, graph generation) draws from an explicitly passed Rng, so a
/// (seed, stream) pair fully determines a run on any platform. Distributions
/// are implemented here rather than taken from <random>, whose distribution
/// algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    /// Independent generator for a named sub-stream of `seed`.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (stream + 1));
        return Rng(splitmix64(s));
    }

    void reseed(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, n). n must be positive.
    std::size_t uniform_int(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return static_cast<std::size_t>(r % bound);
        }
    }

    /// Integer uniform in the closed range [lo, hi].
    std::size_t uniform_int(std::size_t lo, std::size_t hi) { return lo + uniform_int(hi - lo + 1); }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_int(i)]);
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
};

}  // namespace msh
