#pragma once

#include <cstdint>
#include <string_view>

namespace acqsens {

/// xoshiro256++ seeded through splitmix64. All outputs are derived from raw
/// 64-bit draws, so streams are bit-identical across platforms and standard
/// library implementations.
///
/// Independent substreams come from `split(tag)`: the child seed hashes the
/// parent seed with the tag (FNV-1a), so the per-case and per-method streams
/// used by the simulator are stable under reordering.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) word = splitmix64(x);
    }

    Rng split(std::uint64_t tag) const {
        return Rng(mix(seed_, tag));
    }
    Rng split(std::string_view tag) const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        return Rng(mix(seed_, h));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
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
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    bool bernoulli(double p) { return next_double() < p; }

    /// Standard normal via the inverse CDF (deterministic, no rejection).
    double next_normal();

    /// Index in [0, n) proportional to the given weights.
    int categorical(const double* weights, int n);

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    static std::uint64_t splitmix64(std::uint64_t& x) {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
        return splitmix64(x);
    }

    std::uint64_t seed_;
    std::uint64_t state_[4];
};

} // namespace acqsens
