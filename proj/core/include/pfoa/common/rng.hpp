#pragma once

#include <cstdint>
#include <random>

namespace pfoa {

/// splitmix64 step; used to whiten user seeds and to derive per-record
/// streams that stay decorrelated regardless of how the caller spaces them.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Mix a base seed with a stream index (subject index, epoch, fold, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
    splitmix64(s);
    return splitmix64(s);
}

/// Seeded engine wrapper. All randomness in the library flows through this
/// so that a (seed, stream) pair fully determines every draw.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(mix_seed(seed, stream)) {}

    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    /// Uniform integer in [lo, hi], both inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    /// Normal draw rejected until it lands in [lo, hi].
    double truncated_normal(double mean, double stddev, double lo, double hi) {
        for (;;) {
            const double x = normal(mean, stddev);
            if (x >= lo && x <= hi) return x;
        }
    }

    bool bernoulli(double p) {
        return std::bernoulli_distribution(p)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace pfoa
