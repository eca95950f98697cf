#pragma once

#include <cstdint>

namespace adaptrial {

// Counter-based generator (splitmix64 output function applied to a strided
// counter). The k-th draw is a pure function of (seed, k), so streams never
// collide by construction and replications can be split deterministically:
//
//   stream seed for replication r:  base_seed ^ (r * kStreamStride)
//
// kStreamStride is a large odd constant, so distinct replication indices map
// to distinct seeds.
class Rng {
public:
    static constexpr std::uint64_t kStreamStride = 0x9E3779B97F4A7C15ULL;

    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static Rng for_stream(std::uint64_t base_seed, std::uint64_t stream_index) {
        return Rng(base_seed ^ (stream_index * kStreamStride));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via inverse CDF; consumes exactly one uniform.
    double normal();

private:
    std::uint64_t state_;
};

// Quantile of the standard normal distribution (Acklam's rational
// approximation polished with two Newton steps; |error| < 1e-15 on (0,1)).
double normal_quantile(double p);

// Standard normal CDF.
double normal_cdf(double z);

inline double Rng::normal() { return normal_quantile(uniform()); }

}  // namespace adaptrial
