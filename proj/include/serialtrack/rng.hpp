#pragma once

#include <cmath>
#include <cstdint>

namespace serialtrack {

// splitmix64 finalizer; good avalanche, cheap.
inline std::uint64_t hash_u64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic stream keyed by (seed, stream id). Streams derived from the
// same seed but different ids are independent, so parallel workers can each
// own one without any ordering constraints on the result.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : state_(hash_u64(hash_u64(seed) ^ (0x6a09e667f3bcc909ULL + stream_id))) {}

    static RngStream substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        return RngStream(seed, hash_u64(a) ^ (b * 0x2545f4914f6cdd1dULL + 1));
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t x = state_;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n); n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
    }

    // Standard normal via Box-Muller (spare value cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sigma) { return mean + sigma * normal(); }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace serialtrack
