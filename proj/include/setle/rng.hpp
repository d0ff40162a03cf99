#pragma once

// Counter-based deterministic RNG. Every random draw in the project goes
// through one of these so that (seed, stream) fully determines outputs,
// independent of platform and call interleaving.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace setle {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, used to key RNG streams by symbolic token.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

// Splittable generator: the state advances with each draw, and independent
// streams are derived with split() without coupling the parent sequence.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(splitmix64(seed ^ 0xd1b54a32d192ed03ULL)) {}

    static Rng keyed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
        std::uint64_t k = hash_combine(hash_combine(hash_combine(seed, a), b), c);
        return Rng(k);
    }

    Rng split(std::uint64_t stream) const { return Rng(hash_combine(state_, stream)); }

    std::uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    // unbiased enough for our bounds (bound << 2^64)
    std::uint32_t next_below(std::uint32_t bound) {
        return static_cast<std::uint32_t>(next_u64() % bound);
    }

    double next_double() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_gaussian() {
        // Box-Muller; consumes two draws.
        double u1 = next_double();
        double u2 = next_double();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::uint64_t state_;
};

}  // namespace setle
