#ifndef SATOR_RNG_HPP
#define SATOR_RNG_HPP

#include <cstdint>
#include <string_view>

namespace sator {

/// Deterministic, platform-independent uniform stream (splitmix64 core).
/// std::uniform_real_distribution is implementation-defined, so simulation
/// code draws through this instead to keep runs byte-reproducible.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_index(std::uint64_t n) {
        return next_u64() % n;
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t mix_u64(std::uint64_t a, std::uint64_t b) {
    UniformStream s(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    return s.next_u64();
}

/// FNV-1a, used for id hashing and config fingerprints.
inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Stream for one (seed, entity, step) triple. Simulation results must not
/// depend on scheduling order, so every pair/step gets its own stream.
inline UniformStream derived_stream(std::uint64_t seed, std::string_view entity_id,
                                    std::uint64_t step) {
    return UniformStream(mix_u64(mix_u64(seed, fnv1a(entity_id)), step));
}

} // namespace sator

#endif
