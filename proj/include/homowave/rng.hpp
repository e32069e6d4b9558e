#ifndef HOMOWAVE_RNG_HPP
#define HOMOWAVE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace homowave {

// Counter-based randomness: a SplitMix64-style finalizer applied to the key
// words. Every draw is a pure function of (seed, stream, counter, lane), so
// samples do not depend on evaluation order or thread count.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t stream,
                                  std::uint64_t counter, std::uint64_t lane) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ stream);
    h = mix64(h ^ counter);
    h = mix64(h ^ lane);
    return h;
}

// Uniform in (0,1); the half-bit offset keeps 0 and 1 unreachable.
inline double uniform01(std::uint64_t h) {
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller on two hashed uniforms.
inline double standard_normal(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t counter, std::uint64_t lane) {
    const double u1 = uniform01(counter_hash(seed, stream, counter, 2 * lane));
    const double u2 = uniform01(counter_hash(seed, stream, counter, 2 * lane + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

// Sequential convenience stream on top of the counter hash, for sampling
// loops (validation, property tests) that want reproducible uniforms.
class SequenceRng {
public:
    SequenceRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    double next_uniform01() { return uniform01(counter_hash(seed_, stream_, counter_++, 0)); }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform01(); }

    std::uint64_t next_u64() { return counter_hash(seed_, stream_, counter_++, 0); }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

} // namespace homowave

#endif
