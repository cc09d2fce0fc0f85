#pragma once

#include <cstdint>
#include <string_view>

namespace rlab {

/// Deterministic pseudo-random stream with explicitly coded distributions.
/// <random>'s distribution objects are implementation-defined, so every draw
/// here is spelled out; identical seeds give identical sequences on any
/// platform/compiler.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), state_(seed) {}

    uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t uniform_int(uint64_t n);

    /// Box-Muller normal draw (consumes two uniforms, no caching).
    double normal(double mean = 0.0, double stddev = 1.0);

    bool bernoulli(double p) { return uniform() < p; }

    /// Independent stream derived from this stream's seed and a label.
    /// Children of the same (seed, label) are identical; different labels
    /// give unrelated streams.
    Rng child(std::string_view label) const;
    Rng child(std::string_view label, uint64_t index) const;

    uint64_t seed() const { return seed_; }

    static uint64_t mix(uint64_t a, uint64_t b);
    static uint64_t hash_label(std::string_view label);

private:
    uint64_t seed_;
    uint64_t state_;
};

} // namespace rlab
