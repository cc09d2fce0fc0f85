#include "rlab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rlab {

namespace {

// splitmix64 step (Vigna). Good enough statistical quality for Monte Carlo
// at the scales used here, and trivially reproducible.
uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

uint64_t Rng::uniform_int(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::uniform_int: n must be > 0");
    // Rejection sampling onto a multiple of n; unbiased.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

double Rng::normal(double mean, double stddev) {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t Rng::mix(uint64_t a, uint64_t b) {
    uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    return splitmix64(x);
}

uint64_t Rng::hash_label(std::string_view label) {
    // FNV-1a 64-bit.
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Rng Rng::child(std::string_view label) const {
    return Rng(mix(seed_, hash_label(label)));
}

Rng Rng::child(std::string_view label, uint64_t index) const {
    return Rng(mix(mix(seed_, hash_label(label)), index));
}

} // namespace rlab
