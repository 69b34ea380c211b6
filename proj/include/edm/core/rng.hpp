#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace edm {

// Deterministic random source. The engine (std::mt19937_64) is fully specified
// by the standard and all value transforms below are hand-rolled, so streams
// are reproducible across compilers and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
    std::uint64_t uniform_int(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    int uniform_int(int lo, int hi) { // inclusive range
        return lo + static_cast<int>(uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Box-Muller, no cached spare so draw counts stay predictable.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
        return mean + stddev * z;
    }

    // Fisher-Yates with explicit draws; std::shuffle is implementation-defined.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(static_cast<std::uint64_t>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Independent child stream identified by a tag.
    Rng derive(std::uint64_t tag) const { return Rng(mix(seed_, tag)); }

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag) {
        // splitmix64 finalizer over seed ^ golden-ratio-scrambled tag
        std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (tag + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

} // namespace edm
