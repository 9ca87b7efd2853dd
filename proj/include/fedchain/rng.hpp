#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fedchain {

// SplitMix64 finalizer. Pure function of the input word.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Named substreams. Every consumer of randomness derives its own seed from
// (master seed, tag, round, device) so adding or reordering one consumer
// never shifts the draws seen by another.
enum class Stream : std::uint64_t {
    synthesis = 1,
    partition = 2,
    population = 3,
    announce = 4,
    selection = 5,
    local_pass = 6,
    noise = 7,
    encrypt = 8,
    compute_time = 9,
    miner_assoc = 10,
    delay = 11,
    central = 12,
    keygen = 13,
    aggregator = 14,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
    std::uint64_t s = mix64(master);
    s = mix64(s ^ static_cast<std::uint64_t>(tag));
    s = mix64(s ^ a);
    s = mix64(s ^ b);
    return s;
}

// mt19937_64 with hand-rolled distributions. std::uniform_real_distribution
// and friends are implementation-defined, which would break cross-build
// reproducibility; everything here is pinned to explicit arithmetic.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1), 53-bit resolution
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // (0, 1) strictly interior; safe for log/inverse-CDF transforms
    double uniform01_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // unbiased [0, n) by rejection
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_below: n must be positive");
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // inverse-CDF Laplace, mean 0
    double laplace(double scale) {
        if (!(scale > 0)) throw std::invalid_argument("laplace: scale must be positive");
        double u = uniform01_open() - 0.5;
        double mag = std::log(1.0 - 2.0 * std::abs(u));
        return u < 0 ? scale * mag : -scale * mag;
    }

    // Box-Muller, two draws per variate, no cached spare
    double normal() {
        double u1 = uniform01_open();
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::vector<std::uint32_t> permutation(std::uint32_t n) {
        std::vector<std::uint32_t> p(n);
        for (std::uint32_t i = 0; i < n; ++i) p[i] = i;
        shuffle(p);
        return p;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace fedchain
