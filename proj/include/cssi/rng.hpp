#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace cssi {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based 64-bit generator.
///
/// A generator is identified by a key derived from (seed, stream). The i-th
/// output is mix64(key + (i + 1) * 0x9E3779B97F4A7C15), i.e. SplitMix64 run
/// from a keyed origin. Any output can be recomputed from (seed, stream, i)
/// alone, so each dataset row, minibatch or campaign instance gets its own
/// substream and results never depend on evaluation order.
///
/// Distribution transforms are implemented here rather than with <random>
/// so the byte-level output is identical across standard libraries.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on the open interval (0, 1).
    double uniform_open();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (one value per two uniforms).
    double normal();
    /// Standard logistic: log(u) - log(1 - u).
    double logistic();
    /// Uniform integer in [0, n), unbiased (Lemire's multiply-reject).
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    /// Independent generator for a child stream of this one.
    CounterRng substream(std::uint64_t index) const;

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

private:
    CounterRng(std::uint64_t key, std::uint64_t counter, int) : key_(key), counter_(counter) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace cssi
