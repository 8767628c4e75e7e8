#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace randscen {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Independent child key for (key, index); used for trial, constraint and check streams.
inline constexpr std::uint64_t split_seed(std::uint64_t key, std::uint64_t index) {
    return mix64(mix64(key ^ 0x6A09E667F3BCC909ULL) + (index + 1) * kGolden);
}

// Separate seed families derived from one master seed.
enum class StreamDomain : std::uint64_t { Trial = 1, Select = 2, Fresh = 3, Check = 4 };

inline constexpr std::uint64_t domain_seed(std::uint64_t master, StreamDomain d) {
    return split_seed(master, 0xD0000000ULL + static_cast<std::uint64_t>(d));
}

// Counter-based stream: output i is mix64(key + i * golden). Satisfies UniformRandomBitGenerator.
// Uniform and normal variates are produced here (not by <random> distributions) so that
// sequences are identical across standard libraries.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t key = 0) : key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix64(key_ + (++counter_) * kGolden); }

    // [0, 1)
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // (0, 1)
    double uniform_open() { return (static_cast<double>((*this)() >> 12) + 0.5) * 0x1.0p-52; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal by the polar method; the second variate of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Uniform integer in [0, n), n >= 1, by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x;
        do {
            x = (*this)();
        } while (x >= limit);
        return x % n;
    }

    Stream split(std::uint64_t index) const { return Stream(split_seed(key_, index)); }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace randscen
