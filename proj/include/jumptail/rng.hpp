#pragma once

#include <cmath>
#include <cstdint>

namespace jumptail::mc {

// splitmix64 finalizer: a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Counter-based generator: output k of the stream with key K is mix64(K + k * golden).
// A stream is fully determined by (seed, index), so paths can be simulated in any order.
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    constexpr CounterRng(std::uint64_t seed, std::uint64_t index)
        : key_(mix64(seed + mix64(index + kGolden))) {}

    constexpr std::uint64_t next_u64() { return mix64(key_ + kGolden * ++counter_); }

    // Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential() { return -std::log(uniform()); }

    // Standard normal by the Marsaglia polar method; the second variate of each pair is kept.
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
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    std::uint64_t draws() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace jumptail::mc
