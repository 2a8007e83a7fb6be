#pragma once

#include <cstdint>

namespace grassim {

/// SplitMix64 finalizer; a strong 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr double to_unit_double(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

/// Sequential generator for scene construction. Same seed, same stream, on
/// every platform (no std distributions involved).
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

    constexpr std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    constexpr double uniform() { return to_unit_double(next()); }
    constexpr double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::uint64_t state_;
};

/// Counter-based generator for rendering: the stream is a pure function of
/// (seed, pixel, sample), so results never depend on thread scheduling.
class CounterRng {
public:
    constexpr CounterRng(std::uint64_t seed, std::uint64_t pixel, std::uint64_t sample)
        : key_(mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) ^ mix64(pixel + 0x14057b7ef767814fULL) ^
                     (sample * 0xd1342543de82ef95ULL))) {}

    constexpr double uniform() { return to_unit_double(mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_)); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace grassim
