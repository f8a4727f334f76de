#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace cwo::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// splitmix64 finalizer; bijective on 64-bit words.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e9b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

[[nodiscard]] constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) noexcept {
    return mix64(h + kGolden + v);
}

/// Stateless counter-based generator. Every draw is a pure function of
/// (state, counter), so callers may key streams by (seed, row, variable)
/// and evaluate them in any order, from any thread, with identical results.
class CounterRng {
public:
    constexpr explicit CounterRng(std::uint64_t seed) noexcept : state_(mix64(seed)) {}

    [[nodiscard]] constexpr CounterRng fork(std::uint64_t key) const noexcept {
        return CounterRng(FromState{}, combine(state_, key));
    }

    /// Uniform on [0, 1).
    [[nodiscard]] double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe as a logarithm argument.
    [[nodiscard]] double uniform_open(std::uint64_t counter) const noexcept {
        return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes counters 2c and 2c+1.
    [[nodiscard]] double normal(std::uint64_t counter) const noexcept {
        const double u1 = uniform_open(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return combine(state_, counter);
    }

    [[nodiscard]] constexpr std::uint64_t state() const noexcept { return state_; }

private:
    struct FromState {};
    constexpr CounterRng(FromState, std::uint64_t state) noexcept : state_(state) {}

    std::uint64_t state_;
};

}  // namespace cwo::rng
