#pragma once

// Counter-based random numbers.
//
// The generator is Philox4x32-10 (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3", SC'11). A draw is a pure function of a 64-bit key and
// a 128-bit counter, so any replica, grid node or refinement level can be
// addressed directly without advancing a sequential state. Every Monte Carlo
// estimator in this library derives its key from (master seed, stream id) and
// addresses individual draws through the counter words, which makes results
// independent of evaluation order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace exitsim {

using Counter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

/// Philox4x32 with 10 rounds. Pure function of (counter, key).
constexpr Counter philox4x32_10(Counter ctr, PhiloxKey key) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo(detail::kPhiloxM0, ctr[0], hi0, lo0);
        detail::mulhilo(detail::kPhiloxM1, ctr[2], hi1, lo1);
        ctr = Counter{hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += detail::kPhiloxW0;
        key[1] += detail::kPhiloxW1;
    }
    return ctr;
}

/// SplitMix64 finalizer; used only to spread (seed, stream) into a key.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Uniform double in the open interval (0, 1) from 64 random bits (53 used).
constexpr double bits_to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Purpose tags, kept distinct so that no two consumers share counters.
enum class DrawTag : std::uint32_t {
    path_endpoint = 1,
    path_midpoint = 2,
    walk_coarse = 3,
    walk_bridge = 4,
    walk_kill = 5,
    initial_position = 6,
    geometric_increment = 10,
    bootstrap = 11,
};

/// A keyed family of counter-addressed draws.
///
/// Draw (index, tag, sub) is reproducible and independent of every other
/// (index, tag, sub) triple under the same key.
class RandomStream {
public:
    RandomStream() = default;
    RandomStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
        const std::uint64_t k = splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
        key_ = PhiloxKey{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    Counter raw(std::uint64_t index, DrawTag tag, std::uint32_t sub = 0) const {
        return philox4x32_10(Counter{static_cast<std::uint32_t>(index),
                                     static_cast<std::uint32_t>(index >> 32),
                                     static_cast<std::uint32_t>(tag), sub},
                             key_);
    }

    double uniform(std::uint64_t index, DrawTag tag, std::uint32_t sub = 0) const {
        const Counter c = raw(index, tag, sub);
        return bits_to_open_unit(c[0], c[1]);
    }

    /// Two independent uniforms in (0, 1) from one block.
    std::pair<double, double> uniform_pair(std::uint64_t index, DrawTag tag,
                                           std::uint32_t sub = 0) const {
        const Counter c = raw(index, tag, sub);
        return {bits_to_open_unit(c[0], c[1]), bits_to_open_unit(c[2], c[3])};
    }

    /// Standard normal by Box-Muller on one block.
    double normal(std::uint64_t index, DrawTag tag, std::uint32_t sub = 0) const {
        const auto [u1, u2] = uniform_pair(index, tag, sub);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Both Box-Muller outputs of one block.
    std::pair<double, double> normal_pair(std::uint64_t index, DrawTag tag,
                                          std::uint32_t sub = 0) const {
        const auto [u1, u2] = uniform_pair(index, tag, sub);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(angle), r * std::sin(angle)};
    }

private:
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    PhiloxKey key_{0, 0};
};

}  // namespace exitsim
