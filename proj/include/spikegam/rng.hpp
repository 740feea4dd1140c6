#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace spikegam {

// Counter-based Philox4x32-10 generator. The 128-bit counter is split into a
// 64-bit stream id (high half) and a 64-bit position (low half); the key is
// derived from the seed. Two streams with different ids therefore walk
// disjoint counter ranges and never overlap.
//
// Satisfies UniformRandomBitGenerator so it can drive <random> distributions.
class RngStream {
public:
    using result_type = std::uint32_t;

    explicit RngStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    // Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform() noexcept;

    // Standard normal variate.
    double normal();

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    // Derives an independent stream from this one's seed. Used for
    // replications: child(k) is reproducible from (seed, k) alone.
    RngStream child(std::uint64_t stream_id) const noexcept { return RngStream(seed_, stream_id); }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint32_t, 2> key_;
    std::uint64_t position_ = 0;
    std::array<std::uint32_t, 4> block_{};
    int next_ = 4;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer, handy for hashing configuration values into seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace spikegam
