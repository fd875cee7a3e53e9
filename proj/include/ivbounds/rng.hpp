#pragma once

// Counter-based random numbers with explicit stream splitting.
//
// Every random quantity in the library is drawn from a RandomStream, which is
// Philox4x32-10 keyed by the 64-bit user seed. The 128-bit Philox counter is
// split into a 64-bit stream id (high words) and a 64-bit block index (low
// words). Stream ids are derived from structured tags with `stream_id`, e.g.
//
//   stream_id({tags::fold_assignment})                 fold shuffling keys
//   stream_id({tags::illustration_row, i})            row i of a DGP draw
//   stream_id({tags::rmse_data, n, rep})               one replication
//
// so the values seen by a given (seed, tags...) combination never depend on
// how many other streams were consumed, on thread count, or on sample size.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ivb {

/// One Philox4x32 block with 10 rounds (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; used only to hash tags into stream ids.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x6A09E667F3BCC908ULL;
    for (std::uint64_t p : parts) h = splitmix64_mix(h ^ splitmix64_mix(p));
    return h;
}

namespace tags {
inline constexpr std::uint64_t fold_assignment = 0x01;
inline constexpr std::uint64_t illustration_row = 0x10;
inline constexpr std::uint64_t illustration_truth = 0x11;
inline constexpr std::uint64_t margin_row = 0x20;
inline constexpr std::uint64_t nuisance_noise = 0x30;
inline constexpr std::uint64_t rmse_data = 0x40;
inline constexpr std::uint64_t augment_uniform = 0x50;
inline constexpr std::uint64_t prop2 = 0x60;
inline constexpr std::uint64_t replication = 0x70;
inline constexpr std::uint64_t property_check = 0x80;
inline constexpr std::uint64_t width_truth = 0x90;
}  // namespace tags

/// Satisfies UniformRandomBitGenerator with 64-bit output.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform on the open interval (0, 1); never returns exactly 0 or 1.
    double uniform_open() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal() noexcept;
    bool bernoulli(double p) noexcept { return uniform() < p; }
    /// Uniform integer in [0, bound) by rejection (bound > 0).
    std::uint64_t below(std::uint64_t bound) noexcept;

    std::uint64_t blocks_used() const noexcept { return block_; }

private:
    void refill() noexcept;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffered_ = 0;  // 64-bit words left in buffer_ (0..2)
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ivb
