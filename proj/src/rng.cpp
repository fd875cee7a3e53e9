#include "ivbounds/rng.hpp"

#include <cmath>
#include <numbers>

namespace ivb {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kMul0, ctr[0], lo0, hi0);
        mulhilo(kMul1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

void RandomStream::refill() noexcept {
    buffer_ = philox4x32_10({static_cast<std::uint32_t>(block_),
                             static_cast<std::uint32_t>(block_ >> 32),
                             static_cast<std::uint32_t>(stream_),
                             static_cast<std::uint32_t>(stream_ >> 32)},
                            key_);
    ++block_;
    buffered_ = 2;
}

RandomStream::result_type RandomStream::operator()() noexcept {
    if (buffered_ == 0) refill();
    const int idx = 2 - buffered_;
    --buffered_;
    return static_cast<std::uint64_t>(buffer_[2 * idx]) |
           (static_cast<std::uint64_t>(buffer_[2 * idx + 1]) << 32);
}

double RandomStream::uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_normal_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t RandomStream::below(std::uint64_t bound) noexcept {
    // Lemire-style threshold rejection keeps the result unbiased.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = (*this)();
        if (r >= threshold) return r % bound;
    }
}

}  // namespace ivb
