#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace hmc
{

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
///
/// Pure function of (counter, key); no state.
inline std::array<std::uint32_t, 4>
philox4x32_10(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key)
{
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    for (int round = 0; round < 10; ++round)
    {
        std::uint64_t const p0 = std::uint64_t{kMul0} * ctr[0];
        std::uint64_t const p1 = std::uint64_t{kMul1} * ctr[2];
        auto const hi0 = static_cast<std::uint32_t>(p0 >> 32);
        auto const lo0 = static_cast<std::uint32_t>(p0);
        auto const hi1 = static_cast<std::uint32_t>(p1 >> 32);
        auto const lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

/// Counter-based random stream identified by (seed, stream index).
///
/// Draw k of a stream depends only on (seed, stream, k), so streams can be
/// consumed from any thread in any order with identical results.
class RandomStream
{
  public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream)
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    /// 64 random bits (one Philox block per call).
    result_type operator()()
    {
        auto const block = next_block();
        return (std::uint64_t{block[0]} << 32) | block[1];
    }

    /// Uniform in (0, 1), 53-bit resolution, never exactly 0 or 1.
    double uniform()
    {
        return to_open_unit((*this)());
    }

    /// One standard normal; consumes exactly one Philox block (Box-Muller,
    /// cosine branch).
    double normal()
    {
        auto const block = next_block();
        double const u1 = to_open_unit((std::uint64_t{block[0]} << 32) | block[1]);
        double const u2 = to_open_unit((std::uint64_t{block[2]} << 32) | block[3]);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t position() const { return counter_; }
    void seek(std::uint64_t position) { counter_ = position; }

  private:
    std::array<std::uint32_t, 4> next_block()
    {
        std::array<std::uint32_t, 4> const ctr{static_cast<std::uint32_t>(counter_),
                                               static_cast<std::uint32_t>(counter_ >> 32),
                                               static_cast<std::uint32_t>(stream_),
                                               static_cast<std::uint32_t>(stream_ >> 32)};
        ++counter_;
        return philox4x32_10(ctr, key_);
    }

    static double to_open_unit(std::uint64_t bits)
    {
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace hmc
