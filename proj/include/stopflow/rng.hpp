#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace stopflow {

/// One Philox-4x32 block: 10 rounds of the counter-based bijection keyed by
/// `key`. Matches the Random123 reference output.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

/**
 * Counter-based 32-bit stream usable as a UniformRandomBitGenerator.
 *
 * Stream identity is (seed, substream, lane); word i of the stream is drawn
 * from block i/4, so any two distinct identities give independent,
 * reproducible sequences regardless of which thread consumes them.
 */
class PhiloxStream {
public:
    using result_type = std::uint32_t;

    PhiloxStream(std::uint64_t seed, std::uint64_t substream, std::uint32_t lane = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          ctr_{0u, static_cast<std::uint32_t>(substream),
               static_cast<std::uint32_t>(substream >> 32), lane} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    /// Uniform double in [0,1) built from 53 random bits.
    double uniform01() noexcept {
        const std::uint64_t hi = (*this)() >> 5;  // 27 bits
        const std::uint64_t lo = (*this)() >> 6;  // 26 bits
        return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
    }

private:
    void refill() noexcept {
        buf_ = philox4x32_10(ctr_, key_);
        ++ctr_[0];
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
};

}  // namespace stopflow
