#pragma once

#include <array>
#include <cstdint>

namespace qsd {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based stream keyed by (master seed, stream id). Block i of the
/// stream is philox4x32_10({i_lo, i_hi, id_lo, id_hi}, {seed_lo, seed_hi});
/// each block yields two 64-bit words, low word first. Streams with
/// different ids never share a counter, so replica i always sees the same
/// numbers regardless of scheduling.
class PhiloxStream {
public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

    std::uint64_t next_u64();

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform();

    /// Exponential with the given rate.
    double exponential(double rate);

    std::uint64_t blocks_used() const { return block_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
};

}  // namespace qsd
