#pragma once

#include <cstdint>

namespace nbrdf {

// Counter-based PCG32 stream. Identical (seed, stream_id) gives identical
// sequences regardless of thread count; tasks own their streams.
class RngStream {
  public:
    RngStream() : RngStream(0, 0) {}
    RngStream(uint64_t seed, uint64_t stream_id) {
        state_ = 0;
        inc_ = (stream_id << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    // Uniform in [0, 1).
    double next_double() {
        return next_u32() * (1.0 / 4294967296.0);
    }

    float next_float() {
        return static_cast<float>(next_u32() >> 8) * (1.0f / 16777216.0f);
    }

    // Uniform integer in [0, n).
    uint32_t next_below(uint32_t n) {
        return static_cast<uint32_t>((static_cast<uint64_t>(next_u32()) * n) >> 32);
    }

  private:
    uint64_t state_;
    uint64_t inc_;
};

} // namespace nbrdf
