#pragma once

#include <array>
#include <cstdint>

#include "specwass/math.hpp"

namespace specwass {

namespace detail {

inline void philox_mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(prod >> 32);
    lo = static_cast<std::uint32_t>(prod);
}

/// Philox4x32-10 block function (counter-based, keyed).
inline std::array<std::uint32_t, 4> philox4x32(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) {
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr_lo);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr_lo >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi);
    std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        philox_mulhilo(0xD2511F53u, c0, hi0, lo0);
        philox_mulhilo(0xCD9E8D57u, c2, hi1, lo1);
        const std::uint32_t n0 = hi1 ^ c1 ^ k0;
        const std::uint32_t n1 = lo1;
        const std::uint32_t n2 = hi0 ^ c3 ^ k1;
        const std::uint32_t n3 = lo0;
        c0 = n0; c1 = n1; c2 = n2; c3 = n3;
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    return {c0, c1, c2, c3};
}

}  // namespace detail

/// Deterministic stream of uniforms/normals addressed by (master_seed, stream_id).
/// Distinct pairs give statistically independent sequences; the same pair
/// reproduces the identical sequence on every platform and worker layout.
class RngStream {
  public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id) {}

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t raw64() {
        if (buffered_ == 0) refill();
        --buffered_;
        return buffered_ == 1 ? word0_ : word1_;
    }

    /// Uniform on the open interval (0,1).
    double uniform01() {
        const std::uint64_t bits = raw64();
        return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    /// Standard normal via inverse-CDF transform of one uniform.
    double normal() { return normal_quantile(uniform01()); }

    bool bernoulli(double prob) { return uniform01() < prob; }

  private:
    void refill() {
        const auto block = detail::philox4x32(master_seed_, stream_id_, counter_++);
        word0_ = (static_cast<std::uint64_t>(block[0]) << 32) | block[1];
        word1_ = (static_cast<std::uint64_t>(block[2]) << 32) | block[3];
        buffered_ = 2;
    }

    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::uint64_t counter_ = 0;
    std::uint64_t word0_ = 0, word1_ = 0;
    int buffered_ = 0;
};

inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    return RngStream(master_seed, stream_id);
}

/// Composite stream ids for auxiliary draws (nested clouds, coins) that must
/// not collide with plain per-path streams (kind 0).
inline std::uint64_t substream_id(std::uint8_t kind, std::uint64_t a, std::uint64_t b = 0) {
    return (static_cast<std::uint64_t>(kind) << 56) | ((a & 0xFFFFFFFFFull) << 20) | (b & 0xFFFFFull);
}

}  // namespace specwass
