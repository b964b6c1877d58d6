#pragma once

#include <array>
#include <cstdint>

namespace chshforge {

/// Counter-based random number generation (Philox-4x32-10,
/// Salmon et al., SC'11). A stream is identified by a 64-bit key and a
/// 64-bit stream index; successive blocks are produced by incrementing
/// a 64-bit counter. Streams with distinct (key, stream) pairs are
/// statistically independent, which gives reproducible per-shot
/// randomness regardless of how shots are distributed over workers.
class Philox {
  public:
    Philox(uint64_t key, uint64_t stream) : buffered_(0) {
        key_[0] = static_cast<uint32_t>(key);
        key_[1] = static_cast<uint32_t>(key >> 32);
        ctr_[0] = 0;
        ctr_[1] = 0;
        ctr_[2] = static_cast<uint32_t>(stream);
        ctr_[3] = static_cast<uint32_t>(stream >> 32);
    }

    uint32_t next_u32() {
        if (buffered_ == 0) {
            block_ = round10(ctr_, key_);
            // 64-bit block counter in words 0..1; words 2..3 hold the stream id.
            if (++ctr_[0] == 0) ++ctr_[1];
            buffered_ = 4;
        }
        return block_[4 - buffered_--];
    }

    uint64_t next_u64() {
        uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform() < p;
    }

    /// Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n) {
        // Rejection sampling to avoid modulo bias.
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

  private:
    static constexpr uint32_t kWeylA = 0x9E3779B9u;
    static constexpr uint32_t kWeylB = 0xBB67AE85u;
    static constexpr uint32_t kMultA = 0xD2511F53u;
    static constexpr uint32_t kMultB = 0xCD9E8D57u;

    static std::array<uint32_t, 4> round10(const std::array<uint32_t, 4>& ctr,
                                           const std::array<uint32_t, 2>& key) {
        std::array<uint32_t, 4> x = ctr;
        std::array<uint32_t, 2> k = key;
        for (int r = 0; r < 10; r++) {
            uint64_t prod_a = static_cast<uint64_t>(kMultA) * x[0];
            uint64_t prod_b = static_cast<uint64_t>(kMultB) * x[2];
            uint32_t hi_a = static_cast<uint32_t>(prod_a >> 32);
            uint32_t lo_a = static_cast<uint32_t>(prod_a);
            uint32_t hi_b = static_cast<uint32_t>(prod_b >> 32);
            uint32_t lo_b = static_cast<uint32_t>(prod_b);
            x = {hi_b ^ x[1] ^ k[0], lo_b, hi_a ^ x[3] ^ k[1], lo_a};
            k[0] += kWeylA;
            k[1] += kWeylB;
        }
        return x;
    }

    std::array<uint32_t, 2> key_;
    std::array<uint32_t, 4> ctr_;
    std::array<uint32_t, 4> block_{};
    int buffered_;
};

/// Deterministically mixes a seed with up to four tags into a new 64-bit
/// seed. Used to derive independent sub-streams for (repetition, phase,
/// basis, ...) jobs from one experiment seed.
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0,
                            uint64_t d = 0) {
    Philox mix(seed ^ (a * 0x9E3779B97F4A7C15ull), b ^ (c << 20) ^ (d << 40));
    return mix.next_u64();
}

}  // namespace chshforge
