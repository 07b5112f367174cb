#pragma once

#include <array>
#include <cstdint>

namespace pedflow {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
 * numbers: as easy as 1, 2, 3").  A 128-bit counter and a 64-bit key map to
 * four independent 32-bit words; distinct counters give independent draws, so
 * substreams can be indexed directly by (particle id, step, draw) without any
 * sequential state.  Known-answer vectors are pinned in the tests.
 */
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

    /// Uniform double in [0,1) from two words (53 significant bits).
    static double uniform(std::uint32_t a, std::uint32_t b) {
        const std::uint64_t mant = (std::uint64_t(a >> 5) << 26) | std::uint64_t(b >> 6);
        return static_cast<double>(mant) * 0x1.0p-53;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Per-particle substream: counter = (particle lo, particle hi, step, draw).
class ParticleStream {
public:
    ParticleStream(std::uint64_t seed, std::uint64_t particle)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          particle_lo_(static_cast<std::uint32_t>(particle)),
          particle_hi_(static_cast<std::uint32_t>(particle >> 32)) {}

    Philox4x32::Counter words(std::uint32_t step, std::uint32_t draw) const {
        return Philox4x32::block({particle_lo_, particle_hi_, step, draw}, key_);
    }

    double uniform(std::uint32_t step, std::uint32_t draw) const {
        const auto w = words(step, draw);
        return Philox4x32::uniform(w[0], w[1]);
    }

private:
    Philox4x32::Key key_;
    std::uint32_t particle_lo_;
    std::uint32_t particle_hi_;
};

}  // namespace pedflow
