#pragma once

#include <cstdint>
#include <random>

namespace qds {

using Rng = std::mt19937_64;

/// Purposes for independent random streams derived from one user seed.
enum class StreamPurpose : std::uint32_t {
    ChannelSampling = 1,
    PulsePreparation = 2,
    TestSelection = 3,
    Symmetrization = 4,
    KeySynthesis = 5,
    Attack = 6,
};

/// Independent generator for (seed, party, purpose). Not cryptographic.
inline Rng make_stream(std::uint64_t seed, std::uint32_t party, StreamPurpose purpose) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), party,
                      static_cast<std::uint32_t>(purpose), 0x5eedu};
    return Rng(seq);
}

/// Uniform double in [0,1) from the top 53 bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace qds
