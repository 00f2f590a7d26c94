#pragma once

#include <cstdint>
#include <random>

namespace tiltdiff {

using Rng = std::mt19937_64;

/// Deterministic substream: the same (seed, stream) pair always yields the
/// same engine state, independent of how many other streams exist.
inline Rng substream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32), 0x7417u};
    return Rng(seq);
}

/// Draws a fresh 64-bit seed from an engine, for handing to substream().
inline std::uint64_t draw_seed(Rng& rng) { return rng(); }

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace tiltdiff
