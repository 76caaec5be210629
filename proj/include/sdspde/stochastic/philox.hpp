#pragma once

#include <array>
#include <cstdint>

namespace sdspde {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., Random123 constants).
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Generator id stored in bundles: Philox4x32-10 counters (n/2, m lo, m hi,
/// stream) under key = seed, 53-bit uniforms, Box-Muller pairs.
inline constexpr std::uint32_t kPhiloxBoxMuller = 1;

/// Standard normal number n of path m in the given stream.
double philox_normal(std::uint64_t seed, std::uint64_t m, std::uint64_t n, std::uint32_t stream);

/// The pair of normals sharing one Philox block (indices 2j and 2j+1).
std::array<double, 2> philox_normal_pair(std::uint64_t seed, std::uint64_t m, std::uint32_t j,
                                         std::uint32_t stream);

}  // namespace sdspde
