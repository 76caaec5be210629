#pragma once

#include "sdspde/ito/process.hpp"
#include "sdspde/stochastic/brownian.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sdspde {

/// Binary replay container, all fields little-endian:
///   "SDSPDEB1", u32 version (1), u32 generator id, u64 M, u64 N, f64 T,
///   u64 seed, u32 coarsening, u32 section count,
///   f64 dW[M][N] row-major,
///   per section: "PROC", u32 name length, name bytes, u64 dim,
///     f64 x0[M][dim], f64 drift[M][N][dim], f64 diffusion[M][N][dim].
inline constexpr std::uint32_t kBundleVersion = 1;

struct BundleSection {
  std::string name;
  ProcessTriple data;
};

struct Bundle {
  EnsemblePtr ensemble;
  std::vector<BundleSection> sections;
};

/// Throws io_error on write failure.
void write_bundle(const std::string& path, const BrownianEnsemble& ens, const std::vector<BundleSection>& sections);
/// Throws io_error on missing files, bad magic, unknown versions or truncation.
Bundle read_bundle(const std::string& path);

std::vector<unsigned char> encode_bundle(const BrownianEnsemble& ens, const std::vector<BundleSection>& sections);
Bundle decode_bundle(const std::vector<unsigned char>& bytes);

}  // namespace sdspde
