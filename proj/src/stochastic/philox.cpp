#include "sdspde/stochastic/philox.hpp"

#include "sdspde/error.hpp"

#include <cmath>
#include <numbers>

namespace sdspde {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kBump0 = 0x9E3779B9u;
constexpr std::uint32_t kBump1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double uniform53(std::uint32_t a, std::uint32_t b) {
  const std::uint64_t x = (static_cast<std::uint64_t>(a) << 21) ^ (b >> 11);
  return (static_cast<double>(x) + 0.5) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kBump0;
      k[1] += kBump1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
  return c;
}

std::array<double, 2> philox_normal_pair(std::uint64_t seed, std::uint64_t m, std::uint32_t j,
                                         std::uint32_t stream) {
  const PhiloxCounter ctr{j, static_cast<std::uint32_t>(m), static_cast<std::uint32_t>(m >> 32), stream};
  const PhiloxKey key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const PhiloxCounter w = philox4x32_10(ctr, key);
  const double u1 = uniform53(w[0], w[1]), u2 = uniform53(w[2], w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

double philox_normal(std::uint64_t seed, std::uint64_t m, std::uint64_t n, std::uint32_t stream) {
  if (n / 2 > 0xFFFFFFFFull) throw Error(ErrorCode::invalid_argument, "philox_normal: index out of range");
  const auto z = philox_normal_pair(seed, m, static_cast<std::uint32_t>(n / 2), stream);
  return z[n % 2];
}

}  // namespace sdspde
