// This software is licensed under the terms of the Apache Licence Version 2.0
// which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Counter-based random numbers (Philox4x32-10).  A draw is a pure function
// of (seed, counter), so parallel consumers can sample any index in any
// order and still reproduce the exact stream.

namespace bhcoop::rng {

inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kBump0 = 0x9E3779B9u;
  constexpr std::uint32_t kBump1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    const std::array<std::uint32_t, 4> nxt = {
        static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
        static_cast<std::uint32_t>(p1),
        static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
        static_cast<std::uint32_t>(p0)};
    ctr = nxt;
    key[0] += kBump0;
    key[1] += kBump1;
  }
  return ctr;
}

// Map 32 bits into (0,1), never hitting either endpoint.
inline double to_unit(std::uint32_t x) { return (x + 0.5) * 0x1p-32; }

// Two standard normals from one counter block (Box-Muller on lanes 0,1).
inline std::array<double, 2> gauss_at(std::uint64_t seed, std::uint64_t hi,
                                      std::uint64_t lo) {
  const auto blk = philox4x32(
      {static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(lo >> 32),
       static_cast<std::uint32_t>(hi), static_cast<std::uint32_t>(hi >> 32)},
      {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  const double u1 = to_unit(blk[0]);
  const double u2 = to_unit(blk[1]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return {r * std::cos(2.0 * M_PI * u2), r * std::sin(2.0 * M_PI * u2)};
}

// Sequential stream view over the counter space, for consumers that just
// need "the next draw".
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), hi_(stream) {}

  std::array<double, 2> gauss_pair() { return gauss_at(seed_, hi_, lo_++); }

  double uniform() {
    const auto blk = philox4x32(
        {static_cast<std::uint32_t>(lo_), static_cast<std::uint32_t>(lo_ >> 32),
         static_cast<std::uint32_t>(hi_), static_cast<std::uint32_t>(hi_ >> 32)},
        {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
    ++lo_;
    return to_unit(blk[0]);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t hi_;
  std::uint64_t lo_ = 0;
};

}  // namespace bhcoop::rng
