#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pcam {

// SplitMix64 generator state plus the Box-Muller carry. Single-owner:
// never share one state across threads; derive per-task streams instead
// (seed, seed+1, ... for the top-level streams, base XOR index per sample).
struct RngState {
  std::uint64_t state = 0;
  double carry = 0.0;
  bool has_carry = false;

  RngState() = default;
  explicit RngState(std::uint64_t seed) : state(seed) {}
};

inline std::uint64_t rng_next_u64(RngState& rng) {
  rng.state += 0x9E3779B97F4B7C15ull;
  std::uint64_t z = rng.state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform in [0,1) with 53 random mantissa bits.
inline double rng_uniform(RngState& rng) {
  return static_cast<double>(rng_next_u64(rng) >> 11) * 0x1.0p-53;
}

struct NormalPair {
  double z0, z1;
};

// u1 == 0 is clamped to 2^-53 so the log stays finite.
inline NormalPair box_muller(double u1, double u2) {
  if (u1 == 0.0) u1 = 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

// Standard normal. Consumes two uniforms per pair of draws; the sin twin
// is carried in the state for the next call.
inline double rng_normal(RngState& rng) {
  if (rng.has_carry) {
    rng.has_carry = false;
    return rng.carry;
  }
  const double u1 = rng_uniform(rng);
  const double u2 = rng_uniform(rng);
  const NormalPair p = box_muller(u1, u2);
  rng.carry = p.z1;
  rng.has_carry = true;
  return p.z0;
}

}  // namespace pcam
