#pragma once

#include <array>
#include <cstdint>

namespace uql {

// splitmix64 step: mixes and advances a 64-bit state. Used to derive
// generator states from (seed, stream) pairs so that every run seed gets an
// independent, reproducible stream on any platform.
std::uint64_t splitmix64_next(std::uint64_t& state);

// xoshiro256++ with explicit, serializable state. The standard library
// distributions are implementation-defined, so uniform/normal transforms are
// done here with fixed arithmetic; results are bit-identical across builds.
class Rng {
 public:
  // State derivation: s = splitmix64 stream started at
  // seed XOR (0x9E3779B97F4A7C15 * (stream + 1)), drawn four times.
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // Uniform in [0, 1): top 53 bits scaled by 2^-53.
  double uniform();
  double uniform(double lo, double hi);

  // Uniform in {0, ..., n-1}, unbiased via rejection. n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller (cosine branch, no cached spare).
  double normal();

  bool coin() { return (next_u64() >> 63) != 0; }

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace uql
