#pragma once

#include <cstdint>

namespace onebit {

// Mixes two 64-bit words into one with full avalanche (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t a, std::uint64_t b);

// Splittable counter-seeded random stream. Two streams constructed with the
// same (seed, stream_id) produce identical draw sequences, so a Monte-Carlo
// trial can be replayed independently of the order trials execute in.
//
// The generator is a hand-rolled xoshiro256** seeded through splitmix64, and
// normal draws use Box-Muller; both are pinned here instead of <random>
// distributions so that every platform and libstdc++ version emits the same
// bytes.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Derives a child stream; children with distinct ids are independent.
  RngStream substream(std::uint64_t id) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform integer on [0, n), n >= 1. Exact (rejection sampling).
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal N(0, 1).
  double normal();

 private:
  std::uint64_t s_[4];
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace onebit
