#pragma once

#include <cstdint>
#include <random>

namespace mabmdp {

// Seeded random source owned by exactly one simulation run.
//
// A run is identified by (seed, stream). Each pair seeds its own mt19937_64
// through std::seed_seq, so runs of a sweep draw from independent streams and
// can be replayed one at a time. Uniform doubles use the top 53 bits of the
// engine output; both the engine and seed_seq are fully specified by the
// standard, so sequences are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  // Uniform on [0, 1).
  double uniform();
  std::uint64_t next_u64() { return engine_(); }

  // Independent generator for a child stream of the same seed.
  Rng substream(std::uint64_t stream) const { return Rng(seed_, stream); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace mabmdp
