#pragma once

// Seed derivation and the random stream used by the cut-schedule generator.
//
// std::mt19937_64 output is pinned by the standard, so runs are reproducible
// across compilers. Seed mixing uses splitmix64 so that per-replication and
// per-purpose streams never overlap: adding draws to one stream can never
// perturb another.

#include <cstdint>
#include <random>

namespace cutsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named sub-streams within one replication.
enum class RngStream : std::uint64_t {
  kChannel = 0x6368616e6e656cULL,   // "channel"
  kProtocol = 0x70726f746f636fULL,  // "protoco"
};

// Per-replication seed.
inline std::uint64_t derive_run_seed(std::uint64_t base_seed, int rep) {
  return splitmix64(base_seed ^ splitmix64(static_cast<std::uint64_t>(rep)));
}

// Per-purpose seed within a replication.
inline std::uint64_t derive_stream_seed(std::uint64_t run_seed, RngStream s) {
  return splitmix64(run_seed ^ static_cast<std::uint64_t>(s));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform over the closed integer range [lo, hi]. Modulo on a 64-bit draw;
  // bias is below 2^-50 for the spans used here.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cutsim
