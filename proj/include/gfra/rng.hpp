#ifndef GFRA_RNG_HPP
#define GFRA_RNG_HPP

#include <cstdint>
#include <random>

namespace gfra {

// splitmix64 finalizer; used to derive independent per-trial seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed splitting rule: mix the master seed with the (1-based) power-point
// index, then with the (1-based) trial index. Collision-free over any
// practical sweep size; checked by test.
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed,
                                       std::uint64_t power_index,
                                       std::uint64_t trial_index) {
  std::uint64_t s = splitmix64(master_seed ^ splitmix64(power_index + 1));
  return splitmix64(s ^ splitmix64(trial_index + 1));
}

using Rng = std::mt19937_64;

}  // namespace gfra

#endif
