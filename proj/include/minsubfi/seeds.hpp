#pragma once

#include <cstdint>

namespace minsubfi {

// All randomness of a run flows from one master seed. Stream s of master m
// is splitmix64(16 m + s), so streams never collide across masters.
enum class SeedStream : std::uint64_t {
  env = 1,
  init = 2,
  train = 3,
  eval = 4,
  bc = 5,
  offline = 6,
  features = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, SeedStream stream) {
  return splitmix64(master * 16 + static_cast<std::uint64_t>(stream));
}

}  // namespace minsubfi
