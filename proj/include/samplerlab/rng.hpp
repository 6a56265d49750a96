#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace samplerlab {

using RngEngine = std::mt19937_64;

// One splitmix64 step; good enough mixing for seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a master seed and a stream path such as
// {cell, replicate, stream}. Every (master, path) pair maps to its own
// generator so replicates and sweep cells can run concurrently without
// sharing RNG state.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = master;
  std::uint64_t h = splitmix64(state);
  for (std::uint64_t part : path) {
    state ^= part + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= splitmix64(state);
  }
  return h;
}

inline RngEngine make_rng(std::uint64_t master,
                          std::initializer_list<std::uint64_t> path) {
  return RngEngine(derive_seed(master, path));
}

// Stream tags for the per-run generators of one experiment replicate.
enum class Stream : std::uint64_t {
  Environment = 1,
  Ds = 2,
  Rwm = 3,
  Mc3 = 4,
  RwmLevy = 5,
};

inline RngEngine make_rng(std::uint64_t master, std::uint64_t cell,
                          std::uint64_t replicate, Stream stream) {
  return make_rng(master, {cell, replicate, static_cast<std::uint64_t>(stream)});
}

}  // namespace samplerlab
