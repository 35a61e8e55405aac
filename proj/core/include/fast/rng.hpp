#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fast {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a root seed and a tuple of tags,
// e.g. derive_seed(seed, {kTagTrain, client, round}).
constexpr std::uint64_t derive_seed(std::uint64_t root,
                                    std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(root);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x632BE59BD9B4E019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t root,
                    std::initializer_list<std::uint64_t> tags = {}) {
  return Rng(derive_seed(root, tags));
}

// Stream tags used by the pipeline. Values are arbitrary but frozen; changing
// one changes every downstream result for a given seed.
enum StreamTag : std::uint64_t {
  kTagSplit = 0x11,
  kTagPartition = 0x22,
  kTagInitialPool = 0x33,
  kTagModelInit = 0x44,
  kTagTrain = 0x55,
  kTagQuery = 0x66,
  kTagSynthetic = 0x77,
};

}  // namespace fast
