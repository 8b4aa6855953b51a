#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace opecv {

// Every randomized operation takes one of these by reference. Streams are
// never shared between threads; derive a fresh one per task instead.
using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// Deterministic sub-seed from an ordered tuple of components, e.g.
// (master_seed, run_index, split_index). Order matters.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

// Stable 64-bit hash of a string (FNV-1a) for folding names into seeds.
std::uint64_t hash_name(std::string_view name);

// Bit pattern of a double, for folding real-valued condition keys into seeds.
std::uint64_t hash_real(double value);

inline Rng make_rng(std::initializer_list<std::uint64_t> parts) {
  return Rng(derive_seed(parts));
}

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, bound) by rejection; bound must be positive.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound);

}  // namespace opecv
