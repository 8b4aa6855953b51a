#include "opecv/random.hpp"

#include <bit>

#include "opecv/error.hpp"

namespace opecv {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x6a09e667f3bcc908ULL;
  for (std::uint64_t part : parts) {
    state = mix64(state ^ mix64(part));
  }
  return state;
}

std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  if (bound == 0) throw InvalidInput("uniform_index needs a positive bound");
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

std::uint64_t hash_real(double value) {
  if (value == 0.0) value = 0.0;  // fold -0 into +0
  return std::bit_cast<std::uint64_t>(value);
}

}  // namespace opecv
