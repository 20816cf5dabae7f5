#include "datamarket/rng.hpp"

namespace datamarket {

namespace {

// FNV-1a; std::hash is not stable across implementations.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace

Rng make_stream(std::uint64_t seed, std::string_view name) {
  const std::uint64_t tag = fnv1a(name);
  std::seed_seq seq{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return Rng{seq};
}

} // namespace datamarket
