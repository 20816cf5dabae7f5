#pragma once
#include <cstdint>
#include <random>
#include <string_view>

namespace datamarket {

using Rng = std::mt19937_64;

// Independent named stream derived from a run seed. Adding a new stream name
// never changes the sequence produced by an existing one.
Rng make_stream(std::uint64_t seed, std::string_view name);

} // namespace datamarket
