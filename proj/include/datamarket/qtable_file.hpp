#pragma once
#include <cstdint>
#include <filesystem>

#include "datamarket/qlearning.hpp"

namespace datamarket {

// Binary layout (little-endian):
//   "SWQT" | u32 version | f64 uv | f64 uc | u32 trader_count | u64 entries
//   then per entry: u32 len + state key | u32 len + action key | f64 value
// Entries are written in sorted key order so equal tables give equal files.
inline constexpr std::uint32_t kQTableFormatVersion = 1;

struct QTableHeader {
  double uv{1.0};
  double uc{1.0};
  std::uint32_t trader_count{0};

  bool operator==(const QTableHeader&) const = default;
};

// Throws std::runtime_error on I/O failure.
void save_qtable(const QTable& table, const QTableHeader& header, const std::filesystem::path& path);

// Throws std::runtime_error on a missing file, bad magic, version mismatch,
// or truncated/corrupt content.
QTable load_qtable(const std::filesystem::path& path, QTableHeader* header = nullptr);

} // namespace datamarket
