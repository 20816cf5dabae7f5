#include "datamarket/qtable_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace datamarket {

namespace {

constexpr char kMagic[4] = {'S', 'W', 'Q', 'T'};
// Keys longer than this are certainly corrupt (a 64-trader state is 1.5 KiB).
constexpr std::uint32_t kMaxKeyBytes = 1u << 20;

template <typename T>
void put(std::ostream& os, T x) {
  std::uint64_t u = 0;
  if constexpr (std::is_same_v<T, double>) {
    u = std::bit_cast<std::uint64_t>(x);
  } else {
    u = static_cast<std::uint64_t>(x);
  }
  char buf[sizeof(T)];
  for (std::size_t b = 0; b < sizeof(T); ++b) buf[b] = static_cast<char>((u >> (8 * b)) & 0xff);
  os.write(buf, sizeof(T));
}

class Reader {
public:
  Reader(std::istream& is, const std::filesystem::path& path) : is_(is), path_(path) {}

  template <typename T>
  T get(const char* what) {
    unsigned char buf[sizeof(T)];
    read(reinterpret_cast<char*>(buf), sizeof(T), what);
    std::uint64_t u = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) u |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
    if constexpr (std::is_same_v<T, double>) {
      return std::bit_cast<double>(u);
    } else {
      return static_cast<T>(u);
    }
  }

  std::string key(const char* what) {
    const auto len = get<std::uint32_t>(what);
    if (len > kMaxKeyBytes) fail(std::string("implausible ") + what + " length");
    std::string out(len, '\0');
    read(out.data(), len, what);
    return out;
  }

  void read(char* dst, std::size_t n, const char* what) {
    if (!is_.read(dst, static_cast<std::streamsize>(n))) fail(std::string("truncated while reading ") + what);
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("corrupt Q-table file " + path_.string() + ": " + msg);
  }

private:
  std::istream& is_;
  const std::filesystem::path& path_;
};

} // namespace

void save_qtable(const QTable& table, const QTableHeader& header, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic, 4);
  put<std::uint32_t>(os, kQTableFormatVersion);
  put<double>(os, header.uv);
  put<double>(os, header.uc);
  put<std::uint32_t>(os, header.trader_count);
  const auto entries = table.sorted_entries();
  put<std::uint64_t>(os, entries.size());
  for (const auto& e : entries) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.state_key.size()));
    os.write(e.state_key.data(), static_cast<std::streamsize>(e.state_key.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.action_key.size()));
    os.write(e.action_key.data(), static_cast<std::streamsize>(e.action_key.size()));
    put<double>(os, e.value);
  }
  if (!os.flush()) throw std::runtime_error("write failed for " + path.string());
}

QTable load_qtable(const std::filesystem::path& path, QTableHeader* header) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open Q-table file " + path.string());
  Reader in(is, path);

  char magic[4];
  in.read(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) in.fail("bad magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kQTableFormatVersion)
    throw std::runtime_error("Q-table file " + path.string() + " has format version " + std::to_string(version) +
                             ", expected " + std::to_string(kQTableFormatVersion));

  QTableHeader h;
  h.uv = in.get<double>("uv");
  h.uc = in.get<double>("uc");
  h.trader_count = in.get<std::uint32_t>("trader count");
  const auto count = in.get<std::uint64_t>("entry count");

  QTable table;
  for (std::uint64_t k = 0; k < count; ++k) {
    std::string skey = in.key("state key");
    std::string akey = in.key("action key");
    const double v = in.get<double>("value");
    if (skey.size() != 24u * h.trader_count || akey.size() != 16u * h.trader_count)
      in.fail("key length does not match trader count");
    table.set(skey, akey, v);
  }
  if (table.size() != count) in.fail("duplicate entries");
  if (is.peek() != std::char_traits<char>::eof()) in.fail("trailing bytes after last entry");
  if (header != nullptr) *header = h;
  return table;
}

} // namespace datamarket
