#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace rprec {

/// Writes `bytes` to a temporary sibling of `path` and renames it into place,
/// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// "%.17g": round-trips every double.
std::string format_real(double value);

namespace binary {

void put_u64(std::string& out, std::uint64_t value);
void put_f64(std::string& out, double value);

/// Little-endian cursor over a byte buffer. Running past the end throws
/// kTruncated.
class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  std::uint64_t u64();
  double f64();
  std::string_view take(std::size_t count);
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace binary
}  // namespace rprec
