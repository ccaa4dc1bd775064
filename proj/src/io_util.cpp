#include "rprec/io_util.hpp"

#include <atomic>
#include <bit>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include <fmt/format.h>

#include "rprec/error.hpp"

namespace rprec {

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  static std::atomic<std::uint64_t> sequence{0};
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp.{}.{}", static_cast<long>(::getpid()), sequence++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIoError, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      fail(ErrorCode::kIoError, "failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    fail(ErrorCode::kIoError, "cannot move output into place at " + path.string() + ": " +
                                  ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) fail(ErrorCode::kIoError, "failed reading " + path.string());
  return buffer.str();
}

std::string format_real(double value) { return fmt::format("{:.17g}", value); }

namespace binary {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

void put_u64(std::string& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double value) { put_u64(out, std::bit_cast<std::uint64_t>(value)); }

std::string_view Reader::take(std::size_t count) {
  if (remaining() < count) fail(ErrorCode::kTruncated, "unexpected end of binary payload");
  std::string_view out = bytes_.substr(pos_, count);
  pos_ += count;
  return out;
}

std::uint64_t Reader::u64() {
  std::string_view raw = take(8);
  std::uint64_t value = 0;
  for (int i = 7; i >= 0; --i) value = (value << 8) | static_cast<unsigned char>(raw[i]);
  return value;
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

}  // namespace binary
}  // namespace rprec
