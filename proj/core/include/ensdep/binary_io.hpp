#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace ensdep {

/// Little-endian encoder into an in-memory byte buffer.
class ByteWriter {
 public:
  void bytes(std::string_view raw) { buffer_.append(raw); }
  void u8(std::uint8_t v);
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void f32(float v);
  void f64(double v);
  /// u32 byte length followed by the raw bytes.
  void str(std::string_view s);

  const std::string& buffer() const noexcept { return buffer_; }
  std::string release() noexcept { return std::move(buffer_); }

 private:
  std::string buffer_;
};

/// Bounds-checked little-endian decoder. Every read past the end throws a
/// format error that names `context`.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string context)
      : data_(data), context_(std::move(context)) {}

  std::string_view bytes(std::size_t n);
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  float f32();
  double f64();
  std::string str();

  std::size_t offset() const noexcept { return offset_; }
  std::size_t remaining() const noexcept { return data_.size() - offset_; }

 private:
  void need(std::size_t n) const;

  std::string_view data_;
  std::string context_;
  std::size_t offset_ = 0;
};

std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place, so a
/// reader never sees a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::uint32_t crc32(std::string_view data);

}  // namespace ensdep
