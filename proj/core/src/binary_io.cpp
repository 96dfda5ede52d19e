#include "ensdep/binary_io.hpp"

#include <zlib.h>

#include <atomic>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "ensdep/error.hpp"

namespace ensdep {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

void ByteWriter::u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }

void ByteWriter::u16(std::uint16_t v) {
  char raw[2];
  std::memcpy(raw, &v, 2);
  buffer_.append(raw, 2);
}

void ByteWriter::u32(std::uint32_t v) {
  char raw[4];
  std::memcpy(raw, &v, 4);
  buffer_.append(raw, 4);
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f64(double v) {
  char raw[8];
  std::memcpy(raw, &v, 8);
  buffer_.append(raw, 8);
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buffer_.append(s);
}

void ByteReader::need(std::size_t n) const {
  if (n > remaining()) {
    throw Error(ErrorCategory::format, context_ + ": truncated at byte " + std::to_string(offset_));
  }
}

std::string_view ByteReader::bytes(std::size_t n) {
  need(n);
  auto out = data_.substr(offset_, n);
  offset_ += n;
  return out;
}

std::uint8_t ByteReader::u8() {
  need(1);
  return static_cast<std::uint8_t>(data_[offset_++]);
}

std::uint16_t ByteReader::u16() {
  std::uint16_t v;
  std::memcpy(&v, bytes(2).data(), 2);
  return v;
}

std::uint32_t ByteReader::u32() {
  std::uint32_t v;
  std::memcpy(&v, bytes(4).data(), 4);
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

double ByteReader::f64() {
  double v;
  std::memcpy(&v, bytes(8).data(), 8);
  return v;
}

std::string ByteReader::str() {
  const auto n = u32();
  return std::string(bytes(n));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) +
         "_" + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCategory::io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCategory::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCategory::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::uint32_t crc32(std::string_view data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace ensdep
