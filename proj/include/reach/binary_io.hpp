#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reach/error.hpp"

namespace reach::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

/// Little-endian append-only byte buffer.
class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v)); }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }

  const std::string& data() const { return buf_; }
  std::string release() { return std::move(buf_); }

 private:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
  }
  std::string buf_;
};

/// Little-endian cursor over a byte buffer. Every failure throws FormatError
/// naming the offset at which it occurred.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get<std::uint8_t>()); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(get<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw FormatError(what_ + ": " + msg + " at offset " + std::to_string(at));
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }

 private:
  void need(std::size_t n) {
    if (remaining() < n) fail("truncated (need " + std::to_string(n) + " bytes)");
  }
  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

/// Reads a whole file. Throws IoError.
std::string read_file(const std::string& path);

/// Writes to a temporary sibling then renames, so a failed write never
/// leaves a partial file at `path`. Throws IoError.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace reach::io
