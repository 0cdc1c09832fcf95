#pragma once

// Little-endian primitives for the .vprd and .vprmap formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "placemap/error.hpp"

namespace placemap::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buffer_.insert(buffer_.end(), p, p + size);
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  void f32s(std::span<const float> v) { bytes(v.data(), v.size_bytes()); }
  void f64s(std::span<const double> v) { bytes(v.data(), v.size_bytes()); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

  const std::vector<std::uint8_t>& buffer() const { return buffer_; }
  std::vector<std::uint8_t> take() { return std::move(buffer_); }

 private:
  std::vector<std::uint8_t> buffer_;
};

// Bounds-checked reader; any overrun is a format error naming `what`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string what)
      : data_(data), what_(std::move(what)) {}

  void bytes(void* out, std::size_t size) {
    need(size);
    std::memcpy(out, data_.data() + pos_, size);
    pos_ += size;
  }
  std::uint8_t u8() { std::uint8_t v; bytes(&v, 1); return v; }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, sizeof v); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, sizeof v); return v; }
  double f64() { double v; bytes(&v, sizeof v); return v; }
  void f32s(std::span<float> out) { bytes(out.data(), out.size_bytes()); }
  void f64s(std::span<double> out) { bytes(out.data(), out.size_bytes()); }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t size) const {
    if (size > remaining()) {
      raise(ErrorKind::Format, what_ + ": truncated at byte " + std::to_string(pos_));
    }
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);

}  // namespace placemap::io
