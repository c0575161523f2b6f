// SPDX-License-Identifier: Apache-2.0
//
// Little-endian byte (de)serialisation helpers.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vfis::protocol {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v);
  void f32(float v);
  void bytes(ByteView b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  /// u16 length prefix + raw bytes.
  void str(const std::string& s);

  [[nodiscard]] std::size_t size() const noexcept { return buf_.size(); }
  [[nodiscard]] Bytes take() noexcept { return std::move(buf_); }
  void reserve(std::size_t n) { buf_.reserve(n); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes buf_;
};

/// Bounds-checked reader; every failure is a ProtocolError carrying the
/// absolute offset (base_offset + position).
class ByteReader {
 public:
  explicit ByteReader(ByteView data, std::size_t base_offset = 0) : data_(data), base_(base_offset) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64();
  float f32();
  ByteView bytes(std::size_t n);
  std::string str();

  [[nodiscard]] std::size_t offset() const noexcept { return base_ + pos_; }
  [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }
  /// Throws unless every byte has been consumed.
  void expect_end(const char* what) const;

 private:
  std::uint64_t get(int n);
  ByteView data_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

[[nodiscard]] std::string to_hex(ByteView b);
[[nodiscard]] Bytes from_hex(const std::string& hex);

}  // namespace vfis::protocol
