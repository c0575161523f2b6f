// SPDX-License-Identifier: Apache-2.0

#include "vfis/protocol/bytes.hpp"

#include <bit>
#include <cctype>

#include "vfis/errors.hpp"

namespace vfis::protocol {

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::str(const std::string& s) {
  if (s.size() > 0xFFFF) throw ProtocolError("string field longer than 65535 bytes");
  u16(static_cast<std::uint16_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

std::uint64_t ByteReader::get(int n) {
  if (remaining() < static_cast<std::size_t>(n)) throw ProtocolError("truncated field", offset());
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += static_cast<std::size_t>(n);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }
float ByteReader::f32() { return std::bit_cast<float>(u32()); }

ByteView ByteReader::bytes(std::size_t n) {
  if (remaining() < n) throw ProtocolError("truncated byte field", offset());
  auto v = data_.subspan(pos_, n);
  pos_ += n;
  return v;
}

std::string ByteReader::str() {
  const std::size_t n = u16();
  auto b = bytes(n);
  return std::string(b.begin(), b.end());
}

void ByteReader::expect_end(const char* what) const {
  if (remaining() != 0) {
    throw ProtocolError(std::string(what) + ": " + std::to_string(remaining()) + " unexpected trailing bytes", offset());
  }
}

std::string to_hex(ByteView b) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(b.size() * 2);
  for (auto c : b) {
    s.push_back(kDigits[c >> 4]);
    s.push_back(kDigits[c & 0xF]);
  }
  return s;
}

Bytes from_hex(const std::string& hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  Bytes out;
  int hi = -1;
  for (char c : hex) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    const int v = nibble(c);
    if (v < 0) throw ValidationError(std::string("invalid hex digit '") + c + "'");
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
      hi = -1;
    }
  }
  if (hi >= 0) throw ValidationError("hex string has an odd number of digits");
  return out;
}

}  // namespace vfis::protocol
