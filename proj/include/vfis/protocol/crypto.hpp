// SPDX-License-Identifier: Apache-2.0
//
// Payload sealing with ChaCha20-Poly1305 (IETF variant: 96-bit nonce,
// 128-bit tag) from libsodium. Nonces are never transmitted: each direction
// keeps a strictly increasing counter on both ends, which doubles as replay
// protection under the lockstep exchange.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "vfis/protocol/bytes.hpp"

namespace vfis::protocol {

inline constexpr std::size_t kKeySize = 32;
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;

using Key = std::array<std::uint8_t, kKeySize>;

enum class Direction : std::uint32_t { bottom_to_top = 0, top_to_bottom = 1 };

/// 96-bit nonce: 32-bit direction id || 64-bit counter, little-endian.
struct Nonce {
  Direction direction = Direction::bottom_to_top;
  std::uint64_t counter = 0;

  [[nodiscard]] std::array<std::uint8_t, kNonceSize> bytes() const noexcept;
  friend bool operator==(const Nonce&, const Nonce&) = default;
};

/// ciphertext || tag; `associated` is authenticated but not encrypted.
[[nodiscard]] Bytes seal(ByteView plaintext, const Key& key, const Nonce& nonce, ByteView associated = {});
/// Throws CryptoError on any authentication failure; never returns garbage.
[[nodiscard]] Bytes open(ByteView sealed, const Key& key, const Nonce& nonce, ByteView associated = {});

/// Hands out the nonces for one direction and refuses to go backwards.
class NonceSequence {
 public:
  explicit NonceSequence(Direction d) : direction_(d) {}

  /// Throws CryptoError once the 64-bit counter space is used up.
  [[nodiscard]] Nonce next();
  [[nodiscard]] Nonce peek() const noexcept { return {direction_, next_}; }
  /// Marks `n` as used; throws CryptoError if it was already used or lies
  /// behind the sequence.
  void claim(const Nonce& n);

 private:
  Direction direction_;
  std::uint64_t next_ = 0;
  bool exhausted_ = false;
};

[[nodiscard]] Key parse_key_hex(const std::string& hex);
[[nodiscard]] Key read_key_file(const std::filesystem::path& path);
[[nodiscard]] std::optional<Key> key_from_env(const char* variable = "VFIS_KEY");

}  // namespace vfis::protocol
