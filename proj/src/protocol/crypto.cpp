// SPDX-License-Identifier: Apache-2.0

#include "vfis/protocol/crypto.hpp"

#include <sodium.h>

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "vfis/errors.hpp"

namespace vfis::protocol {

namespace {
void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw CryptoError("libsodium initialisation failed");
}
static_assert(crypto_aead_chacha20poly1305_ietf_KEYBYTES == kKeySize);
static_assert(crypto_aead_chacha20poly1305_ietf_NPUBBYTES == kNonceSize);
static_assert(crypto_aead_chacha20poly1305_ietf_ABYTES == kTagSize);
}  // namespace

std::array<std::uint8_t, kNonceSize> Nonce::bytes() const noexcept {
  std::array<std::uint8_t, kNonceSize> b{};
  const auto d = static_cast<std::uint32_t>(direction);
  for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(d >> (8 * i));
  for (int i = 0; i < 8; ++i) b[4 + i] = static_cast<std::uint8_t>(counter >> (8 * i));
  return b;
}

Bytes seal(ByteView plaintext, const Key& key, const Nonce& nonce, ByteView associated) {
  ensure_sodium();
  Bytes out(plaintext.size() + kTagSize);
  unsigned long long len = 0;
  const auto nb = nonce.bytes();
  crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &len, plaintext.data(), plaintext.size(), associated.data(),
                                            associated.size(), nullptr, nb.data(), key.data());
  out.resize(static_cast<std::size_t>(len));
  return out;
}

Bytes open(ByteView sealed, const Key& key, const Nonce& nonce, ByteView associated) {
  ensure_sodium();
  if (sealed.size() < kTagSize) throw CryptoError("sealed payload shorter than its tag");
  Bytes out(sealed.size() - kTagSize);
  unsigned long long len = 0;
  const auto nb = nonce.bytes();
  if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &len, nullptr, sealed.data(), sealed.size(),
                                                associated.data(), associated.size(), nb.data(), key.data()) != 0) {
    throw CryptoError("authentication failed: payload or header was altered, or the key/nonce is wrong");
  }
  out.resize(static_cast<std::size_t>(len));
  return out;
}

Nonce NonceSequence::next() {
  const Nonce n = peek();
  claim(n);
  return n;
}

void NonceSequence::claim(const Nonce& n) {
  if (n.direction != direction_) throw CryptoError("nonce belongs to the other direction");
  if (exhausted_) throw CryptoError("nonce counter exhausted");
  if (n.counter < next_) {
    throw CryptoError("nonce reuse: counter " + std::to_string(n.counter) + " already used (next is " +
                      std::to_string(next_) + ")");
  }
  if (n.counter == std::numeric_limits<std::uint64_t>::max()) exhausted_ = true;
  next_ = n.counter + 1;
}

Key parse_key_hex(const std::string& hex) {
  Bytes b;
  try {
    b = from_hex(hex);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("key: ") + e.what());
  }
  if (b.size() != kKeySize) {
    throw ConfigError("key must be 32 bytes (64 hex digits), got " + std::to_string(b.size()) + " bytes");
  }
  Key k{};
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

Key read_key_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read key file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_hex(ss.str());
}

std::optional<Key> key_from_env(const char* variable) {
  const char* v = std::getenv(variable);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return parse_key_hex(v);
}

}  // namespace vfis::protocol
