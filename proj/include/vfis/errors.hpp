// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy shared by every module. The CLI maps each category to
// an exit code, so new failure modes should reuse one of these.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace vfis {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not line up with what an operation requires.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An invalid setting: bad config key/value, unsupported combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented contract (duplicate ids, non-binary mask).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in the wrong lifecycle state (e.g. backward
/// without a matching forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unexpected wire data. Carries the byte offset when known.
class ProtocolError : public Error {
 public:
  explicit ProtocolError(const std::string& what,
                         std::optional<std::size_t> offset = std::nullopt)
      : Error(offset ? what + " (at byte offset " + std::to_string(*offset) + ")" : what),
        offset_(offset) {}

  [[nodiscard]] std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  std::optional<std::size_t> offset_;
};

/// AEAD tag mismatch or any failure of the sealing layer.
class CryptoError : public Error {
 public:
  using Error::Error;
};

/// Socket/connection failures.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Missing or unreadable files, ids absent from a store.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numeric check (gradient oracle) failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace vfis
