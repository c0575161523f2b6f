// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint file (little-endian):
//
//   "VFCK"  u16 version  u16 len + preset bytes  u32 tensor count
//   per tensor: u16 len + name bytes, u8 rank, u64 extents[rank], f64 data
//
// Loading is strict: wrong magic, version or preset, truncation, trailing
// bytes or a shape mismatch all fail with CheckpointError.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vfis/errors.hpp"
#include "vfis/numerics/tensor.hpp"
#include "vfis/protocol/bytes.hpp"

namespace vfis::orchestrator {

using numerics::NamedTensor;
using numerics::Tensor;

inline constexpr std::uint16_t kCheckpointVersion = 1;

class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

struct Checkpoint {
  std::string preset;
  std::vector<std::pair<std::string, Tensor>> tensors;

  [[nodiscard]] const Tensor* find(const std::string& name) const noexcept;
};

[[nodiscard]] protocol::Bytes serialize_checkpoint(const std::string& preset, std::span<const NamedTensor> tensors);
[[nodiscard]] Checkpoint parse_checkpoint(protocol::ByteView bytes);

/// Writes to a temporary sibling and renames, so a crash never leaves a
/// half-written checkpoint behind.
void save_checkpoint(const std::filesystem::path& path, const std::string& preset,
                     std::span<const NamedTensor> tensors);
[[nodiscard]] Checkpoint read_checkpoint(const std::filesystem::path& path);

enum class Strictness {
  exact,   // file and targets hold the same names
  subset,  // every target must be present; extra file entries are ignored
  shapes,  // only entries present in both are checked and copied
};

/// Copies tensors into `targets` by name. Refuses a different preset.
void restore(const Checkpoint& ckpt, const std::string& expected_preset, std::span<const NamedTensor> targets,
             Strictness strictness = Strictness::exact);

void load_checkpoint(const std::filesystem::path& path, const std::string& expected_preset,
                     std::span<const NamedTensor> targets, Strictness strictness = Strictness::exact);

/// Loads externally prepared weights (e.g. converted VGG16 convolutions)
/// into whichever targets the file names; every named tensor must match in
/// shape. Returns the number of tensors copied; zero is an error.
std::size_t import_weights(const std::filesystem::path& path, const std::string& expected_preset,
                           std::span<const NamedTensor> targets);

}  // namespace vfis::orchestrator
