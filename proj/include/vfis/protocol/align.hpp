// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vfis::protocol {

/// Ascending intersection of two parties' sample ids. Throws ValidationError
/// if either side lists an id twice.
[[nodiscard]] std::vector<std::uint64_t> entity_align(std::span<const std::uint64_t> ids_a,
                                                      std::span<const std::uint64_t> ids_b);

}  // namespace vfis::protocol
