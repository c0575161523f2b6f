// SPDX-License-Identifier: Apache-2.0

#include "vfis/protocol/align.hpp"

#include <algorithm>
#include <iterator>
#include <string>

#include "vfis/errors.hpp"

namespace vfis::protocol {

namespace {
std::vector<std::uint64_t> sorted_unique(std::span<const std::uint64_t> ids, const char* party) {
  std::vector<std::uint64_t> v(ids.begin(), ids.end());
  std::sort(v.begin(), v.end());
  const auto dup = std::adjacent_find(v.begin(), v.end());
  if (dup != v.end()) {
    throw ValidationError(std::string("entity alignment: ") + party + " lists sample id " + std::to_string(*dup) +
                          " more than once");
  }
  return v;
}
}  // namespace

std::vector<std::uint64_t> entity_align(std::span<const std::uint64_t> ids_a, std::span<const std::uint64_t> ids_b) {
  const auto a = sorted_unique(ids_a, "first party");
  const auto b = sorted_unique(ids_b, "second party");
  std::vector<std::uint64_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace vfis::protocol
