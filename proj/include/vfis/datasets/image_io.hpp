// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "vfis/numerics/tensor.hpp"

namespace vfis::datasets {

using numerics::Tensor;

/// Interleaved 8-bit pixels, `channels` = 1 (gray) or 3 (RGB).
struct Image8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> pixels;

  [[nodiscard]] const std::uint8_t* at(std::size_t x, std::size_t y) const noexcept {
    return pixels.data() + (y * width + x) * channels;
  }
};

/// Any PNG is converted to 8-bit RGB on read. Throws DataError.
[[nodiscard]] Image8 read_png_rgb(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image8& image);

/// RGB image -> [3, H, W] in [0, 1] (value / 255).
[[nodiscard]] Tensor image_to_tensor(const Image8& image);
/// [C, H, W] in [0, 1] -> 8-bit image (rounded, clamped).
[[nodiscard]] Image8 tensor_to_image(const Tensor& t);

}  // namespace vfis::datasets
