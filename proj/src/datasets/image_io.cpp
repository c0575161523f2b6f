// SPDX-License-Identifier: Apache-2.0

#include "vfis/datasets/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "vfis/errors.hpp"

namespace vfis::datasets {

Image8 read_png_rgb(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw DataError("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image8 out;
  out.width = img.width;
  out.height = img.height;
  out.channels = 3;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw DataError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Image8& image) {
  if (image.channels != 1 && image.channels != 3) throw DataError("write_png: unsupported channel count");
  if (image.pixels.size() != image.width * image.height * image.channels) throw DataError("write_png: size mismatch");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw DataError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

Tensor image_to_tensor(const Image8& image) {
  if (image.channels != 3) throw DataError("image_to_tensor: expected RGB");
  Tensor t({3, image.height, image.width});
  const std::size_t plane = image.height * image.width;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) t[c * plane + i] = image.pixels[i * 3 + c] / 255.0;
  return t;
}

Image8 tensor_to_image(const Tensor& t) {
  if (t.rank() != 3) throw DimensionError("tensor_to_image: expected [C, H, W]");
  Image8 img;
  img.channels = t.dim(0);
  img.height = t.dim(1);
  img.width = t.dim(2);
  if (img.channels != 1 && img.channels != 3) throw DimensionError("tensor_to_image: expected 1 or 3 channels");
  const std::size_t plane = img.height * img.width;
  img.pixels.resize(plane * img.channels);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < img.channels; ++c) {
      const double v = std::clamp(t[c * plane + i], 0.0, 1.0);
      img.pixels[i * img.channels + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return img;
}

}  // namespace vfis::datasets
