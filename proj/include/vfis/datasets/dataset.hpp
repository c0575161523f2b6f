// SPDX-License-Identifier: Apache-2.0
//
// Sample pairs, road-mask derivation, resizing, and the per-party stores.
//
// On-disk layout:   <root>/images/<id>.png   RGB frame
//                   <root>/labels/<id>.png   RGB class-colour label
// Ids are the numeric file stems.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vfis/datasets/image_io.hpp"

namespace vfis::datasets {

struct RoadColor {
  std::uint8_t r = 128, g = 64, b = 128;  // CamVid "Road"
  friend bool operator==(const RoadColor&, const RoadColor&) = default;
};

[[nodiscard]] RoadColor parse_road_color(const std::string& s);  // "r,g,b"

struct SamplePair {
  std::uint64_t id = 0;
  Tensor image;  // [3, H, W] in [0, 1]
  Tensor mask;   // [1, H, W] in {0, 1}

  void validate() const;
};

/// 1 where the label pixel equals `road` exactly.
[[nodiscard]] Tensor mask_from_label(const Image8& label, RoadColor road = {});
[[nodiscard]] SamplePair load_pair(const std::filesystem::path& image_path, const std::filesystem::path& mask_path,
                                   RoadColor road = {});

/// Bilinear (half-pixel centres) for [C, H, W] images.
[[nodiscard]] Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width);
/// Nearest-neighbour; keeps masks binary.
[[nodiscard]] Tensor resize_nearest(const Tensor& image, std::size_t height, std::size_t width);
/// Square target, which must be a positive multiple of 32.
[[nodiscard]] SamplePair resize(const SamplePair& pair, std::size_t target);

/// Numeric stems are the id itself. Any other stem (CamVid's "0001TP_006690",
/// with the label suffix "_L" dropped) maps to its 64-bit FNV-1a hash, so an
/// image and its label agree on the id.
[[nodiscard]] std::uint64_t parse_id(const std::filesystem::path& file);
[[nodiscard]] std::string id_stem(std::uint64_t id);

struct SampleFile {
  std::uint64_t id = 0;
  std::filesystem::path path;
};

/// The *.png files in `dir` by ascending id; duplicate ids are a DataError.
[[nodiscard]] std::vector<SampleFile> list_samples(const std::filesystem::path& dir);
[[nodiscard]] std::vector<std::uint64_t> list_ids(const std::filesystem::path& dir);

/// Writes images/ and labels/ (road pixels in `road`, everything else black).
void write_dataset(const std::filesystem::path& root, std::span<const SamplePair> pairs, RoadColor road = {});

/// Resized per-sample tensors keyed by id; batch() stacks them in the given
/// order. The bottom party owns an image store, the top party a mask store.
class TensorStore {
 public:
  void insert(std::uint64_t id, Tensor t);
  [[nodiscard]] bool contains(std::uint64_t id) const noexcept { return items_.count(id) != 0; }
  [[nodiscard]] const Tensor& get(std::uint64_t id) const;
  [[nodiscard]] std::vector<std::uint64_t> ids() const;
  [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
  [[nodiscard]] Tensor batch(std::span<const std::uint64_t> ids) const;

 private:
  std::map<std::uint64_t, Tensor> items_;
};

[[nodiscard]] TensorStore load_image_store(const std::filesystem::path& images_dir, std::size_t size);
[[nodiscard]] TensorStore load_mask_store(const std::filesystem::path& labels_dir, std::size_t size,
                                          RoadColor road = {});
[[nodiscard]] TensorStore image_store_from(std::span<const SamplePair> pairs);
[[nodiscard]] TensorStore mask_store_from(std::span<const SamplePair> pairs);

}  // namespace vfis::datasets
