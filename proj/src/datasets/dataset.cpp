// SPDX-License-Identifier: Apache-2.0

#include "vfis/datasets/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "vfis/errors.hpp"

namespace vfis::datasets {

namespace fs = std::filesystem;

RoadColor parse_road_color(const std::string& s) {
  unsigned r = 0, g = 0, b = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%u,%u,%u%c", &r, &g, &b, &tail) != 3 || r > 255 || g > 255 || b > 255) {
    throw ConfigError("road color must be 'r,g,b' with components in 0..255, got '" + s + "'");
  }
  return {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)};
}

void SamplePair::validate() const {
  if (image.rank() != 3 || image.dim(0) != 3) throw DataError("sample " + std::to_string(id) + ": image must be [3,H,W]");
  numerics::require_shape(mask, {1, image.dim(1), image.dim(2)}, "sample mask");
  for (double v : mask.values())
    if (v != 0.0 && v != 1.0) throw ValidationError("sample " + std::to_string(id) + ": mask is not binary");
}

Tensor mask_from_label(const Image8& label, RoadColor road) {
  if (label.channels != 3) throw DataError("label image must be RGB");
  Tensor m({1, label.height, label.width});
  for (std::size_t i = 0; i < label.width * label.height; ++i) {
    const std::uint8_t* p = label.pixels.data() + i * 3;
    m[i] = (p[0] == road.r && p[1] == road.g && p[2] == road.b) ? 1.0 : 0.0;
  }
  return m;
}

SamplePair load_pair(const fs::path& image_path, const fs::path& mask_path, RoadColor road) {
  const Image8 img = read_png_rgb(image_path);
  const Image8 lab = read_png_rgb(mask_path);
  if (img.width != lab.width || img.height != lab.height) {
    throw DataError("image " + image_path.string() + " and label " + mask_path.string() + " differ in size");
  }
  SamplePair p{parse_id(image_path), image_to_tensor(img), mask_from_label(lab, road)};
  return p;
}

namespace {
double lerp(double a, double b, double t) noexcept { return a + t * (b - a); }

void check_resize_target(std::size_t h, std::size_t w) {
  if (h == 0 || w == 0) throw ValidationError("resize target must be positive");
}
}  // namespace

Tensor resize_bilinear(const Tensor& image, std::size_t height, std::size_t width) {
  check_resize_target(height, width);
  if (image.rank() != 3) throw DimensionError("resize: expected [C, H, W]");
  const std::size_t ch = image.dim(0), ih = image.dim(1), iw = image.dim(2);
  if (ih == height && iw == width) return image;
  Tensor out({ch, height, width});
  const double sy = static_cast<double>(ih) / static_cast<double>(height);
  const double sx = static_cast<double>(iw) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(ih - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, ih - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(iw - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, iw - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < ch; ++c) {
        const double* p = image.data() + c * ih * iw;
        const double top = lerp(p[y0 * iw + x0], p[y0 * iw + x1], tx);
        const double bot = lerp(p[y1 * iw + x0], p[y1 * iw + x1], tx);
        out[(c * height + y) * width + x] = lerp(top, bot, ty);
      }
    }
  }
  return out;
}

Tensor resize_nearest(const Tensor& image, std::size_t height, std::size_t width) {
  check_resize_target(height, width);
  if (image.rank() != 3) throw DimensionError("resize: expected [C, H, W]");
  const std::size_t ch = image.dim(0), ih = image.dim(1), iw = image.dim(2);
  if (ih == height && iw == width) return image;
  Tensor out({ch, height, width});
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = std::min(ih - 1, (2 * y + 1) * ih / (2 * height));
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = std::min(iw - 1, (2 * x + 1) * iw / (2 * width));
      for (std::size_t c = 0; c < ch; ++c) out[(c * height + y) * width + x] = image[(c * ih + sy) * iw + sx];
    }
  }
  return out;
}

SamplePair resize(const SamplePair& pair, std::size_t target) {
  if (target == 0 || target % 32 != 0) {
    throw ValidationError("resize target " + std::to_string(target) + " must be a positive multiple of 32");
  }
  return {pair.id, resize_bilinear(pair.image, target, target), resize_nearest(pair.mask, target, target)};
}

std::uint64_t parse_id(const fs::path& file) {
  std::string stem = file.stem().string();
  if (stem.empty()) throw DataError("empty file stem: " + file.string());
  std::uint64_t id = 0;
  const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), id);
  if (ec == std::errc{} && ptr == stem.data() + stem.size()) return id;
  if (stem.size() > 2 && stem.ends_with("_L")) stem.resize(stem.size() - 2);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : stem) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string id_stem(std::uint64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(id));
  return buf;
}

std::vector<SampleFile> list_samples(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<SampleFile> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back({parse_id(e.path()), e.path()});
  }
  std::sort(files.begin(), files.end(), [](const SampleFile& a, const SampleFile& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < files.size(); ++i) {
    if (files[i].id == files[i - 1].id) {
      throw DataError("duplicate sample id in " + dir.string() + ": " + files[i - 1].path.filename().string() +
                      " and " + files[i].path.filename().string());
    }
  }
  return files;
}

std::vector<std::uint64_t> list_ids(const fs::path& dir) {
  std::vector<std::uint64_t> ids;
  for (const auto& f : list_samples(dir)) ids.push_back(f.id);
  return ids;
}

void write_dataset(const fs::path& root, std::span<const SamplePair> pairs, RoadColor road) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "labels");
  for (const SamplePair& p : pairs) {
    p.validate();
    write_png(root / "images" / (id_stem(p.id) + ".png"), tensor_to_image(p.image));
    Image8 lab;
    lab.width = p.mask.dim(2);
    lab.height = p.mask.dim(1);
    lab.channels = 3;
    lab.pixels.assign(lab.width * lab.height * 3, 0);
    for (std::size_t i = 0; i < lab.width * lab.height; ++i) {
      if (p.mask[i] == 1.0) {
        lab.pixels[i * 3] = road.r;
        lab.pixels[i * 3 + 1] = road.g;
        lab.pixels[i * 3 + 2] = road.b;
      }
    }
    write_png(root / "labels" / (id_stem(p.id) + ".png"), lab);
  }
}

void TensorStore::insert(std::uint64_t id, Tensor t) {
  if (!items_.emplace(id, std::move(t)).second) throw DataError("duplicate sample id " + std::to_string(id));
}

const Tensor& TensorStore::get(std::uint64_t id) const {
  auto it = items_.find(id);
  if (it == items_.end()) throw DataError("sample id " + std::to_string(id) + " is not in the local store");
  return it->second;
}

std::vector<std::uint64_t> TensorStore::ids() const {
  std::vector<std::uint64_t> out;
  out.reserve(items_.size());
  for (const auto& [id, _] : items_) out.push_back(id);
  return out;
}

Tensor TensorStore::batch(std::span<const std::uint64_t> ids) const {
  std::vector<const Tensor*> items;
  items.reserve(ids.size());
  for (auto id : ids) items.push_back(&get(id));
  return numerics::stack(items);
}

TensorStore load_image_store(const fs::path& images_dir, std::size_t size) {
  TensorStore store;
  for (const auto& f : list_samples(images_dir)) {
    store.insert(f.id, resize_bilinear(image_to_tensor(read_png_rgb(f.path)), size, size));
  }
  return store;
}

TensorStore load_mask_store(const fs::path& labels_dir, std::size_t size, RoadColor road) {
  TensorStore store;
  for (const auto& f : list_samples(labels_dir)) {
    store.insert(f.id, resize_nearest(mask_from_label(read_png_rgb(f.path), road), size, size));
  }
  return store;
}

TensorStore image_store_from(std::span<const SamplePair> pairs) {
  TensorStore s;
  for (const auto& p : pairs) s.insert(p.id, p.image);
  return s;
}

TensorStore mask_store_from(std::span<const SamplePair> pairs) {
  TensorStore s;
  for (const auto& p : pairs) s.insert(p.id, p.mask);
  return s;
}

}  // namespace vfis::datasets
