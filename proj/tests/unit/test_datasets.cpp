// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>

#include "vfis/datasets/dataset.hpp"
#include "vfis/datasets/image_io.hpp"
#include "vfis/datasets/synthetic.hpp"
#include "vfis/errors.hpp"
#include "vfis/numerics/rng.hpp"

using namespace vfis;
using namespace vfis::datasets;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("vfis_datasets_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

Image8 solid(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  Image8 img{w, h, 3, {}};
  for (std::size_t i = 0; i < w * h; ++i) img.pixels.insert(img.pixels.end(), {r, g, b});
  return img;
}

bool is_binary(const Tensor& t) {
  for (double v : t.values())
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

}  // namespace

TEST_SUITE("datasets") {
  TEST_CASE("synthetic scenes are deterministic and within the road-fraction band") {
    const auto a = gen_synthetic(40, 64, 5);
    const auto b = gen_synthetic(40, 64, 5);
    REQUIRE(a.size() == 40);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].id == i + 1);
      CHECK(numerics::bitwise_equal(a[i].image, b[i].image));
      CHECK(numerics::bitwise_equal(a[i].mask, b[i].mask));
      CHECK_NOTHROW(a[i].validate());
      const double f = road_fraction(a[i].mask);
      CHECK(f >= kMinRoadFraction);
      CHECK(f <= kMaxRoadFraction);
      for (double v : a[i].image.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
    const auto c = gen_synthetic(3, 64, 6);
    CHECK_FALSE(numerics::bitwise_equal(a[0].image, c[0].image));
    // A scene depends only on (id, size, seed).
    CHECK(numerics::bitwise_equal(synth_scene(7, 64, 5).image, a[6].image));
    CHECK_THROWS_AS((void)gen_synthetic(2, 48, 1), ValidationError);
    CHECK_THROWS_AS((void)gen_synthetic(2, 0, 1), ValidationError);
  }

  TEST_CASE("road fraction band holds at 128 px over many seeds") {
    for (std::uint64_t seed = 0; seed < 3; ++seed)
      for (const auto& p : gen_synthetic(60, 128, seed)) {
        const double f = road_fraction(p.mask);
        CHECK(f >= 0.05);
        CHECK(f <= 0.6);
      }
  }

  TEST_CASE("mask derivation from labels") {
    CHECK(mask_from_label(solid(4, 3, 128, 64, 128)) == Tensor({1, 3, 4}, 1.0));
    CHECK(mask_from_label(solid(4, 3, 128, 64, 129)) == Tensor({1, 3, 4}, 0.0));
    CHECK(mask_from_label(solid(2, 2, 1, 2, 3), RoadColor{1, 2, 3}) == Tensor({1, 2, 2}, 1.0));
    CHECK(parse_road_color("1,2,3") == RoadColor{1, 2, 3});
    CHECK_THROWS_AS((void)parse_road_color("1,2"), ConfigError);
    CHECK_THROWS_AS((void)parse_road_color("1,2,300"), ConfigError);

    // Pixel-count oracle on a random label.
    numerics::Rng rng(3);
    Image8 label = solid(16, 16, 0, 0, 0);
    std::size_t road = 0;
    for (std::size_t i = 0; i < 256; ++i)
      if (rng.uniform() < 0.3) {
        label.pixels[3 * i] = 128, label.pixels[3 * i + 1] = 64, label.pixels[3 * i + 2] = 128;
        ++road;
      } else if (rng.uniform() < 0.5) {
        label.pixels[3 * i] = 128, label.pixels[3 * i + 1] = 0, label.pixels[3 * i + 2] = 192;
      }
    CHECK(road_fraction(mask_from_label(label)) == static_cast<double>(road) / 256.0);
  }

  TEST_CASE("png round trip and load_pair") {
    const fs::path dir = temp_dir("png");
    numerics::Rng rng(4);
    Image8 img{5, 3, 3, {}};
    for (int i = 0; i < 45; ++i) img.pixels.push_back(static_cast<std::uint8_t>(rng.below(256)));
    write_png(dir / "000001.png", img);
    const Image8 back = read_png_rgb(dir / "000001.png");
    CHECK(back.pixels == img.pixels);
    CHECK(tensor_to_image(image_to_tensor(img)).pixels == img.pixels);
    write_png(dir / "000001_label.png", solid(5, 3, 128, 64, 128));
    const SamplePair p = load_pair(dir / "000001.png", dir / "000001_label.png");
    CHECK(p.image.shape() == Tensor::Shape{3, 3, 5});
    CHECK(p.mask == Tensor({1, 3, 5}, 1.0));
    write_png(dir / "small.png", solid(4, 3, 0, 0, 0));
    CHECK_THROWS_AS((void)load_pair(dir / "000001.png", dir / "small.png"), DataError);
    CHECK_THROWS_AS((void)read_png_rgb(dir / "missing.png"), DataError);
    fs::remove_all(dir);
  }

  TEST_CASE("resizing") {
    const SamplePair s = synth_scene(1, 64, 2);
    const SamplePair same = resize(s, 64);
    CHECK(numerics::bitwise_equal(same.image, s.image));
    CHECK(numerics::bitwise_equal(same.mask, s.mask));
    CHECK(resize_bilinear(Tensor({3, 64, 64}, 0.375), 32, 32) == Tensor({3, 32, 32}, 0.375));
    CHECK(resize_bilinear(Tensor({3, 32, 32}, 0.375), 96, 96) == Tensor({3, 96, 96}, 0.375));

    Tensor checker({1, 64, 64});
    for (std::size_t i = 0; i < 64; ++i)
      for (std::size_t j = 0; j < 64; ++j) checker[i * 64 + j] = static_cast<double>((i + j) % 2);
    CHECK(is_binary(resize_nearest(checker, 32, 32)));

    const SamplePair big = synth_scene(1, 128, 2);
    const SamplePair down = resize(big, 64);
    CHECK(down.image.shape() == Tensor::Shape{3, 64, 64});
    CHECK(is_binary(down.mask));
    // 2x bilinear with half-pixel centres averages each 2x2 block.
    const double avg = (big.image[0] + big.image[1] + big.image[128] + big.image[129]) / 4;
    CHECK(down.image[0] == doctest::Approx(avg).epsilon(1e-12));
    CHECK_THROWS_AS((void)resize(big, 50), ValidationError);
  }

  TEST_CASE("dataset directories and stores") {
    const fs::path dir = temp_dir("store");
    const auto pairs = gen_synthetic(5, 64, 9);
    write_dataset(dir, pairs);
    CHECK(list_ids(dir / "images") == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(id_stem(42) == "000042");
    CHECK(parse_id("x/000042.png") == 42);
    CHECK(parse_id("x/0001TP_006690.png") == parse_id("y/0001TP_006690_L.png"));
    CHECK(parse_id("x/0001TP_006690.png") != parse_id("x/0001TP_006720.png"));
    CHECK(parse_id("x/road.png") == 0xa385191ff0edbb1bull);

    const TensorStore images = load_image_store(dir / "images", 64);
    const TensorStore masks = load_mask_store(dir / "labels", 64, {});
    CHECK(images.size() == 5);
    // PNG is 8-bit and synthetic pixels are quantised to k/255, so ingestion is exact.
    for (const auto& p : pairs) {
      CHECK(numerics::bitwise_equal(images.get(p.id), p.image));
      CHECK(numerics::bitwise_equal(masks.get(p.id), p.mask));
    }
    const std::vector<std::uint64_t> order{4, 2};
    const Tensor b = images.batch(order);
    CHECK(b.shape() == Tensor::Shape{2, 3, 64, 64});
    CHECK(b[0] == pairs[3].image[0]);
    CHECK_THROWS_AS((void)images.get(99), DataError);

    const TensorStore small = load_image_store(dir / "images", 32);
    CHECK(small.get(1).shape() == Tensor::Shape{3, 32, 32});
    CHECK(image_store_from(pairs).ids() == images.ids());
    CHECK(mask_store_from(pairs).get(3) == pairs[2].mask);
    fs::remove_all(dir);
  }

  TEST_CASE("CamVid-style names pair images with their _L labels") {
    const fs::path dir = temp_dir("camvid");
    fs::create_directories(dir / "images");
    fs::create_directories(dir / "labels");
    const auto pairs = gen_synthetic(2, 64, 1);
    const char* stems[] = {"0001TP_006690", "Seq05VD_f00330"};
    for (std::size_t i = 0; i < 2; ++i) {
      write_png(dir / "images" / (std::string(stems[i]) + ".png"), tensor_to_image(pairs[i].image));
      Image8 lab = solid(64, 64, 64, 128, 64);
      for (std::size_t k = 0; k < 64 * 64; ++k)
        if (pairs[i].mask[k] == 1.0) lab.pixels[3 * k] = 128, lab.pixels[3 * k + 1] = 64, lab.pixels[3 * k + 2] = 128;
      write_png(dir / "labels" / (std::string(stems[i]) + "_L.png"), lab);
    }
    CHECK(list_ids(dir / "images") == list_ids(dir / "labels"));
    const TensorStore masks = load_mask_store(dir / "labels", 64, {});
    const std::uint64_t id = parse_id(std::string(stems[1]) + ".png");
    CHECK(numerics::bitwise_equal(masks.get(id), pairs[1].mask));
    fs::remove_all(dir);
  }
}
