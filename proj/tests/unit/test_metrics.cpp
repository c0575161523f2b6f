// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "vfis/errors.hpp"
#include "vfis/metrics/log.hpp"
#include "vfis/numerics/rng.hpp"

using namespace vfis;
using namespace vfis::metrics;
namespace fs = std::filesystem;

namespace {

// Logits of +-1 encoding a binary prediction.
Tensor logits_of(const Tensor& pred) {
  Tensor z(pred.shape());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = pred[i] > 0.5 ? 1.0 : -1.0;
  return z;
}

Tensor random_mask(numerics::Rng& rng, Tensor::Shape shape, double p) {
  Tensor m(std::move(shape));
  for (auto& v : m.values()) v = rng.uniform() < p ? 1.0 : 0.0;
  return m;
}

fs::path temp_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("vfis_metrics_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("accuracy and IoU on hand cases") {
    numerics::Rng rng(1);
    const Tensor mask = random_mask(rng, {2, 1, 8, 8}, 0.4);
    CHECK(pixel_accuracy(logits_of(mask), mask) == 1.0);
    CHECK(jaccard_iou(logits_of(mask), mask) == 1.0);
    Tensor comp = mask;
    for (auto& v : comp.values()) v = 1.0 - v;
    CHECK(pixel_accuracy(logits_of(comp), mask) == 0.0);
    CHECK(jaccard_iou(logits_of(comp), mask) == 0.0);

    Tensor a({1, 1, 4, 4}), b({1, 1, 4, 4});
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        a.at(0, 0, i, j) = 1;
        b.at(0, 0, i + 1, j + 1) = 1;
      }
    CHECK(jaccard_iou(logits_of(a), b) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    CHECK(jaccard_iou(logits_of(b), a) == jaccard_iou(logits_of(a), b));

    const Tensor empty({1, 1, 4, 4});
    CHECK(jaccard_iou(logits_of(empty), empty) == 1.0);
    CHECK(pixel_accuracy(logits_of(empty), empty) == 1.0);

    // Threshold sits on the logit: exactly 0 is negative.
    const Tensor one({1, 1, 1, 1}, {1.0});
    CHECK(jaccard_iou(Tensor({1, 1, 1, 1}, {0.0}), one) == 0.0);
    CHECK(jaccard_iou(Tensor({1, 1, 1, 1}, {1e-12}), one) == 1.0);
    CHECK(jaccard_iou(Tensor({1, 1, 1, 1}, {0.5}), one, 0.7) == 0.0);
  }

  TEST_CASE("errors") {
    CHECK_THROWS_AS((void)pixel_accuracy(Tensor({1, 1, 2, 2}), Tensor({1, 1, 2, 3})), DimensionError);
    CHECK_THROWS_AS((void)jaccard_iou(Tensor({1, 1, 2, 2}), Tensor({1, 1, 2, 2}, 0.5)), ValidationError);
  }

  TEST_CASE("brute-force oracle on random masks") {
    numerics::Rng rng(2);
    for (int trial = 0; trial < 1000; ++trial) {
      const double p = trial % 10 == 0 ? 0.0 : rng.uniform();
      const Tensor mask = random_mask(rng, {2, 1, 16, 16}, p);
      Tensor logits(mask.shape());
      for (auto& v : logits.values()) v = trial % 10 == 0 ? -1.0 : rng.normal();
      if (trial % 7 == 0)  // disjoint from the mask
        for (std::size_t i = 0; i < mask.size(); ++i) logits[i] = mask[i] > 0.5 ? -1.0 : logits[i];
      std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < mask.size(); ++i) {
        const bool pr = logits[i] > 0, gt = mask[i] > 0.5;
        tp += pr && gt;
        tn += !pr && !gt;
        fp += pr && !gt;
        fn += !pr && gt;
      }
      const ConfusionCounts c = count_confusion(logits, mask);
      CHECK(c == ConfusionCounts{tp, tn, fp, fn});
      CHECK(pixel_accuracy(logits, mask) == static_cast<double>(tp + tn) / static_cast<double>(mask.size()));
      const double iou = tp + fp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
      CHECK(jaccard_iou(logits, mask) == iou);
      if (trial % 7 == 0) CHECK(jaccard_iou(logits, mask) == (tp + fp + fn == 0 ? 1.0 : 0.0));
    }
  }

  TEST_CASE("macro aggregation averages per-image IoU") {
    Tensor mask({2, 1, 2, 2}, {1, 0, 0, 0, 1, 1, 1, 1});
    Tensor pred({2, 1, 2, 2}, {1, 0, 0, 0, 1, 0, 0, 0});
    const Tensor z = logits_of(pred);
    CHECK(jaccard_iou(z, mask, 0.0, Aggregation::macro) == doctest::Approx((1.0 + 0.25) / 2));
    CHECK(jaccard_iou(z, mask) == doctest::Approx(2.0 / 5.0));
  }

  TEST_CASE("batch metrics validation") {
    BatchMetrics m{1, 2, {3}, 0.5, 0.9, 0.8, 0};
    CHECK_NOTHROW(m.validate());
    m.iou = 1.5;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m.iou = 0.5;
    m.sample_ids.clear();
    CHECK_THROWS_AS(m.validate(), ValidationError);
  }

  TEST_CASE("log round trip, malformed lines and reports") {
    const fs::path dir = temp_dir("log");
    std::vector<BatchMetrics> recs;
    {
      MetricsLog log(dir / "m.jsonl");
      for (std::uint64_t s = 1; s <= 12; ++s) {
        BatchMetrics r{static_cast<std::uint32_t>((s - 1) / 4), s, {s, s + 100}, 1.0 / static_cast<double>(s),
                       0.5 + 0.03 * static_cast<double>(s), 0.1 + 0.05 * static_cast<double>(s), now_unix_ms()};
        log.append(r);
        recs.push_back(r);
      }
    }
    const auto read = read_metrics_log(dir / "m.jsonl");
    CHECK(read.errors.empty());
    CHECK(read.records == recs);
    CHECK(from_json_line(to_json_line(recs[3])) == recs[3]);

    {
      std::ofstream out(dir / "m.jsonl", std::ios::app);
      out << "{not json\n" << to_json_line(recs[0]) << "\n" << R"({"epoch":0})" << "\n";
    }
    const auto bad = read_metrics_log(dir / "m.jsonl");
    CHECK(bad.records.size() == 13);
    REQUIRE(bad.errors.size() == 2);
    CHECK(bad.errors[0].line == 13);
    CHECK(bad.errors[1].line == 15);

    write_metrics_csv(dir / "m.csv", recs);
    std::ifstream csv(dir / "m.csv");
    std::string header, first;
    std::getline(csv, header);
    std::getline(csv, first);
    CHECK(header == "step,epoch,loss,acc,iou");
    CHECK(first.rfind("1,0,", 0) == 0);
    std::size_t lines = 2;
    for (std::string l; std::getline(csv, l);) ++lines;
    CHECK(lines == 13);

    const ChartGeometry geo = write_metrics_svg(dir / "m.svg", recs);
    CHECK(geo.x_min == 1.0);
    CHECK(geo.x_max == 12.0);
    CHECK(geo.loss_max == 1.0);
    std::ifstream svg(dir / "m.svg");
    const std::string text((std::istreambuf_iterator<char>(svg)), std::istreambuf_iterator<char>());
    CHECK(text.rfind("<svg", 0) == 0);
    CHECK(text.find("polyline") != std::string::npos);
    fs::remove_all(dir);
  }
}
