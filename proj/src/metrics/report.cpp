// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vfis/errors.hpp"
#include "vfis/metrics/log.hpp"

namespace vfis::metrics {

namespace {
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("metrics: cannot write " + path.string());
  return out;
}
}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const std::vector<BatchMetrics>& records) {
  auto out = open_out(path);
  out << "step,epoch,loss,acc,iou\n";
  for (const auto& r : records) {
    out << r.step << ',' << r.epoch << ',' << fmt(r.loss) << ',' << fmt(r.pixel_accuracy) << ',' << fmt(r.iou)
        << '\n';
  }
}

ChartGeometry write_metrics_svg(const std::filesystem::path& path, const std::vector<BatchMetrics>& records) {
  constexpr double kW = 800, kH = 400, kMargin = 50;
  ChartGeometry geo;
  geo.x_min = 1;
  geo.x_max = 1;
  for (const auto& r : records) {
    geo.x_max = std::max(geo.x_max, static_cast<double>(r.step));
    geo.loss_max = std::max(geo.loss_max, r.loss);
  }
  const double span = std::max(1.0, geo.x_max - geo.x_min);
  const double loss_scale = geo.loss_max > 0 ? geo.loss_max : 1.0;
  auto px = [&](double step) { return kMargin + (step - geo.x_min) / span * (kW - 2 * kMargin); };
  auto py = [&](double v) { return kH - kMargin - v * (kH - 2 * kMargin); };

  auto polyline = [&](auto value, const char* color) {
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : records) s << px(static_cast<double>(r.step)) << ',' << py(value(r)) << ' ';
    s << "\"/>\n";
    return s.str();
  };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin << "\" y2=\""
      << kH - kMargin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kH - kMargin
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kMargin << "\" y=\"" << kH - kMargin + 20 << "\" font-size=\"12\">step "
      << static_cast<std::uint64_t>(geo.x_min) << "</text>\n";
  out << "<text x=\"" << kW - kMargin - 60 << "\" y=\"" << kH - kMargin + 20 << "\" font-size=\"12\">step "
      << static_cast<std::uint64_t>(geo.x_max) << "</text>\n";
  out << "<text x=\"5\" y=\"" << kMargin << "\" font-size=\"12\">1.0</text>\n";
  out << "<text x=\"5\" y=\"" << kH - kMargin << "\" font-size=\"12\">0</text>\n";
  out << polyline([&](const BatchMetrics& r) { return r.loss / loss_scale; }, "#d62728");
  out << polyline([](const BatchMetrics& r) { return r.pixel_accuracy; }, "#1f77b4");
  out << polyline([](const BatchMetrics& r) { return r.iou; }, "#2ca02c");
  out << "<text x=\"" << kW - 240 << "\" y=\"20\" font-size=\"12\" fill=\"#d62728\">loss (/" << fmt(loss_scale)
      << ")</text>\n";
  out << "<text x=\"" << kW - 120 << "\" y=\"20\" font-size=\"12\" fill=\"#1f77b4\">pixel acc</text>\n";
  out << "<text x=\"" << kW - 60 << "\" y=\"20\" font-size=\"12\" fill=\"#2ca02c\">IoU</text>\n";
  out << "</svg>\n";
  return geo;
}

}  // namespace vfis::metrics
