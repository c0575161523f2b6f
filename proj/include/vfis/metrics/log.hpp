// SPDX-License-Identifier: Apache-2.0
//
// JSON-lines persistence of BatchMetrics records plus CSV/SVG reporting.

#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vfis/metrics/metrics.hpp"

namespace vfis::metrics {

/// Append-only writer; one record per line, flushed after each append.
class MetricsLog {
 public:
  explicit MetricsLog(const std::filesystem::path& path);
  void append(const BatchMetrics& record);

 private:
  std::ofstream out_;
};

[[nodiscard]] std::string to_json_line(const BatchMetrics& record);
[[nodiscard]] BatchMetrics from_json_line(const std::string& line);

struct LogParseError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct MetricsReadResult {
  std::vector<BatchMetrics> records;
  std::vector<LogParseError> errors;
};

/// Malformed lines are reported with their line number and skipped.
[[nodiscard]] MetricsReadResult read_metrics_log(const std::filesystem::path& path);

/// Columns: step,epoch,loss,acc,iou
void write_metrics_csv(const std::filesystem::path& path, const std::vector<BatchMetrics>& records);

struct ChartGeometry {
  double x_min = 0, x_max = 0;  // data range of the step axis
  double loss_max = 0;
};

/// Line chart of loss (scaled to its maximum), pixel accuracy and IoU vs step.
ChartGeometry write_metrics_svg(const std::filesystem::path& path, const std::vector<BatchMetrics>& records);

}  // namespace vfis::metrics
