// SPDX-License-Identifier: Apache-2.0

#include "vfis/metrics/log.hpp"

#include <json.hpp>

#include "vfis/errors.hpp"

namespace vfis::metrics {

using nlohmann::json;

MetricsLog::MetricsLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::app);
  if (!out_) throw DataError("metrics: cannot open " + path.string() + " for append");
}

void MetricsLog::append(const BatchMetrics& record) {
  record.validate();
  out_ << to_json_line(record) << '\n';
  out_.flush();
  if (!out_) throw DataError("metrics: write failed");
}

std::string to_json_line(const BatchMetrics& r) {
  json j;
  j["epoch"] = r.epoch;
  j["step"] = r.step;
  j["sample_ids"] = r.sample_ids;
  j["loss"] = r.loss;
  j["pixel_accuracy"] = r.pixel_accuracy;
  j["iou"] = r.iou;
  j["timestamp"] = r.timestamp;
  return j.dump();
}

BatchMetrics from_json_line(const std::string& line) {
  BatchMetrics r;
  try {
    const json j = json::parse(line);
    r.epoch = j.at("epoch").get<std::uint32_t>();
    r.step = j.at("step").get<std::uint64_t>();
    r.sample_ids = j.at("sample_ids").get<std::vector<std::uint64_t>>();
    r.loss = j.at("loss").get<double>();
    r.pixel_accuracy = j.at("pixel_accuracy").get<double>();
    r.iou = j.at("iou").get<double>();
    r.timestamp = j.at("timestamp").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw ValidationError(e.what());
  }
  r.validate();
  return r;
}

MetricsReadResult read_metrics_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("metrics: cannot read " + path.string());
  MetricsReadResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      result.records.push_back(from_json_line(line));
    } catch (const Error& e) {
      result.errors.push_back({lineno, e.what()});
    }
  }
  return result;
}

}  // namespace vfis::metrics
