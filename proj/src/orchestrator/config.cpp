// SPDX-License-Identifier: Apache-2.0

#include "vfis/orchestrator/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vfis/errors.hpp"

namespace vfis::orchestrator {

std::string to_string(Role r) {
  switch (r) {
    case Role::both: return "both";
    case Role::bottom: return "bottom";
    case Role::top: return "top";
  }
  return "?";
}

std::string to_string(TransportKind t) { return t == TransportKind::tcp ? "tcp" : "loopback"; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_uint(const std::string& key, const std::string& v, T max) {
  unsigned long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size() || out > static_cast<unsigned long long>(max)) {
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
  return static_cast<T>(out);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::string fmt(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

}  // namespace

void PartyConfig::validate() const {
  if (preset != "tiny" && preset != "vgg16") throw ConfigError("key 'preset': unknown preset '" + preset + "'");
  if (features < 5) throw ConfigError("key 'features': at least 5 features are required (one per segment)");
  if (batch_size < 2) throw ConfigError("key 'batch_size': must be >= 2 (batch statistics need two samples)");
  if (epochs == 0) throw ConfigError("key 'epochs': must be positive");
  if (float_width != 8 && float_width != 4) throw ConfigError("key 'float_width': must be 8 or 4");
  if (!(optimizer.lr > 0)) throw ConfigError("key 'lr': must be positive");
  if (data.empty() && (data_size == 0 || data_size % 32 != 0)) {
    throw ConfigError("key 'data.size': must be a positive multiple of 32");
  }
  if (data.empty() && data_n == 0) throw ConfigError("key 'data.n': must be positive");
  if (role != Role::both && transport == TransportKind::loopback) {
    throw ConfigError("key 'role': the " + to_string(role) + " role needs transport = tcp");
  }
  if (!(connect_timeout >= 0)) throw ConfigError("key 'connect_timeout': must be non-negative");
}

void apply_setting(PartyConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  using Setter = std::function<void()>;
  const std::map<std::string, Setter> setters{
      {"role",
       [&] {
         if (v == "both") c.role = Role::both;
         else if (v == "bottom") c.role = Role::bottom;
         else if (v == "top") c.role = Role::top;
         else throw ConfigError("key 'role': expected both, bottom or top, got '" + v + "'");
       }},
      {"preset", [&] { c.preset = v; }},
      {"features", [&] { c.features = parse_uint<std::size_t>(key, v, 1u << 24); }},
      {"batchnorm", [&] { c.batchnorm = parse_bool(key, v); }},
      {"data", [&] { c.data = v; }},
      {"data.n", [&] { c.data_n = parse_uint<std::size_t>(key, v, 1u << 24); }},
      {"data.size", [&] { c.data_size = parse_uint<std::size_t>(key, v, 4096); }},
      {"data.seed", [&] { c.data_seed = parse_uint<std::uint64_t>(key, v, UINT64_MAX); }},
      {"road_color",
       [&] {
         try {
           c.road_color = datasets::parse_road_color(v);
         } catch (const ConfigError& e) {
           throw ConfigError("key 'road_color': " + std::string(e.what()));
         }
       }},
      {"batch_size", [&] { c.batch_size = parse_uint<std::uint32_t>(key, v, 1u << 20); }},
      {"epochs", [&] { c.epochs = parse_uint<std::uint32_t>(key, v, 1u << 20); }},
      {"optimizer",
       [&] {
         try {
           c.optimizer.kind = numerics::parse_optimizer_kind(v);
         } catch (const Error&) {
           throw ConfigError("key 'optimizer': expected sgd or adam, got '" + v + "'");
         }
       }},
      {"lr", [&] { c.optimizer.lr = parse_double(key, v); }},
      {"momentum", [&] { c.optimizer.momentum = parse_double(key, v); }},
      {"beta1", [&] { c.optimizer.beta1 = parse_double(key, v); }},
      {"beta2", [&] { c.optimizer.beta2 = parse_double(key, v); }},
      {"adam_eps", [&] { c.optimizer.eps = parse_double(key, v); }},
      {"seed", [&] { c.seed = parse_uint<std::uint64_t>(key, v, UINT64_MAX); }},
      {"transport",
       [&] {
         if (v == "loopback") c.transport = TransportKind::loopback;
         else if (v == "tcp") c.transport = TransportKind::tcp;
         else throw ConfigError("key 'transport': expected loopback or tcp, got '" + v + "'");
       }},
      {"host", [&] { c.host = v; }},
      {"port", [&] { c.port = parse_uint<std::uint16_t>(key, v, 65535); }},
      {"port_file", [&] { c.port_file = v; }},
      {"connect_timeout", [&] { c.connect_timeout = parse_double(key, v); }},
      {"key_file", [&] { c.key_file = v; }},
      {"float_width", [&] { c.float_width = parse_uint<std::uint8_t>(key, v, 255); }},
      {"report_metrics", [&] { c.report_metrics = parse_bool(key, v); }},
      {"out", [&] { c.out = v; }},
      {"metrics", [&] { c.metrics = v; }},
      {"resume", [&] { c.resume = parse_bool(key, v); }},
      {"stop_after", [&] { c.stop_after = parse_uint<std::uint32_t>(key, v, 1u << 20); }},
      {"init_weights", [&] { c.init_weights = v; }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown key '" + key + "'");
  it->second();
}

void apply_assignment(PartyConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
  apply_setting(cfg, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void parse_config_text(PartyConfig& cfg, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_assignment(cfg, line);
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

void load_config_file(PartyConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  parse_config_text(cfg, ss.str(), path.string());
}

std::string describe(const PartyConfig& c) {
  std::ostringstream o;
  const auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << "\n"; };
  kv("role", to_string(c.role));
  kv("preset", c.preset);
  kv("features", std::to_string(c.features));
  if (c.batchnorm) kv("batchnorm", *c.batchnorm ? "true" : "false");
  kv("data", c.data.string());
  kv("data.n", std::to_string(c.data_n));
  kv("data.size", std::to_string(c.data_size));
  kv("data.seed", std::to_string(c.data_seed));
  kv("road_color", std::to_string(c.road_color.r) + "," + std::to_string(c.road_color.g) + "," +
                       std::to_string(c.road_color.b));
  kv("batch_size", std::to_string(c.batch_size));
  kv("epochs", std::to_string(c.epochs));
  kv("optimizer", numerics::to_string(c.optimizer.kind));
  kv("lr", fmt(c.optimizer.lr));
  kv("momentum", fmt(c.optimizer.momentum));
  kv("beta1", fmt(c.optimizer.beta1));
  kv("beta2", fmt(c.optimizer.beta2));
  kv("adam_eps", fmt(c.optimizer.eps));
  kv("seed", std::to_string(c.seed));
  kv("transport", to_string(c.transport));
  kv("host", c.host);
  kv("port", std::to_string(c.port));
  kv("port_file", c.port_file.string());
  kv("connect_timeout", fmt(c.connect_timeout));
  kv("key_file", c.key_file.string());
  kv("float_width", std::to_string(c.float_width));
  kv("report_metrics", c.report_metrics ? "true" : "false");
  kv("out", c.out.string());
  kv("metrics", c.metrics_path().string());
  kv("resume", c.resume ? "true" : "false");
  kv("stop_after", std::to_string(c.stop_after));
  kv("init_weights", c.init_weights.string());
  return o.str();
}

}  // namespace vfis::orchestrator
