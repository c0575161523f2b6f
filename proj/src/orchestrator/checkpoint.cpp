// SPDX-License-Identifier: Apache-2.0

#include "vfis/orchestrator/checkpoint.hpp"

#include <fstream>
#include <set>

namespace vfis::orchestrator {

namespace fs = std::filesystem;
using protocol::ByteReader;
using protocol::Bytes;
using protocol::ByteWriter;

const Tensor* Checkpoint::find(const std::string& name) const noexcept {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

Bytes serialize_checkpoint(const std::string& preset, std::span<const NamedTensor> tensors) {
  ByteWriter w;
  w.bytes(protocol::ByteView(reinterpret_cast<const std::uint8_t*>("VFCK"), 4));
  w.u16(kCheckpointVersion);
  w.str(preset);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& nt : tensors) {
    const Tensor& t = *nt.tensor;
    w.str(nt.name);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (auto e : t.shape()) w.u64(e);
    for (double v : t.values()) w.f64(v);
  }
  return w.take();
}

Checkpoint parse_checkpoint(protocol::ByteView bytes) {
  try {
    ByteReader r(bytes);
    const auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), "VFCK")) throw CheckpointError("not a checkpoint (bad magic)");
    const auto version = r.u16();
    if (version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    Checkpoint ck;
    ck.preset = r.str();
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name = r.str();
      const auto rank = r.u8();
      Tensor::Shape shape(rank);
      std::uint64_t elements = 1;
      for (auto& e : shape) {
        const auto v = r.u64();
        if (v == 0 || v > bytes.size()) throw CheckpointError("tensor '" + name + "' has an invalid extent");
        e = static_cast<std::size_t>(v);
        elements *= v;
        if (elements > bytes.size()) throw CheckpointError("checkpoint truncated in tensor '" + name + "'");
      }
      std::vector<double> data(static_cast<std::size_t>(elements));
      for (auto& d : data) d = r.f64();
      ck.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    r.expect_end("checkpoint");
    return ck;
  } catch (const ProtocolError& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const fs::path& path, const std::string& preset, std::span<const NamedTensor> tensors) {
  const Bytes data = serialize_checkpoint(preset, tensors);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint read_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_checkpoint(data);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

void restore(const Checkpoint& ck, const std::string& expected_preset, std::span<const NamedTensor> targets,
             Strictness strictness) {
  if (ck.preset != expected_preset) {
    throw CheckpointError("checkpoint preset '" + ck.preset + "' does not match '" + expected_preset + "'");
  }
  std::set<std::string> wanted;
  for (const auto& t : targets) wanted.insert(t.name);
  if (strictness == Strictness::exact) {
    for (const auto& [name, _] : ck.tensors)
      if (!wanted.count(name)) throw CheckpointError("unexpected tensor '" + name + "' in checkpoint");
  }
  for (const auto& t : targets) {
    const Tensor* src = ck.find(t.name);
    if (!src) {
      if (strictness == Strictness::shapes) continue;
      throw CheckpointError("checkpoint is missing tensor '" + t.name + "'");
    }
    if (src->shape() != t.tensor->shape()) {
      throw CheckpointError("tensor '" + t.name + "' has shape " + numerics::shape_string(src->shape()) +
                            ", expected " + numerics::shape_string(t.tensor->shape()));
    }
    *t.tensor = *src;
  }
}

std::size_t import_weights(const fs::path& path, const std::string& expected_preset,
                           std::span<const NamedTensor> targets) {
  const Checkpoint ck = read_checkpoint(path);
  restore(ck, expected_preset, targets, Strictness::shapes);
  std::size_t copied = 0;
  for (const auto& t : targets) copied += ck.find(t.name) != nullptr;
  if (copied == 0) throw CheckpointError(path.string() + ": no tensor matches the " + expected_preset + " model");
  return copied;
}

void load_checkpoint(const fs::path& path, const std::string& expected_preset, std::span<const NamedTensor> targets,
                     Strictness strictness) {
  restore(read_checkpoint(path), expected_preset, targets, strictness);
}

}  // namespace vfis::orchestrator
