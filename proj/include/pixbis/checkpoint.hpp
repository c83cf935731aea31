#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pixbis/adam.hpp"
#include "pixbis/model.hpp"

namespace pixbis {

inline constexpr char kCheckpointMagic[7] = {'P', 'I', 'X', 'B', 'I', 'S', '1'};
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

class CheckpointWriter {
 public:
  explicit CheckpointWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  void bytes(const void* p, size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw std::runtime_error("short write to '" + path_ + "'");
  }
  template <class T>
  void pod(T v) {
    bytes(&v, sizeof(T));
  }
  void str(const std::string& s) {
    if (s.size() > 0xffff) throw std::runtime_error("checkpoint: string too long");
    pod<uint16_t>(static_cast<uint16_t>(s.size()));
    bytes(s.data(), s.size());
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw std::runtime_error("cannot open '" + path + "'");
  }
  void bytes(void* p, size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n))
      throw std::runtime_error("'" + path_ + "': unexpected end of file at offset " +
                               std::to_string(offset_ + in_.gcount()));
    offset_ += n;
  }
  template <class T>
  T pod() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  std::string str() {
    const uint16_t n = pod<uint16_t>();
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  size_t offset() const { return offset_; }

 private:
  std::string path_;
  std::ifstream in_;
  size_t offset_ = 0;
};

inline void write_config(CheckpointWriter& w, const ModelConfig& c) {
  w.pod<int32_t>(c.input_h);
  w.pod<int32_t>(c.input_w);
  w.pod<int32_t>(c.stem_channels);
  w.pod<int32_t>(c.growth_rate);
  w.pod<int32_t>(c.block1_layers);
  w.pod<int32_t>(c.block2_layers);
  w.pod<int32_t>(c.bottleneck_factor);
  w.pod<double>(c.compression);
  w.pod<double>(c.lambda);
}

inline ModelConfig read_config(CheckpointReader& r) {
  ModelConfig c;
  c.input_h = r.pod<int32_t>();
  c.input_w = r.pod<int32_t>();
  c.stem_channels = r.pod<int32_t>();
  c.growth_rate = r.pod<int32_t>();
  c.block1_layers = r.pod<int32_t>();
  c.block2_layers = r.pod<int32_t>();
  c.bottleneck_factor = r.pod<int32_t>();
  c.compression = r.pod<double>();
  c.lambda = r.pod<double>();
  return c;
}

}  // namespace detail

/// Everything needed to resume training bit-exactly.
struct Checkpoint {
  ModelConfig config;
  Model model;
  AdamState adam;
  int epoch = 0;
  uint64_t master_seed = 0;
  std::vector<std::pair<std::string, std::string>> rng_states;
};

inline void save_checkpoint(const std::string& path, const Model& model, const AdamState& adam,
                            int epoch, uint64_t master_seed,
                            const std::vector<std::pair<std::string, std::string>>& rng_states) {
  detail::CheckpointWriter w(path);
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.pod<uint32_t>(kCheckpointVersion);
  detail::write_config(w, model.config);

  const auto named = model.named_parameters();
  w.pod<uint32_t>(static_cast<uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    w.str(name);
    w.pod<uint8_t>(0);  // dtype tag: f32
    w.pod<uint8_t>(static_cast<uint8_t>(t->shape.size()));
    for (int d : t->shape) w.pod<int32_t>(d);
    w.bytes(t->values.data(), t->values.size() * sizeof(float));
  }

  w.pod<double>(adam.config.lr);
  w.pod<double>(adam.config.beta1);
  w.pod<double>(adam.config.beta2);
  w.pod<double>(adam.config.eps);
  w.pod<double>(adam.config.weight_decay);
  w.pod<uint64_t>(static_cast<uint64_t>(adam.step_count));
  w.pod<uint32_t>(static_cast<uint32_t>(adam.m.size()));
  for (size_t i = 0; i < adam.m.size(); ++i) {
    w.pod<uint64_t>(adam.m[i].size());
    w.bytes(adam.m[i].data(), adam.m[i].size() * sizeof(float));
    w.bytes(adam.v[i].data(), adam.v[i].size() * sizeof(float));
  }

  w.pod<int32_t>(epoch);
  w.pod<uint64_t>(master_seed);
  w.pod<uint32_t>(static_cast<uint32_t>(rng_states.size()));
  for (const auto& [tag, state] : rng_states) {
    w.str(tag);
    if (state.size() > 0xffffffffu) throw std::runtime_error("checkpoint: rng state too long");
    w.pod<uint32_t>(static_cast<uint32_t>(state.size()));
    w.bytes(state.data(), state.size());
  }
}

inline Checkpoint load_checkpoint(const std::string& path) {
  detail::CheckpointReader r(path);
  char magic[sizeof(kCheckpointMagic)];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("'" + path + "': not a checkpoint (bad magic)");
  const uint32_t version = r.pod<uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("'" + path + "': unsupported checkpoint version " +
                             std::to_string(version));

  Checkpoint cp;
  cp.config = detail::read_config(r);
  cp.model = build_model<float>(cp.config, 0);

  auto named = cp.model.named_parameters();
  const uint32_t count = r.pod<uint32_t>();
  if (count != named.size())
    throw std::runtime_error("'" + path + "': parameter count " + std::to_string(count) +
                             " does not match the configured architecture (" +
                             std::to_string(named.size()) + ")");
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    if (name != named[i].first)
      throw std::runtime_error("'" + path + "': parameter '" + name + "' at offset " +
                               std::to_string(r.offset()) + ", expected '" + named[i].first + "'");
    const uint8_t dtype = r.pod<uint8_t>();
    if (dtype != 0)
      throw std::runtime_error("'" + path + "': unsupported dtype tag at offset " +
                               std::to_string(r.offset()));
    const uint8_t ndim = r.pod<uint8_t>();
    Shape shape(ndim);
    for (auto& d : shape) d = r.pod<int32_t>();
    if (shape != named[i].second->shape)
      throw std::runtime_error("'" + path + "': shape mismatch for '" + name + "' at offset " +
                               std::to_string(r.offset()));
    r.bytes(named[i].second->values.data(), named[i].second->values.size() * sizeof(float));
  }

  cp.adam.config.lr = r.pod<double>();
  cp.adam.config.beta1 = r.pod<double>();
  cp.adam.config.beta2 = r.pod<double>();
  cp.adam.config.eps = r.pod<double>();
  cp.adam.config.weight_decay = r.pod<double>();
  cp.adam.step_count = static_cast<int64_t>(r.pod<uint64_t>());
  const uint32_t acount = r.pod<uint32_t>();
  const auto trainable = cp.model.trainable_parameters();
  if (acount != trainable.size())
    throw std::runtime_error("'" + path + "': optimizer state count mismatch at offset " +
                             std::to_string(r.offset()));
  cp.adam.m.resize(acount);
  cp.adam.v.resize(acount);
  for (uint32_t i = 0; i < acount; ++i) {
    const uint64_t n = r.pod<uint64_t>();
    if (n != trainable[i]->values.size())
      throw std::runtime_error("'" + path + "': optimizer buffer size mismatch at offset " +
                               std::to_string(r.offset()));
    cp.adam.m[i].resize(n);
    cp.adam.v[i].resize(n);
    r.bytes(cp.adam.m[i].data(), n * sizeof(float));
    r.bytes(cp.adam.v[i].data(), n * sizeof(float));
  }

  cp.epoch = r.pod<int32_t>();
  cp.master_seed = r.pod<uint64_t>();
  const uint32_t rcount = r.pod<uint32_t>();
  for (uint32_t i = 0; i < rcount; ++i) {
    const std::string tag = r.str();
    const uint32_t n = r.pod<uint32_t>();
    std::string state(n, '\0');
    r.bytes(state.data(), n);
    cp.rng_states.emplace_back(tag, std::move(state));
  }
  return cp;
}

}  // namespace pixbis
