#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pixbis/ops.hpp"
#include "pixbis/rng.hpp"

namespace pixbis {

/// Architecture hyperparameters. The defaults are the desk-scale configuration;
/// faithful_config() reproduces the full-size 14x14x384 backbone.
struct ModelConfig {
  int input_h = 64;
  int input_w = 64;
  int stem_channels = 16;
  int growth_rate = 8;
  int block1_layers = 6;
  int block2_layers = 12;
  double compression = 0.5;
  int bottleneck_factor = 4;
  double lambda = 0.5;

  static constexpr int kTotalStride = 16;
  static constexpr double kBatchNormEps = 1e-5;
  static constexpr double kBatchNormMomentum = 0.1;

  int map_h() const { return input_h / kTotalStride; }
  int map_w() const { return input_w / kTotalStride; }

  void validate() const {
    if (input_h % kTotalStride != 0 || input_w % kTotalStride != 0)
      throw std::invalid_argument("model config: input size must be divisible by " +
                                  std::to_string(kTotalStride));
    if (input_h < kTotalStride || input_w < kTotalStride)
      throw std::invalid_argument("model config: input too small");
    if (stem_channels < 1 || growth_rate < 1 || block1_layers < 1 || block2_layers < 1 ||
        bottleneck_factor < 1)
      throw std::invalid_argument("model config: channel and layer counts must be >= 1");
    if (!(compression > 0.0 && compression <= 1.0))
      throw std::invalid_argument("model config: compression must be in (0,1]");
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("model config: lambda must be in [0,1]");
  }

  // Channel count leaving the backbone, from the dense-growth arithmetic.
  int backbone_channels() const {
    int c = stem_channels;
    c += block1_layers * growth_rate;
    c = static_cast<int>(c * compression);
    c += block2_layers * growth_rate;
    c = static_cast<int>(c * compression);
    return c;
  }

  static ModelConfig faithful_config() {
    ModelConfig cfg;
    cfg.input_h = cfg.input_w = 224;
    cfg.stem_channels = 96;
    cfg.growth_rate = 48;
    cfg.block1_layers = 6;
    cfg.block2_layers = 12;
    cfg.compression = 0.5;
    cfg.bottleneck_factor = 4;
    return cfg;
  }
};

template <class T>
struct ConvParamT {
  TensorPtr<T> weight;
  TensorPtr<T> bias;  // null for backbone convolutions (a norm follows them)
};

template <class T>
struct NormParamT {
  TensorPtr<T> gamma;
  TensorPtr<T> beta;
  TensorPtr<T> running_mean;
  TensorPtr<T> running_var;
};

template <class T>
struct DenseLayerT {
  NormParamT<T> norm1;
  ConvParamT<T> conv1;  // 1x1 bottleneck
  NormParamT<T> norm2;
  ConvParamT<T> conv2;  // 3x3 growth
};

template <class T>
struct TransitionT {
  NormParamT<T> norm;
  ConvParamT<T> conv;  // 1x1 compression
};

/// Captures dense-layer inputs during a forward pass, optionally zeroing one
/// layer's new features before concatenation. Inspection only; do not run
/// backward on a probed graph.
template <class T>
struct ForwardProbe {
  int ablate_block = 0;  // 1 or 2; 0 disables ablation
  int ablate_layer = 0;  // 1-based layer index within the block
  std::vector<std::vector<TensorPtr<T>>> block_inputs{2};
};

/// Densely connected backbone with a pixel-map head and a binary head.
template <class T>
class ModelT {
 public:
  ModelConfig config;
  bool train_mode = true;

  ConvParamT<T> stem_conv;
  NormParamT<T> stem_norm;
  std::vector<DenseLayerT<T>> block1;
  TransitionT<T> transition1;
  std::vector<DenseLayerT<T>> block2;
  TransitionT<T> transition2;
  ConvParamT<T> pixel_head;
  TensorPtr<T> binary_weight;  // [map_h*map_w, 1]
  TensorPtr<T> binary_bias;    // [1]

  struct Output {
    TensorPtr<T> map;     // [N,1,map_h,map_w], values in (0,1)
    TensorPtr<T> binary;  // [N,1], values in (0,1)
  };

  void set_train(bool on) { train_mode = on; }

  /// Named parameters in a fixed order, running statistics included.
  std::vector<std::pair<std::string, TensorPtr<T>>> named_parameters() const {
    std::vector<std::pair<std::string, TensorPtr<T>>> out;
    auto conv = [&out](const std::string& prefix, const ConvParamT<T>& p) {
      out.emplace_back(prefix + ".weight", p.weight);
      if (p.bias) out.emplace_back(prefix + ".bias", p.bias);
    };
    auto norm = [&out](const std::string& prefix, const NormParamT<T>& p) {
      out.emplace_back(prefix + ".gamma", p.gamma);
      out.emplace_back(prefix + ".beta", p.beta);
      out.emplace_back(prefix + ".running_mean", p.running_mean);
      out.emplace_back(prefix + ".running_var", p.running_var);
    };
    conv("stem.conv", stem_conv);
    norm("stem.norm", stem_norm);
    for (size_t b = 0; b < 2; ++b) {
      const auto& block = b == 0 ? block1 : block2;
      const std::string bname = "block" + std::to_string(b + 1);
      for (size_t l = 0; l < block.size(); ++l) {
        const std::string lname = bname + ".layer" + std::to_string(l + 1);
        norm(lname + ".norm1", block[l].norm1);
        conv(lname + ".conv1", block[l].conv1);
        norm(lname + ".norm2", block[l].norm2);
        conv(lname + ".conv2", block[l].conv2);
      }
      const auto& tr = b == 0 ? transition1 : transition2;
      const std::string tname = "transition" + std::to_string(b + 1);
      norm(tname + ".norm", tr.norm);
      conv(tname + ".conv", tr.conv);
    }
    conv("pixel_head.conv", pixel_head);
    out.emplace_back("binary_head.fc.weight", binary_weight);
    out.emplace_back("binary_head.fc.bias", binary_bias);
    return out;
  }

  /// Parameters the optimizer updates (running statistics excluded).
  std::vector<TensorPtr<T>> trainable_parameters() const {
    std::vector<TensorPtr<T>> out;
    for (const auto& [name, t] : named_parameters())
      if (name.find("running_") == std::string::npos) out.push_back(t);
    return out;
  }

  Output forward(GraphT<T>& g, const TensorPtr<T>& batch, ForwardProbe<T>* probe = nullptr) {
    if (batch->shape.size() != 4 || batch->shape[1] != 3)
      throw std::invalid_argument("forward: batch must be [N,3,H,W]");
    if (batch->shape[2] != config.input_h || batch->shape[3] != config.input_w)
      throw std::invalid_argument(
          "forward: input size " + std::to_string(batch->shape[2]) + "x" +
          std::to_string(batch->shape[3]) + " does not match configured " +
          std::to_string(config.input_h) + "x" + std::to_string(config.input_w));

    const T eps = static_cast<T>(ModelConfig::kBatchNormEps);
    const T mom = static_cast<T>(ModelConfig::kBatchNormMomentum);
    auto norm = [&](const TensorPtr<T>& x, const NormParamT<T>& p) {
      return batchnorm2d(g, x, p.gamma, p.beta, p.running_mean, p.running_var, train_mode, eps,
                         mom);
    };

    auto x = conv2d(g, batch, stem_conv.weight, stem_conv.bias, 2, 3);
    x = relu(g, norm(x, stem_norm));
    x = pool2d(g, x, PoolKind::kMax, 3, 2, 1);

    for (int b = 0; b < 2; ++b) {
      auto& block = b == 0 ? block1 : block2;
      for (size_t l = 0; l < block.size(); ++l) {
        if (probe) probe->block_inputs[b].push_back(x);
        auto t = relu(g, norm(x, block[l].norm1));
        t = conv2d(g, t, block[l].conv1.weight, block[l].conv1.bias, 1, 0);
        t = relu(g, norm(t, block[l].norm2));
        t = conv2d(g, t, block[l].conv2.weight, block[l].conv2.bias, 1, 1);
        if (probe && probe->ablate_block == b + 1 &&
            probe->ablate_layer == static_cast<int>(l) + 1)
          t = make_tensor<T>(t->shape);
        x = concat_channels(g, {x, t});
      }
      const auto& tr = b == 0 ? transition1 : transition2;
      x = norm(x, tr.norm);
      x = conv2d(g, x, tr.conv.weight, tr.conv.bias, 1, 0);
      x = pool2d(g, x, PoolKind::kAvg, 2, 2, 0);
    }

    auto map_logits = conv2d(g, x, pixel_head.weight, pixel_head.bias, 1, 0);
    auto map = sigmoid(g, map_logits);
    const int n = map->shape[0];
    auto flat = reshape(g, map, {n, map->shape[2] * map->shape[3]});
    auto binary = sigmoid(g, affine(g, flat, binary_weight, binary_bias));
    return Output{map, binary};
  }
};

namespace detail {

template <class T>
ConvParamT<T> init_conv(int out_c, int in_c, int kh, int kw, Rng& rng, bool with_bias) {
  ConvParamT<T> p;
  p.weight = make_tensor<T>({out_c, in_c, kh, kw}, true);
  const double scale = std::sqrt(2.0 / (static_cast<double>(in_c) * kh * kw));
  for (auto& v : p.weight->values) v = static_cast<T>(rng.normal() * scale);
  if (with_bias) p.bias = make_tensor<T>({out_c}, true);
  return p;
}

template <class T>
NormParamT<T> init_norm(int c) {
  NormParamT<T> p;
  p.gamma = make_tensor<T>({c}, true);
  p.beta = make_tensor<T>({c}, true);
  p.running_mean = make_tensor<T>({c});
  p.running_var = make_tensor<T>({c});
  for (auto& v : p.gamma->values) v = T(1);
  for (auto& v : p.running_var->values) v = T(1);
  return p;
}

}  // namespace detail

/// Builds the network with seeded He-style initialization. Construction
/// checks that the dense-growth arithmetic yields a positive channel count at
/// every stage and that the pixel map is input/16 on each side.
template <class T>
ModelT<T> build_model(const ModelConfig& config, uint64_t seed) {
  config.validate();
  ModelT<T> m;
  m.config = config;
  Rng rng = Rng::stream(seed, "init");

  m.stem_conv = detail::init_conv<T>(config.stem_channels, 3, 7, 7, rng, false);
  m.stem_norm = detail::init_norm<T>(config.stem_channels);

  int channels = config.stem_channels;
  const int bottleneck = config.bottleneck_factor * config.growth_rate;
  for (int b = 0; b < 2; ++b) {
    auto& block = b == 0 ? m.block1 : m.block2;
    const int layers = b == 0 ? config.block1_layers : config.block2_layers;
    for (int l = 0; l < layers; ++l) {
      DenseLayerT<T> layer;
      layer.norm1 = detail::init_norm<T>(channels);
      layer.conv1 = detail::init_conv<T>(bottleneck, channels, 1, 1, rng, false);
      layer.norm2 = detail::init_norm<T>(bottleneck);
      layer.conv2 = detail::init_conv<T>(config.growth_rate, bottleneck, 3, 3, rng, false);
      block.push_back(std::move(layer));
      channels += config.growth_rate;
    }
    const int compressed = static_cast<int>(channels * config.compression);
    if (compressed < 1) throw std::invalid_argument("model config: compression collapses channels");
    auto& tr = b == 0 ? m.transition1 : m.transition2;
    tr.norm = detail::init_norm<T>(channels);
    tr.conv = detail::init_conv<T>(compressed, channels, 1, 1, rng, false);
    channels = compressed;
  }
  if (channels != config.backbone_channels())
    throw std::logic_error("model build: backbone channel arithmetic mismatch");

  m.pixel_head = detail::init_conv<T>(1, channels, 1, 1, rng, true);
  const int map_elems = config.map_h() * config.map_w();
  m.binary_weight = make_tensor<T>({map_elems, 1}, true);
  const double scale = std::sqrt(2.0 / map_elems);
  for (auto& v : m.binary_weight->values) v = static_cast<T>(rng.normal() * scale);
  m.binary_bias = make_tensor<T>({1}, true);
  return m;
}

constexpr double kProbClamp = 1e-7;

/// Mean binary cross-entropy over all map cells, the frame label broadcast to
/// every pixel. Predictions are clamped to [1e-7, 1-1e-7] before the logs.
template <class T>
TensorPtr<T> pixelwise_bce(GraphT<T>& g, const TensorPtr<T>& map, const std::vector<T>& labels) {
  if (map->shape.size() != 4 || map->shape[1] != 1)
    throw std::invalid_argument("pixelwise_bce: map must be [N,1,h,w]");
  if (static_cast<int>(labels.size()) != map->shape[0])
    throw std::invalid_argument("pixelwise_bce: one label per sample required");
  const int n = map->shape[0];
  const int64_t plane = static_cast<int64_t>(map->shape[2]) * map->shape[3];
  const T lo = static_cast<T>(kProbClamp), hi = T(1) - static_cast<T>(kProbClamp);

  auto out = make_tensor<T>({1});
  T acc = 0;
  for (int s = 0; s < n; ++s) {
    const T y = labels[s];
    const T* p = map->values.data() + s * plane;
    for (int64_t i = 0; i < plane; ++i) {
      const T pc = std::clamp(p[i], lo, hi);
      acc -= y * std::log(pc) + (T(1) - y) * std::log(T(1) - pc);
    }
  }
  out->values[0] = acc / static_cast<T>(n * plane);

  out->requires_grad = map->requires_grad;
  g.record({map}, out, [map, out, labels, n, plane, lo, hi]() {
    if (!map->requires_grad) return;
    const T scale = out->grad[0] / static_cast<T>(n * plane);
    for (int s = 0; s < n; ++s) {
      const T y = labels[s];
      const T* p = map->values.data() + s * plane;
      T* dp = map->grad.data() + s * plane;
      for (int64_t i = 0; i < plane; ++i) {
        if (p[i] < lo || p[i] > hi) continue;  // clamp region: zero slope
        dp[i] -= scale * (y / p[i] - (T(1) - y) / (T(1) - p[i]));
      }
    }
  });
  return out;
}

/// Binary cross-entropy on the [N,1] binary output.
template <class T>
TensorPtr<T> binary_bce(GraphT<T>& g, const TensorPtr<T>& pred, const std::vector<T>& labels) {
  if (pred->shape.size() != 2 || pred->shape[1] != 1)
    throw std::invalid_argument("binary_bce: prediction must be [N,1]");
  if (static_cast<int>(labels.size()) != pred->shape[0])
    throw std::invalid_argument("binary_bce: one label per sample required");
  const int n = pred->shape[0];
  const T lo = static_cast<T>(kProbClamp), hi = T(1) - static_cast<T>(kProbClamp);

  auto out = make_tensor<T>({1});
  T acc = 0;
  for (int s = 0; s < n; ++s) {
    const T pc = std::clamp(pred->values[s], lo, hi);
    acc -= labels[s] * std::log(pc) + (T(1) - labels[s]) * std::log(T(1) - pc);
  }
  out->values[0] = acc / static_cast<T>(n);

  out->requires_grad = pred->requires_grad;
  g.record({pred}, out, [pred, out, labels, n, lo, hi]() {
    if (!pred->requires_grad) return;
    const T scale = out->grad[0] / static_cast<T>(n);
    for (int s = 0; s < n; ++s) {
      const T p = pred->values[s];
      if (p < lo || p > hi) continue;
      pred->grad[s] -= scale * (labels[s] / p - (T(1) - labels[s]) / (T(1) - p));
    }
  });
  return out;
}

/// lambda * pixel_loss + (1 - lambda) * binary_loss.
template <class T>
TensorPtr<T> combined_loss(GraphT<T>& g, const TensorPtr<T>& pixel_loss,
                           const TensorPtr<T>& binary_loss, T lambda) {
  if (!(lambda >= T(0) && lambda <= T(1)))
    throw std::invalid_argument("combined_loss: lambda must be in [0,1]");
  if (pixel_loss->numel() != 1 || binary_loss->numel() != 1)
    throw std::invalid_argument("combined_loss: both losses must be scalars");
  auto out = make_tensor<T>({1});
  out->values[0] = lambda * pixel_loss->values[0] + (T(1) - lambda) * binary_loss->values[0];
  out->requires_grad = pixel_loss->requires_grad || binary_loss->requires_grad;
  g.record({pixel_loss, binary_loss}, out, [pixel_loss, binary_loss, out, lambda]() {
    if (pixel_loss->requires_grad) pixel_loss->grad[0] += lambda * out->grad[0];
    if (binary_loss->requires_grad) binary_loss->grad[0] += (T(1) - lambda) * out->grad[0];
  });
  return out;
}

/// Mean of a single prediction map; higher means more bonafide.
template <class T>
double frame_score(const TensorT<T>& map) {
  double acc = 0;
  for (const T v : map.values) acc += static_cast<double>(v);
  return acc / static_cast<double>(map.numel());
}

/// Per-sample map means for a batched [N,1,h,w] prediction.
template <class T>
std::vector<double> frame_scores(const TensorT<T>& map) {
  const int n = map.shape.at(0);
  const int64_t plane = map.numel() / n;
  std::vector<double> out(n);
  for (int s = 0; s < n; ++s) {
    double acc = 0;
    for (int64_t i = 0; i < plane; ++i) acc += static_cast<double>(map.values[s * plane + i]);
    out[s] = acc / static_cast<double>(plane);
  }
  return out;
}

using Model = ModelT<float>;

}  // namespace pixbis
