#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/adam.hpp"
#include "pixbis/checkpoint.hpp"
#include "pixbis/dataset.hpp"
#include "pixbis/image.hpp"
#include "pixbis/model.hpp"
#include "pixbis/rng.hpp"

namespace pixbis {

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  int batch_size = 32;
  int epochs = 20;
  double lambda = 0.5;
  double flip_prob = 0.5;
  double jitter_range = 0.1;
  uint64_t seed = 7;

  void validate() const {
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (flip_prob < 0.0 || flip_prob > 1.0 || jitter_range < 0.0 || jitter_range > 1.0)
      throw std::invalid_argument("train config: probabilities must lie in [0,1]");
    if (lambda < 0.0 || lambda > 1.0)
      throw std::invalid_argument("train config: lambda must lie in [0,1]");
  }
};

struct EpochLoss {
  int epoch;  // 1-based
  double combined;
  double pixel;
  double binary;
};

/// Equal-count class balancing: the majority class is subsampled uniformly
/// without replacement. Returns indices into `samples`.
inline std::vector<int> balance_classes(const std::vector<Sample>& samples, uint64_t seed) {
  std::vector<int> bona, attack;
  for (size_t i = 0; i < samples.size(); ++i)
    (samples[i].label == Label::kBonafide ? bona : attack).push_back(static_cast<int>(i));
  if (bona.empty() || attack.empty())
    throw std::runtime_error("balance_classes: split lacks one of the classes (" +
                             std::to_string(bona.size()) + " bonafide, " +
                             std::to_string(attack.size()) + " attack)");
  Rng rng(seed);
  auto shuffle = [&rng](std::vector<int>& v) {
    for (size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[rng.uniform_int(i)]);
  };
  shuffle(bona);
  shuffle(attack);
  const size_t k = std::min(bona.size(), attack.size());
  std::vector<int> out;
  out.reserve(2 * k);
  out.insert(out.end(), bona.begin(), bona.begin() + k);
  out.insert(out.end(), attack.begin(), attack.begin() + k);
  return out;
}

/// Horizontal flip with probability flip_prob, then brightness, contrast, and
/// saturation jitter, each drawn uniformly from [1-j, 1+j]. Output is clamped
/// to [0,1]. All four draws are consumed on every call.
inline Image augment(const Image& img, Rng& rng, double flip_prob, double jitter_range) {
  const bool flip = rng.uniform01() < flip_prob;
  const float u1 = static_cast<float>(rng.uniform(1.0 - jitter_range, 1.0 + jitter_range));
  const float u2 = static_cast<float>(rng.uniform(1.0 - jitter_range, 1.0 + jitter_range));
  const float u3 = static_cast<float>(rng.uniform(1.0 - jitter_range, 1.0 + jitter_range));

  Image out(img.width, img.height);
  double mean_lum = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const int sx = flip ? img.width - 1 - x : x;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sx, y, c);
      mean_lum += 0.299 * out.at(x, y, 0) + 0.587 * out.at(x, y, 1) + 0.114 * out.at(x, y, 2);
    }
  if (u1 == 1.0f && u2 == 1.0f && u3 == 1.0f) return out;  // exact identity path
  mean_lum /= static_cast<double>(img.width) * img.height;
  const float mean = static_cast<float>(mean_lum);

  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      float r = out.at(x, y, 0) * u1;
      float g = out.at(x, y, 1) * u1;
      float b = out.at(x, y, 2) * u1;
      r = mean + (r - mean) * u2;
      g = mean + (g - mean) * u2;
      b = mean + (b - mean) * u2;
      const float gray = 0.299f * r + 0.587f * g + 0.114f * b;
      out.at(x, y, 0) = gray + (r - gray) * u3;
      out.at(x, y, 1) = gray + (g - gray) * u3;
      out.at(x, y, 2) = gray + (b - gray) * u3;
    }
  out.clamp01();
  return out;
}

inline Image load_sample_image(const std::string& root, const Sample& s) {
  return read_ppm((std::filesystem::path(root) / s.path).string());
}

namespace detail {

inline void fill_batch_slot(TensorT<float>& batch, int slot, const TensorT<float>& chw) {
  std::copy(chw.values.begin(), chw.values.end(),
            batch.values.begin() + static_cast<int64_t>(slot) * chw.numel());
}

inline std::vector<std::pair<std::string, std::string>> epoch_rng_states(uint64_t seed,
                                                                         int next_epoch) {
  // Streams the next epoch will consume; rederivable from (seed, epoch), so
  // these are carried for inspection rather than required at resume.
  const auto e = static_cast<uint64_t>(next_epoch);
  return {{"balance", Rng::stream(seed, "balance", e).save_state()},
          {"shuffle", Rng::stream(seed, "shuffle", e).save_state()},
          {"augment", Rng::stream(seed, "augment", e).save_state()}};
}

}  // namespace detail

/// Epoch loop: rebalance, shuffle, augment, forward, combined loss, backward,
/// Adam. Writes one checkpoint per epoch into checkpoint_dir and returns the
/// per-epoch loss log. `start_epoch` resumes from a loaded model/adam state.
inline std::vector<EpochLoss> train(Model& model, AdamState& adam,
                                    const std::vector<Sample>& train_samples,
                                    const std::string& data_root, const TrainConfig& cfg,
                                    const std::string& checkpoint_dir, int start_epoch = 0) {
  cfg.validate();
  adam.config.lr = cfg.lr;
  adam.config.weight_decay = cfg.weight_decay;
  auto trainable = model.trainable_parameters();
  if (adam.m.empty()) adam.init(trainable);
  if (!checkpoint_dir.empty()) std::filesystem::create_directories(checkpoint_dir);

  const int h = model.config.input_h, w = model.config.input_w;
  std::vector<EpochLoss> log;
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const uint64_t balance_seed =
        splitmix64(splitmix64(cfg.seed ^ fnv1a64("balance")) + static_cast<uint64_t>(epoch));
    auto order = balance_classes(train_samples, balance_seed);
    {
      Rng shuffle_rng = Rng::stream(cfg.seed, "shuffle", static_cast<uint64_t>(epoch));
      for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    }
    Rng augment_rng = Rng::stream(cfg.seed, "augment", static_cast<uint64_t>(epoch));

    model.set_train(true);
    double sum_combined = 0, sum_pixel = 0, sum_binary = 0;
    int64_t seen = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const int n = static_cast<int>(std::min<size_t>(cfg.batch_size, order.size() - start));
      auto batch = make_tensor<float>({n, 3, h, w});
      std::vector<float> labels(n);
      for (int i = 0; i < n; ++i) {
        const Sample& s = train_samples[order[start + i]];
        const Image img =
            augment(load_sample_image(data_root, s), augment_rng, cfg.flip_prob, cfg.jitter_range);
        detail::fill_batch_slot(*batch, i, preprocess(img, h, w));
        labels[i] = s.label == Label::kBonafide ? 1.0f : 0.0f;
      }

      Graph g;
      auto out = model.forward(g, batch);
      auto lp = pixelwise_bce(g, out.map, labels);
      auto lb = binary_bce(g, out.binary, labels);
      auto loss = combined_loss(g, lp, lb, static_cast<float>(cfg.lambda));
      if (!std::isfinite(loss->values[0]))
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch + 1) +
                                 ", batch starting with sample '" +
                                 train_samples[order[start]].path + "'");
      g.backward(loss);
      adam_step(trainable, adam);

      sum_combined += static_cast<double>(loss->values[0]) * n;
      sum_pixel += static_cast<double>(lp->values[0]) * n;
      sum_binary += static_cast<double>(lb->values[0]) * n;
      seen += n;
    }

    log.push_back({epoch + 1, sum_combined / seen, sum_pixel / seen, sum_binary / seen});
    if (!checkpoint_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch + 1);
      save_checkpoint((std::filesystem::path(checkpoint_dir) / name).string(), model, adam,
                      epoch + 1, cfg.seed, detail::epoch_rng_states(cfg.seed, epoch + 1));
    }
  }
  return log;
}

inline void write_loss_log(const std::vector<EpochLoss>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "epoch,combined,pixel,binary\n";
  char buf[128];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", e.epoch, e.combined, e.pixel,
                  e.binary);
    out << buf;
  }
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

}  // namespace pixbis
