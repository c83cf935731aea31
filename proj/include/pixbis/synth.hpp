#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/dataset.hpp"
#include "pixbis/image.hpp"
#include "pixbis/rng.hpp"
#include "pixbis/types.hpp"

namespace pixbis {

/// Synthetic corpus parameters. Strengths scale the recapture-artifact
/// amplitude; 0 is the identity, the documented range is [0, 1.25].
struct GeneratorConfig {
  int image_size = 64;
  int subjects = 12;
  int bonafide_videos = 2;  // per subject
  int attack_videos = 4;    // per subject, PAIs assigned round-robin
  int frames_per_video = 20;
  double strength_print_halftone = 0.8;
  double strength_replay_moire = 0.8;
  double strength_replay_banding = 0.8;
  double strength_print_colorcast = 0.8;
  uint64_t seed = 7;

  double strength(Pai p) const {
    switch (p) {
      case Pai::kPrintHalftone: return strength_print_halftone;
      case Pai::kReplayMoire: return strength_replay_moire;
      case Pai::kReplayBanding: return strength_replay_banding;
      case Pai::kPrintColorcast: return strength_print_colorcast;
      default: return 0.0;
    }
  }

  void validate() const {
    if (image_size < 16) throw std::invalid_argument("generator: image_size must be >= 16");
    if (subjects < 1 || bonafide_videos < 1 || attack_videos < 1 || frames_per_video < 1)
      throw std::invalid_argument("generator: all counts must be >= 1");
    for (Pai p : kAttackPais)
      if (strength(p) < 0.0 || strength(p) > 1.25)
        throw std::invalid_argument("generator: artifact strength outside [0, 1.25]");
  }

  std::string canonical() const {
    std::ostringstream os;
    os << "size=" << image_size << ";subjects=" << subjects << ";bona=" << bonafide_videos
       << ";attack=" << attack_videos << ";frames=" << frames_per_video << ";sh="
       << strength_print_halftone << ";sm=" << strength_replay_moire << ";sb="
       << strength_replay_banding << ";sc=" << strength_print_colorcast << ";seed=" << seed;
    return os.str();
  }
};

namespace detail {

inline float smoothband(float x, float edge, float soft) {
  return std::clamp((edge - x) / soft, 0.0f, 1.0f);
}

struct SubjectParams {
  float skin_r, skin_g, skin_b;
  float bg_r, bg_g, bg_b;
  float axis_a, axis_b;
  float eye_dy, eye_dx, eye_r;
  float mouth_dy, mouth_hw, mouth_hh;
  float nose_len, nose_hw;
};

inline SubjectParams subject_params(uint64_t seed, int subject) {
  Rng rng = Rng::stream(seed, "subject", static_cast<uint64_t>(subject));
  SubjectParams p;
  p.skin_r = static_cast<float>(rng.uniform(0.55, 0.82));
  p.skin_g = p.skin_r * static_cast<float>(rng.uniform(0.70, 0.85));
  p.skin_b = p.skin_g * static_cast<float>(rng.uniform(0.70, 0.90));
  p.bg_r = static_cast<float>(rng.uniform(0.08, 0.38));
  p.bg_g = static_cast<float>(rng.uniform(0.08, 0.38));
  p.bg_b = static_cast<float>(rng.uniform(0.10, 0.45));
  p.axis_a = static_cast<float>(rng.uniform(0.24, 0.33));
  p.axis_b = static_cast<float>(rng.uniform(0.33, 0.44));
  p.eye_dy = static_cast<float>(rng.uniform(-0.15, -0.08));
  p.eye_dx = static_cast<float>(rng.uniform(0.10, 0.16));
  p.eye_r = static_cast<float>(rng.uniform(0.035, 0.055));
  p.mouth_dy = static_cast<float>(rng.uniform(0.16, 0.25));
  p.mouth_hw = static_cast<float>(rng.uniform(0.09, 0.15));
  p.mouth_hh = static_cast<float>(rng.uniform(0.020, 0.038));
  p.nose_len = static_cast<float>(rng.uniform(0.08, 0.14));
  p.nose_hw = static_cast<float>(rng.uniform(0.012, 0.022));
  return p;
}

}  // namespace detail

/// Deterministic face-like frame: per-subject geometry and hue, per-frame pose
/// and illumination jitter, mild sensor noise. `session` distinguishes videos
/// of the same subject.
inline Image render_bonafide(uint64_t seed, int image_size, int subject, int session,
                             int frame) {
  const auto sp = detail::subject_params(seed, subject);
  Rng rng = Rng::stream(seed, "frame", static_cast<uint64_t>(subject),
                        static_cast<uint64_t>(session), static_cast<uint64_t>(frame));
  const float cx = static_cast<float>(rng.uniform(-0.02, 0.02));
  const float cy = static_cast<float>(rng.uniform(-0.015, 0.025));
  const float theta = static_cast<float>(rng.uniform(-0.05, 0.05));
  const float scale = static_cast<float>(rng.uniform(0.96, 1.04));
  const float illum_phi = static_cast<float>(rng.uniform(0.0, 6.2831853));
  const float illum = static_cast<float>(rng.uniform(0.0, 0.12));
  const float brightness = static_cast<float>(rng.uniform(0.94, 1.06));
  const float noise_sigma = 0.008f;
  const float ct = std::cos(theta), st = std::sin(theta);

  Image img(image_size, image_size);
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      const float u = (x + 0.5f) / image_size - 0.5f;
      const float v = (y + 0.5f) / image_size - 0.5f;
      const float ur = (ct * (u - cx) + st * (v - cy)) / scale;
      const float vr = (-st * (u - cx) + ct * (v - cy)) / scale;

      const float e = (ur / sp.axis_a) * (ur / sp.axis_a) + (vr / sp.axis_b) * (vr / sp.axis_b);
      const float face = std::clamp((1.06f - e) / 0.16f, 0.0f, 1.0f);

      float r = sp.bg_r * (1.0f + 0.25f * v);
      float g = sp.bg_g * (1.0f + 0.25f * v);
      float b = sp.bg_b * (1.0f + 0.25f * v);
      if (face > 0.0f) {
        const float shade = 1.0f - 0.22f * e;
        float fr = sp.skin_r * shade;
        float fg = sp.skin_g * shade;
        float fb = sp.skin_b * shade;
        for (int side = -1; side <= 1; side += 2) {
          const float dx = ur - side * sp.eye_dx;
          const float dy = vr - sp.eye_dy;
          const float d = std::sqrt(dx * dx + dy * dy);
          const float eye = detail::smoothband(d, sp.eye_r, 0.012f);
          fr = fr + eye * (0.12f - fr);
          fg = fg + eye * (0.10f - fg);
          fb = fb + eye * (0.09f - fb);
        }
        if (std::abs(ur) < sp.nose_hw * 2.0f && vr > -0.02f && vr < sp.nose_len) {
          const float nose = detail::smoothband(std::abs(ur), sp.nose_hw, 0.008f);
          fr *= 1.0f - 0.18f * nose;
          fg *= 1.0f - 0.18f * nose;
          fb *= 1.0f - 0.18f * nose;
        }
        const float me = (ur / sp.mouth_hw) * (ur / sp.mouth_hw) +
                         ((vr - sp.mouth_dy) / sp.mouth_hh) * ((vr - sp.mouth_dy) / sp.mouth_hh);
        const float mouth = detail::smoothband(me, 1.0f, 0.35f);
        fr = fr + mouth * (0.55f * sp.skin_r + 0.12f - fr);
        fg = fg + mouth * (0.18f - fg);
        fb = fb + mouth * (0.16f - fb);
        r += face * (fr - r);
        g += face * (fg - g);
        b += face * (fb - b);
      }
      const float light =
          brightness * (1.0f + illum * (u * std::cos(illum_phi) + v * std::sin(illum_phi)));
      r *= light;
      g *= light;
      b *= light;
      img.at(x, y, 0) = r + noise_sigma * static_cast<float>(rng.normal());
      img.at(x, y, 1) = g + noise_sigma * static_cast<float>(rng.normal());
      img.at(x, y, 2) = b + noise_sigma * static_cast<float>(rng.normal());
    }
  }
  img.clamp01();
  return img;
}

namespace detail {

inline Image gaussian_blur3(const Image& img, float sigma) {
  // Separable 5-tap Gaussian, replicated borders.
  float k[5];
  float sum = 0.0f;
  for (int i = -2; i <= 2; ++i) {
    k[i + 2] = std::exp(-0.5f * i * i / (sigma * sigma));
    sum += k[i + 2];
  }
  for (float& v : k) v /= sum;
  Image tmp(img.width, img.height), out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        float acc = 0.0f;
        for (int i = -2; i <= 2; ++i)
          acc += k[i + 2] * img.at(std::clamp(x + i, 0, img.width - 1), y, c);
        tmp.at(x, y, c) = acc;
      }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        float acc = 0.0f;
        for (int i = -2; i <= 2; ++i)
          acc += k[i + 2] * tmp.at(x, std::clamp(y + i, 0, img.height - 1), c);
        out.at(x, y, c) = acc;
      }
  return out;
}

constexpr int kBayer4[4][4] = {{0, 8, 2, 10}, {12, 4, 14, 6}, {3, 11, 1, 9}, {15, 7, 13, 5}};

}  // namespace detail

/// Overlays one recapture-artifact family on a frame. Amplitude scales with
/// `strength`; strength 0 returns the input unchanged.
inline Image apply_attack_artifact(const Image& img, Pai pai, double strength, Rng& rng) {
  if (pai == Pai::kNone) throw std::invalid_argument("apply_attack_artifact: pai must not be none");
  if (strength < 0.0 || strength > 1.25)
    throw std::invalid_argument("apply_attack_artifact: strength outside [0, 1.25]");
  const float s = static_cast<float>(strength);
  Image out = img;

  switch (pai) {
    case Pai::kPrintHalftone: {
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          const float lum = 0.299f * img.at(x, y, 0) + 0.587f * img.at(x, y, 1) +
                            0.114f * img.at(x, y, 2);
          const float t = (detail::kBayer4[y % 4][x % 4] + 0.5f) / 16.0f;
          const float dot = lum > t ? std::min(1.0f, lum + 0.45f) : std::max(0.0f, lum - 0.45f);
          for (int c = 0; c < 3; ++c) {
            float v = img.at(x, y, c);
            v += 0.35f * s * (lum - v);       // desaturate
            v += 0.55f * s * (dot - v);       // ordered-dither dots
            out.at(x, y, c) = v;
          }
        }
      break;
    }
    case Pai::kReplayMoire: {
      const float theta = static_cast<float>(rng.uniform(0.30, 0.58));
      const float period = static_cast<float>(rng.uniform(3.8, 5.2));
      const float phase = static_cast<float>(rng.uniform(0.0, 6.2831853));
      const float fx = std::cos(theta) / period, fy = std::sin(theta) / period;
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          const float wave = std::sin(6.2831853f * (fx * x + fy * y) + phase);
          const float factor = 1.0f + 0.22f * s * wave;
          for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, c) * factor;
        }
      break;
    }
    case Pai::kReplayBanding: {
      const float period = static_cast<float>(rng.uniform(6.0, 9.0));
      const float phase = static_cast<float>(rng.uniform(0.0, 6.2831853));
      const float streak_x = static_cast<float>(rng.uniform(0.2, 0.8)) * img.width;
      const float streak_w = static_cast<float>(rng.uniform(0.05, 0.11)) * img.width;
      for (int y = 0; y < img.height; ++y) {
        const float band = 1.0f + 0.16f * s * std::sin(6.2831853f * y / period + phase);
        for (int x = 0; x < img.width; ++x) {
          const float d = (x - streak_x) / streak_w;
          const float streak = 0.28f * s * std::exp(-d * d);
          for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, c) * band + streak;
        }
      }
      break;
    }
    case Pai::kPrintColorcast: {
      const float dr = static_cast<float>(rng.uniform(0.12, 0.25));
      const float db = static_cast<float>(rng.uniform(0.10, 0.22));
      const float sign = rng.bernoulli(0.5) ? 1.0f : -1.0f;
      Image cast = img;
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          cast.at(x, y, 0) = img.at(x, y, 0) * (1.0f + sign * dr * s);
          cast.at(x, y, 2) = img.at(x, y, 2) * (1.0f - sign * db * s);
        }
      const Image blurred = detail::gaussian_blur3(cast, 1.0f);
      const float mixf = std::min(1.0f, 0.85f * s);
      for (size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = cast.data[i] + mixf * (blurred.data[i] - cast.data[i]);
      break;
    }
    default:
      break;
  }
  out.clamp01();
  return out;
}

namespace detail {

inline Split subject_split(uint64_t seed, int subject) {
  // Hash-modulo assignment: train 60%, dev 20%, eval 20%.
  const uint64_t h =
      splitmix64(splitmix64(seed ^ fnv1a64("subject-split")) + static_cast<uint64_t>(subject));
  const uint64_t bucket = h % 10;
  if (bucket < 6) return Split::kTrain;
  if (bucket < 8) return Split::kDev;
  return Split::kEval;
}

}  // namespace detail

/// Renders the corpus into out_dir (PPM frames plus manifest.csv). Subjects
/// are assigned to disjoint splits by hash; attack videos cycle through the
/// four PAI families. Pure function of the config.
inline Manifest generate_dataset(const GeneratorConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);

  std::array<int, 3> split_counts{0, 0, 0};
  for (int s = 0; s < cfg.subjects; ++s)
    ++split_counts[static_cast<int>(detail::subject_split(cfg.seed, s))];
  if (split_counts[0] == 0 || split_counts[1] == 0 || split_counts[2] == 0)
    throw std::runtime_error(
        "generator: subject hash left a split empty; increase subjects or change the seed");

  Manifest m;
  m.name = std::filesystem::path(out_dir).filename().string();
  m.root = out_dir;
  m.config_hash = fnv1a64(cfg.canonical());

  char buf[64];
  for (int s = 0; s < cfg.subjects; ++s) {
    const Split split = detail::subject_split(cfg.seed, s);
    for (int v = 0; v < cfg.bonafide_videos; ++v) {
      std::snprintf(buf, sizeof(buf), "s%02d_b%d", s, v);
      const std::string video_id = buf;
      for (int f = 0; f < cfg.frames_per_video; ++f) {
        const Image img = render_bonafide(cfg.seed, cfg.image_size, s, v, f);
        std::snprintf(buf, sizeof(buf), "%s_f%02d.ppm", video_id.c_str(), f);
        const std::string file = buf;
        write_ppm(img, (std::filesystem::path(out_dir) / file).string());
        m.samples.push_back({file, Label::kBonafide, Pai::kNone, video_id, f, split});
      }
    }
    for (int v = 0; v < cfg.attack_videos; ++v) {
      const Pai pai = kAttackPais[v % kAttackPais.size()];
      std::snprintf(buf, sizeof(buf), "s%02d_a%d", s, v);
      const std::string video_id = buf;
      for (int f = 0; f < cfg.frames_per_video; ++f) {
        const Image base =
            render_bonafide(cfg.seed, cfg.image_size, s, cfg.bonafide_videos + v, f);
        Rng artifact_rng = Rng::stream(cfg.seed, "artifact", static_cast<uint64_t>(s),
                                       static_cast<uint64_t>(v), static_cast<uint64_t>(f));
        const Image img = apply_attack_artifact(base, pai, cfg.strength(pai), artifact_rng);
        std::snprintf(buf, sizeof(buf), "%s_f%02d.ppm", video_id.c_str(), f);
        const std::string file = buf;
        write_ppm(img, (std::filesystem::path(out_dir) / file).string());
        m.samples.push_back({file, Label::kAttack, pai, video_id, f, split});
      }
    }
  }
  validate_manifest(m);
  write_manifest(m, out_dir);
  return m;
}

}  // namespace pixbis
