#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/image.hpp"

namespace pixbis {

constexpr int kLbpDim = 59;
constexpr int kIqmDim = 18;

/// Single-channel image in double precision (feature extraction path).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, 0.0) {}
  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

inline GrayImage to_grayscale(const Image& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  return out;
}

namespace detail {

inline int circular_transitions(int pattern) {
  const int rotated = ((pattern << 1) | (pattern >> 7)) & 0xff;
  int x = pattern ^ rotated, count = 0;
  while (x) {
    x &= x - 1;
    ++count;
  }
  return count;
}

}  // namespace detail

/// Bin for an 8-bit LBP code: uniform patterns (at most 2 circular
/// transitions) get dedicated bins 0..57 in increasing code order; all
/// non-uniform patterns share bin 58.
inline int lbp_uniform_bin(int pattern) {
  static const std::array<int, 256> table = [] {
    std::array<int, 256> t{};
    int next = 0;
    for (int p = 0; p < 256; ++p)
      t[p] = detail::circular_transitions(p) <= 2 ? next++ : -1;
    for (int p = 0; p < 256; ++p)
      if (t[p] < 0) t[p] = kLbpDim - 1;
    return t;
  }();
  return table[pattern];
}

/// 59-bin uniform LBP histogram, radius 1, 8 neighbors ordered clockwise from
/// the top-left, bit i set iff neighbor_i >= center. Normalized to sum 1.
inline std::vector<double> uniform_lbp_histogram(const GrayImage& img) {
  if (img.width < 3 || img.height < 3)
    throw std::invalid_argument("uniform_lbp_histogram: image must be at least 3x3");
  static constexpr int kDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  static constexpr int kDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  std::vector<double> hist(kLbpDim, 0.0);
  for (int y = 1; y + 1 < img.height; ++y)
    for (int x = 1; x + 1 < img.width; ++x) {
      const double center = img.at(x, y);
      int pattern = 0;
      for (int i = 0; i < 8; ++i)
        if (img.at(x + kDx[i], y + kDy[i]) >= center) pattern |= 1 << i;
      hist[lbp_uniform_bin(pattern)] += 1.0;
    }
  const double total = static_cast<double>(img.width - 2) * (img.height - 2);
  for (auto& v : hist) v /= total;
  return hist;
}

namespace detail {

inline GrayImage gaussian_blur_3x3(const GrayImage& img, double sigma) {
  double k[3];
  double sum = 0;
  for (int i = -1; i <= 1; ++i) {
    k[i + 1] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + 1];
  }
  for (double& v : k) v /= sum;
  GrayImage tmp(img.width, img.height), out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0;
      for (int i = -1; i <= 1; ++i)
        acc += k[i + 1] * img.at(std::clamp(x + i, 0, img.width - 1), y);
      tmp.at(x, y) = acc;
    }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double acc = 0;
      for (int i = -1; i <= 1; ++i)
        acc += k[i + 1] * tmp.at(x, std::clamp(y + i, 0, img.height - 1));
      out.at(x, y) = acc;
    }
  return out;
}

// Sobel gradient magnitude over the interior; border stays zero.
inline GrayImage sobel_magnitude(const GrayImage& img) {
  GrayImage out(img.width, img.height);
  for (int y = 1; y + 1 < img.height; ++y)
    for (int x = 1; x + 1 < img.width; ++x) {
      const double gx = img.at(x + 1, y - 1) + 2 * img.at(x + 1, y) + img.at(x + 1, y + 1) -
                        img.at(x - 1, y - 1) - 2 * img.at(x - 1, y) - img.at(x - 1, y + 1);
      const double gy = img.at(x - 1, y + 1) + 2 * img.at(x, y + 1) + img.at(x + 1, y + 1) -
                        img.at(x - 1, y - 1) - 2 * img.at(x, y - 1) - img.at(x + 1, y - 1);
      out.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  return out;
}

}  // namespace detail

constexpr double kPsnrCap = 100.0;  // dB, identical images

/// Reduced image-quality measure set: ten full-reference measures between the
/// gray image I and its 3x3 Gaussian blur (sigma 1.17), then sharpness,
/// per-channel means and standard deviations, and colorfulness.
///
/// Index map: 0 mse, 1 psnr, 2 snr, 3 max_diff, 4 avg_diff, 5 nae, 6 sc,
/// 7 nxc, 8 mas, 9 ted, 10 laplacian_var, 11-13 channel means,
/// 14-16 channel stds, 17 colorfulness.
inline std::vector<double> iqm_features(const Image& img) {
  const GrayImage gray = to_grayscale(img);
  const GrayImage blur = detail::gaussian_blur_3x3(gray, 1.17);
  const size_t n = gray.data.size();

  double se = 0, sig = 0, sig_blur = 0, cross = 0, abs_diff = 0, abs_sig = 0, sum_diff = 0,
         max_diff = 0;
  for (size_t i = 0; i < n; ++i) {
    const double a = gray.data[i], b = blur.data[i], d = a - b;
    se += d * d;
    sig += a * a;
    sig_blur += b * b;
    cross += a * b;
    abs_diff += std::abs(d);
    abs_sig += std::abs(a);
    sum_diff += d;
    max_diff = std::max(max_diff, std::abs(d));
  }
  const double mse = se / n;

  std::vector<double> f(kIqmDim, 0.0);
  f[0] = mse;
  f[1] = mse > 0 ? std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse)) : kPsnrCap;
  f[2] = se > 0 ? std::clamp(10.0 * std::log10(std::max(sig, 1e-30) / se), -kPsnrCap, kPsnrCap)
                : kPsnrCap;
  f[3] = max_diff;
  f[4] = sum_diff / n;
  f[5] = abs_diff / std::max(abs_sig, 1e-12);
  f[6] = sig / std::max(sig_blur, 1e-12);
  f[7] = se > 0 ? cross / std::max(sig, 1e-12) : 1.0;

  double angle_sum = 0;
  for (int y = 0; y < gray.height; ++y) {
    double aa = 0, bb = 0, ab = 0;
    for (int x = 0; x < gray.width; ++x) {
      const double a = gray.at(x, y), b = blur.at(x, y);
      aa += a * a;
      bb += b * b;
      ab += a * b;
    }
    if (aa == 0 && bb == 0) continue;  // both zero rows agree, angle 0
    if (aa == 0 || bb == 0) {
      angle_sum += M_PI / 2;
      continue;
    }
    angle_sum += std::acos(std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0));
  }
  f[8] = 1.0 - (2.0 / M_PI) * (angle_sum / gray.height);

  const GrayImage edge_a = detail::sobel_magnitude(gray);
  const GrayImage edge_b = detail::sobel_magnitude(blur);
  double ted = 0;
  int interior = 0;
  for (int y = 1; y + 1 < gray.height; ++y)
    for (int x = 1; x + 1 < gray.width; ++x) {
      ted += std::abs(edge_a.at(x, y) - edge_b.at(x, y));
      ++interior;
    }
  f[9] = interior > 0 ? ted / interior : 0.0;

  double lap_sum = 0, lap_sq = 0;
  for (int y = 1; y + 1 < gray.height; ++y)
    for (int x = 1; x + 1 < gray.width; ++x) {
      const double lap = gray.at(x, y - 1) + gray.at(x, y + 1) + gray.at(x - 1, y) +
                         gray.at(x + 1, y) - 4 * gray.at(x, y);
      lap_sum += lap;
      lap_sq += lap * lap;
    }
  if (interior > 0) {
    const double lap_mean = lap_sum / interior;
    f[10] = lap_sq / interior - lap_mean * lap_mean;
  }

  const size_t pixels = static_cast<size_t>(img.width) * img.height;
  for (int c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (size_t i = 0; i < pixels; ++i) {
      const double v = img.data[i * 3 + c];
      sum += v;
      sq += v * v;
    }
    const double mean = sum / pixels;
    f[11 + c] = mean;
    f[14 + c] = std::sqrt(std::max(0.0, sq / pixels - mean * mean));
  }

  double rg_sum = 0, rg_sq = 0, yb_sum = 0, yb_sq = 0;
  for (size_t i = 0; i < pixels; ++i) {
    const double r = img.data[i * 3 + 0], g = img.data[i * 3 + 1], b = img.data[i * 3 + 2];
    const double rg = r - g;
    const double yb = 0.5 * (r + g) - b;
    rg_sum += rg;
    rg_sq += rg * rg;
    yb_sum += yb;
    yb_sq += yb * yb;
  }
  const double rg_mean = rg_sum / pixels, yb_mean = yb_sum / pixels;
  const double rg_var = std::max(0.0, rg_sq / pixels - rg_mean * rg_mean);
  const double yb_var = std::max(0.0, yb_sq / pixels - yb_mean * yb_mean);
  f[17] = std::sqrt(rg_var + yb_var) +
          0.3 * std::sqrt(rg_mean * rg_mean + yb_mean * yb_mean);
  return f;
}

/// Logistic regression with per-dimension standardization frozen from the
/// training features.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// Full-batch gradient descent on mean logistic loss + l2*||w||^2, weights and
/// bias starting at zero. Labels are 1 for bonafide, 0 for attack.
inline LinearModel linear_train(const std::vector<std::vector<double>>& features,
                                const std::vector<int>& labels, double l2, int epochs, double lr,
                                uint64_t seed) {
  (void)seed;  // zero init and full-batch descent leave nothing to draw
  if (features.empty() || features.size() != labels.size())
    throw std::invalid_argument("linear_train: features/labels size mismatch");
  const size_t dim = features[0].size();
  for (const auto& f : features)
    if (f.size() != dim) throw std::invalid_argument("linear_train: inconsistent feature size");
  bool has0 = false, has1 = false;
  for (int y : labels) (y ? has1 : has0) = true;
  if (!has0 || !has1) throw std::invalid_argument("linear_train: both classes required");

  LinearModel model;
  model.mean.assign(dim, 0.0);
  model.stddev.assign(dim, 0.0);
  const double n = static_cast<double>(features.size());
  for (const auto& f : features)
    for (size_t d = 0; d < dim; ++d) model.mean[d] += f[d];
  for (auto& v : model.mean) v /= n;
  for (const auto& f : features)
    for (size_t d = 0; d < dim; ++d) {
      const double c = f[d] - model.mean[d];
      model.stddev[d] += c * c;
    }
  for (auto& v : model.stddev) v = std::sqrt(v / n);
  for (auto& v : model.stddev)
    if (v == 0.0) v = 1.0;  // constant dimensions pass through unscaled

  std::vector<std::vector<double>> z(features.size(), std::vector<double>(dim));
  for (size_t i = 0; i < features.size(); ++i)
    for (size_t d = 0; d < dim; ++d) z[i][d] = (features[i][d] - model.mean[d]) / model.stddev[d];

  model.weights.assign(dim, 0.0);
  std::vector<double> grad(dim);
  for (int e = 0; e < epochs; ++e) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
      double a = model.bias;
      for (size_t d = 0; d < dim; ++d) a += model.weights[d] * z[i][d];
      const double p = 1.0 / (1.0 + std::exp(-a));
      const double err = p - labels[i];
      for (size_t d = 0; d < dim; ++d) grad[d] += err * z[i][d];
      grad_b += err;
    }
    for (size_t d = 0; d < dim; ++d)
      model.weights[d] -= lr * (grad[d] / n + 2.0 * l2 * model.weights[d]);
    model.bias -= lr * grad_b / n;
  }
  return model;
}

inline double linear_score(const LinearModel& model, const std::vector<double>& feature) {
  if (feature.size() != model.weights.size())
    throw std::invalid_argument("linear_score: feature dimension " +
                                std::to_string(feature.size()) + " does not match model (" +
                                std::to_string(model.weights.size()) + ")");
  double a = model.bias;
  for (size_t d = 0; d < feature.size(); ++d)
    a += model.weights[d] * (feature[d] - model.mean[d]) / model.stddev[d];
  return 1.0 / (1.0 + std::exp(-a));
}

}  // namespace pixbis
