#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/tensor.hpp"

namespace pixbis {

/// Interleaved RGB image, values in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // size width*height*3, r g b per pixel

  Image() = default;
  Image(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0f) {}

  float& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }

  void clamp01() {
    for (auto& v : data) v = std::clamp(v, 0.0f, 1.0f);
  }
};

/// Binary PPM (P6, 8-bit) writer.
inline void write_ppm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i)
    bytes[i] = static_cast<unsigned char>(
        std::lround(std::clamp(img.data[i], 0.0f, 1.0f) * 255.0f));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

namespace detail {

inline int ppm_token(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comment lines per the PPM spec.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF) throw std::runtime_error("'" + path + "': truncated ppm header");
  int value = 0;
  bool digits = false;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + (c - '0');
    digits = true;
    c = in.get();
  }
  if (!digits) throw std::runtime_error("'" + path + "': malformed ppm header");
  return value;
}

}  // namespace detail

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '6')
    throw std::runtime_error("'" + path + "': not a binary ppm (P6)");
  const int w = detail::ppm_token(in, path);
  const int h = detail::ppm_token(in, path);
  const int maxval = detail::ppm_token(in, path);
  if (w <= 0 || h <= 0 || maxval != 255)
    throw std::runtime_error("'" + path + "': unsupported ppm dimensions or maxval");
  std::vector<unsigned char> bytes(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw std::runtime_error("'" + path + "': truncated pixel data");
  Image img(w, h);
  for (size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0f;
  return img;
}

inline Image center_crop_square(const Image& img) {
  const int side = std::min(img.width, img.height);
  const int x0 = (img.width - side) / 2;
  const int y0 = (img.height - side) / 2;
  if (side == img.width && side == img.height) return img;
  Image out(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
  return out;
}

/// Bilinear resize with half-pixel-centered sampling; identity when the size
/// already matches.
inline Image resize_bilinear(const Image& img, int w, int h) {
  if (img.width == w && img.height == h) return img;
  Image out(w, h);
  const float sx = static_cast<float>(img.width) / w;
  const float sy = static_cast<float>(img.height) / h;
  for (int y = 0; y < h; ++y) {
    const float fy = std::clamp((y + 0.5f) * sy - 0.5f, 0.0f, img.height - 1.0f);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      const float fx = std::clamp((x + 0.5f) * sx - 0.5f, 0.0f, img.width - 1.0f);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const float wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const float top = img.at(x0, y0, c) * (1 - wx) + img.at(x1, y0, c) * wx;
        const float bot = img.at(x0, y1, c) * (1 - wx) + img.at(x1, y1, c) * wx;
        out.at(x, y, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

/// Center-crop to the largest centered square, bilinear resize to the target,
/// and lay out as a [3,H,W] tensor in [0,1].
inline TensorT<float> preprocess(const Image& img, int target_h, int target_w) {
  if (img.width < 8 || img.height < 8)
    throw std::invalid_argument("preprocess: image smaller than 8x8");
  const Image resized = resize_bilinear(center_crop_square(img), target_w, target_h);
  TensorT<float> out({3, target_h, target_w});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < target_h; ++y)
      for (int x = 0; x < target_w; ++x)
        out.values[(static_cast<size_t>(c) * target_h + y) * target_w + x] =
            std::clamp(resized.at(x, y, c), 0.0f, 1.0f);
  return out;
}

}  // namespace pixbis
