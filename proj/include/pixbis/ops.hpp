#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/graph.hpp"
#include "pixbis/tensor.hpp"

namespace pixbis {

enum class PoolKind { kMax, kAvg };
enum class Activation { kRelu, kSigmoid };

namespace detail {

// c[m][p] += a[m][k] * b[k][p]
template <class T>
void mm_nn(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t p) {
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * p;
    for (int64_t kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      const T* brow = b + kk * p;
      for (int64_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m][p] += a[k][m]^T * b[k][p]
template <class T>
void mm_tn(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t p) {
  for (int64_t kk = 0; kk < k; ++kk) {
    const T* arow = a + kk * m;
    const T* brow = b + kk * p;
    for (int64_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + i * p;
      for (int64_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

// c[m][p] += a[m][k] * b[p][k]^T
template <class T>
void mm_nt(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t p) {
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * p;
    for (int64_t j = 0; j < p; ++j) {
      const T* brow = b + j * k;
      T acc = 0;
      for (int64_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] += acc;
    }
  }
}

// Unfolds one sample [C,H,W] into col[(c*kh+ky)*kw+kx][oy*ow+ox]; out-of-range
// cells (padding) become zero.
template <class T>
void im2col(const T* src, int c_in, int h, int w, int kh, int kw, int stride, int pad, int oh,
            int ow, T* col) {
  const int64_t plane = static_cast<int64_t>(oh) * ow;
  for (int c = 0; c < c_in; ++c) {
    const T* srcc = src + static_cast<int64_t>(c) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        T* row = col + ((static_cast<int64_t>(c) * kh + ky) * kw + kx) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            for (int ox = 0; ox < ow; ++ox) row[oy * ow + ox] = T(0);
            continue;
          }
          const T* srow = srcc + static_cast<int64_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            row[oy * ow + ox] = (ix < 0 || ix >= w) ? T(0) : srow[ix];
          }
        }
      }
    }
  }
}

// Scatter-add of a col buffer back onto one sample's gradient.
template <class T>
void col2im_add(const T* col, int c_in, int h, int w, int kh, int kw, int stride, int pad, int oh,
                int ow, T* dst) {
  const int64_t plane = static_cast<int64_t>(oh) * ow;
  for (int c = 0; c < c_in; ++c) {
    T* dstc = dst + static_cast<int64_t>(c) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const T* row = col + ((static_cast<int64_t>(c) * kh + ky) * kw + kx) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          T* drow = dstc + static_cast<int64_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) drow[ix] += row[oy * ow + ox];
          }
        }
      }
    }
  }
}

template <class T>
T sigmoid_scalar(T x) {
  if (x >= T(0)) {
    const T e = std::exp(-x);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <class T>
bool any_requires_grad(const std::vector<TensorPtr<T>>& ts) {
  for (const auto& t : ts)
    if (t && t->requires_grad) return true;
  return false;
}

inline int out_extent(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace detail

/// 2-D cross-correlation. input [N,C,H,W], weight [F,C,kh,kw], bias [F] or null.
template <class T>
TensorPtr<T> conv2d(GraphT<T>& g, const TensorPtr<T>& input, const TensorPtr<T>& weight,
                    const TensorPtr<T>& bias, int stride, int padding) {
  if (input->shape.size() != 4) throw std::invalid_argument("conv2d: input must be 4-d");
  if (weight->shape.size() != 4) throw std::invalid_argument("conv2d: weight must be 4-d");
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("conv2d: padding must be >= 0");
  const int n = input->shape[0], c = input->shape[1], h = input->shape[2], w = input->shape[3];
  const int f = weight->shape[0], kh = weight->shape[2], kw = weight->shape[3];
  if (weight->shape[1] != c)
    throw std::invalid_argument("conv2d: input channels (" + std::to_string(c) +
                                ") do not match weight channels (" +
                                std::to_string(weight->shape[1]) + ")");
  if (h + 2 * padding < kh || w + 2 * padding < kw)
    throw std::invalid_argument("conv2d: kernel window exceeds padded input extent");
  if (bias && bias->numel() != f)
    throw std::invalid_argument("conv2d: bias size does not match output channels");

  const int oh = detail::out_extent(h, kh, stride, padding);
  const int ow = detail::out_extent(w, kw, stride, padding);
  const int64_t krows = static_cast<int64_t>(c) * kh * kw;
  const int64_t plane = static_cast<int64_t>(oh) * ow;

  auto out = make_tensor<T>({n, f, oh, ow});
  std::vector<T> col(krows * plane);
  for (int s = 0; s < n; ++s) {
    detail::im2col(input->values.data() + static_cast<int64_t>(s) * c * h * w, c, h, w, kh, kw,
                   stride, padding, oh, ow, col.data());
    detail::mm_nn(weight->values.data(), col.data(),
                  out->values.data() + static_cast<int64_t>(s) * f * plane, f, krows, plane);
  }
  if (bias) {
    for (int s = 0; s < n; ++s)
      for (int fc = 0; fc < f; ++fc) {
        T* orow = out->values.data() + (static_cast<int64_t>(s) * f + fc) * plane;
        const T b = bias->values[fc];
        for (int64_t i = 0; i < plane; ++i) orow[i] += b;
      }
  }

  std::vector<TensorPtr<T>> inputs{input, weight};
  if (bias) inputs.push_back(bias);
  out->requires_grad = detail::any_requires_grad(inputs);
  g.record(inputs, out, [input, weight, bias, out, stride, padding, n, c, h, w, f, kh, kw, oh,
                         ow, krows, plane]() {
    std::vector<T> col(krows * plane);
    std::vector<T> dcol;
    const bool need_dinput = input->requires_grad;
    if (need_dinput) dcol.resize(krows * plane);
    for (int s = 0; s < n; ++s) {
      const T* dout = out->grad.data() + static_cast<int64_t>(s) * f * plane;
      detail::im2col(input->values.data() + static_cast<int64_t>(s) * c * h * w, c, h, w, kh, kw,
                     stride, padding, oh, ow, col.data());
      if (weight->requires_grad)
        detail::mm_nt(dout, col.data(), weight->grad.data(), f, plane, krows);
      if (need_dinput) {
        std::fill(dcol.begin(), dcol.end(), T(0));
        detail::mm_tn(weight->values.data(), dout, dcol.data(), krows, f, plane);
        detail::col2im_add(dcol.data(), c, h, w, kh, kw, stride, padding, oh, ow,
                           input->grad.data() + static_cast<int64_t>(s) * c * h * w);
      }
      if (bias && bias->requires_grad) {
        for (int fc = 0; fc < f; ++fc) {
          T acc = 0;
          const T* drow = dout + static_cast<int64_t>(fc) * plane;
          for (int64_t i = 0; i < plane; ++i) acc += drow[i];
          bias->grad[fc] += acc;
        }
      }
    }
  });
  return out;
}

template <class T>
TensorPtr<T> conv2d(GraphT<T>& g, const TensorPtr<T>& input, const TensorPtr<T>& weight,
                    std::nullptr_t, int stride, int padding) {
  return conv2d(g, input, weight, TensorPtr<T>{}, stride, padding);
}

/// Batch normalization over [N,C,H,W]. Train mode normalizes with batch
/// statistics and updates the running buffers in place by EMA; eval mode
/// normalizes with the running buffers.
template <class T>
TensorPtr<T> batchnorm2d(GraphT<T>& g, const TensorPtr<T>& input, const TensorPtr<T>& gamma,
                         const TensorPtr<T>& beta, const TensorPtr<T>& running_mean,
                         const TensorPtr<T>& running_var, bool train_mode, T eps, T momentum) {
  if (input->shape.size() != 4) throw std::invalid_argument("batchnorm2d: input must be 4-d");
  if (!(eps > T(0))) throw std::invalid_argument("batchnorm2d: eps must be > 0");
  const int n = input->shape[0], c = input->shape[1], h = input->shape[2], w = input->shape[3];
  if (gamma->numel() != c || beta->numel() != c || running_mean->numel() != c ||
      running_var->numel() != c)
    throw std::invalid_argument("batchnorm2d: parameter sizes do not match channel count");

  const int64_t m = static_cast<int64_t>(n) * h * w;
  const int64_t plane = static_cast<int64_t>(h) * w;
  auto out = make_tensor<T>(input->shape);
  std::vector<T> mean(c), invstd(c);

  if (train_mode) {
    for (int ch = 0; ch < c; ++ch) {
      T sum = 0;
      for (int s = 0; s < n; ++s) {
        const T* src = input->values.data() + (static_cast<int64_t>(s) * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) sum += src[i];
      }
      const T mu = sum / static_cast<T>(m);
      T var = 0;
      for (int s = 0; s < n; ++s) {
        const T* src = input->values.data() + (static_cast<int64_t>(s) * c + ch) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          const T d = src[i] - mu;
          var += d * d;
        }
      }
      var /= static_cast<T>(m);
      mean[ch] = mu;
      invstd[ch] = T(1) / std::sqrt(var + eps);
      const T var_unbiased = m > 1 ? var * static_cast<T>(m) / static_cast<T>(m - 1) : var;
      running_mean->values[ch] = (T(1) - momentum) * running_mean->values[ch] + momentum * mu;
      running_var->values[ch] =
          (T(1) - momentum) * running_var->values[ch] + momentum * var_unbiased;
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean[ch] = running_mean->values[ch];
      invstd[ch] = T(1) / std::sqrt(running_var->values[ch] + eps);
    }
  }

  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch) {
      const T* src = input->values.data() + (static_cast<int64_t>(s) * c + ch) * plane;
      T* dst = out->values.data() + (static_cast<int64_t>(s) * c + ch) * plane;
      const T mu = mean[ch], is = invstd[ch], ga = gamma->values[ch], be = beta->values[ch];
      for (int64_t i = 0; i < plane; ++i) dst[i] = ga * (src[i] - mu) * is + be;
    }

  std::vector<TensorPtr<T>> inputs{input, gamma, beta};
  out->requires_grad = detail::any_requires_grad(inputs);
  g.record(inputs, out,
           [input, gamma, beta, out, mean, invstd, train_mode, n, c, plane, m]() {
             for (int ch = 0; ch < c; ++ch) {
               const T mu = mean[ch], is = invstd[ch], ga = gamma->values[ch];
               T sum_dy = 0, sum_dy_xhat = 0;
               for (int s = 0; s < n; ++s) {
                 const int64_t off = (static_cast<int64_t>(s) * c + ch) * plane;
                 const T* dy = out->grad.data() + off;
                 const T* x = input->values.data() + off;
                 for (int64_t i = 0; i < plane; ++i) {
                   sum_dy += dy[i];
                   sum_dy_xhat += dy[i] * (x[i] - mu) * is;
                 }
               }
               if (gamma->requires_grad) gamma->grad[ch] += sum_dy_xhat;
               if (beta->requires_grad) beta->grad[ch] += sum_dy;
               if (!input->requires_grad) continue;
               if (train_mode) {
                 const T scale = ga * is / static_cast<T>(m);
                 for (int s = 0; s < n; ++s) {
                   const int64_t off = (static_cast<int64_t>(s) * c + ch) * plane;
                   const T* dy = out->grad.data() + off;
                   const T* x = input->values.data() + off;
                   T* dx = input->grad.data() + off;
                   for (int64_t i = 0; i < plane; ++i) {
                     const T xhat = (x[i] - mu) * is;
                     dx[i] += scale * (static_cast<T>(m) * dy[i] - sum_dy - xhat * sum_dy_xhat);
                   }
                 }
               } else {
                 const T scale = ga * is;
                 for (int s = 0; s < n; ++s) {
                   const int64_t off = (static_cast<int64_t>(s) * c + ch) * plane;
                   const T* dy = out->grad.data() + off;
                   T* dx = input->grad.data() + off;
                   for (int64_t i = 0; i < plane; ++i) dx[i] += scale * dy[i];
                 }
               }
             }
           });
  return out;
}

/// Max / average pooling. Average pooling divides by k*k (padded cells count
/// as zeros); max pooling ignores padded cells and breaks ties by the first
/// occurrence in row-major scan order.
template <class T>
TensorPtr<T> pool2d(GraphT<T>& g, const TensorPtr<T>& input, PoolKind kind, int k, int stride,
                    int padding) {
  if (input->shape.size() != 4) throw std::invalid_argument("pool2d: input must be 4-d");
  if (k < 1) throw std::invalid_argument("pool2d: kernel size must be >= 1");
  if (stride < 1) throw std::invalid_argument("pool2d: stride must be >= 1");
  if (padding < 0 || padding >= k)
    throw std::invalid_argument("pool2d: padding must be in [0, k)");
  const int n = input->shape[0], c = input->shape[1], h = input->shape[2], w = input->shape[3];
  if (h + 2 * padding < k || w + 2 * padding < k)
    throw std::invalid_argument("pool2d: window exceeds padded input extent");

  const int oh = detail::out_extent(h, k, stride, padding);
  const int ow = detail::out_extent(w, k, stride, padding);
  auto out = make_tensor<T>({n, c, oh, ow});
  std::vector<int64_t> argmax;
  if (kind == PoolKind::kMax) argmax.assign(out->values.size(), -1);

  const int64_t in_plane = static_cast<int64_t>(h) * w;
  const int64_t out_plane = static_cast<int64_t>(oh) * ow;
  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch) {
      const T* src = input->values.data() + (static_cast<int64_t>(s) * c + ch) * in_plane;
      T* dst = out->values.data() + (static_cast<int64_t>(s) * c + ch) * out_plane;
      int64_t* amax =
          argmax.empty() ? nullptr : argmax.data() + (static_cast<int64_t>(s) * c + ch) * out_plane;
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          if (kind == PoolKind::kMax) {
            T best = -std::numeric_limits<T>::infinity();
            int64_t best_idx = -1;
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= w) continue;
                const T v = src[static_cast<int64_t>(iy) * w + ix];
                if (v > best) {
                  best = v;
                  best_idx = static_cast<int64_t>(iy) * w + ix;
                }
              }
            }
            dst[oy * ow + ox] = best;
            amax[oy * ow + ox] = best_idx;
          } else {
            T sum = 0;
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride - padding + ky;
              if (iy < 0 || iy >= h) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride - padding + kx;
                if (ix < 0 || ix >= w) continue;
                sum += src[static_cast<int64_t>(iy) * w + ix];
              }
            }
            dst[oy * ow + ox] = sum / static_cast<T>(k * k);
          }
        }
    }

  out->requires_grad = input->requires_grad;
  g.record({input}, out,
           [input, out, kind, k, stride, padding, n, c, h, w, oh, ow, in_plane, out_plane,
            argmax = std::move(argmax)]() {
             if (!input->requires_grad) return;
             for (int s = 0; s < n; ++s)
               for (int ch = 0; ch < c; ++ch) {
                 const int64_t ooff = (static_cast<int64_t>(s) * c + ch) * out_plane;
                 const int64_t ioff = (static_cast<int64_t>(s) * c + ch) * in_plane;
                 const T* dy = out->grad.data() + ooff;
                 T* dx = input->grad.data() + ioff;
                 if (kind == PoolKind::kMax) {
                   for (int64_t i = 0; i < out_plane; ++i)
                     if (argmax[ooff + i] >= 0) dx[argmax[ooff + i]] += dy[i];
                 } else {
                   const T inv = T(1) / static_cast<T>(k * k);
                   for (int oy = 0; oy < oh; ++oy)
                     for (int ox = 0; ox < ow; ++ox) {
                       const T gv = dy[oy * ow + ox] * inv;
                       for (int ky = 0; ky < k; ++ky) {
                         const int iy = oy * stride - padding + ky;
                         if (iy < 0 || iy >= h) continue;
                         for (int kx = 0; kx < k; ++kx) {
                           const int ix = ox * stride - padding + kx;
                           if (ix >= 0 && ix < w) dx[static_cast<int64_t>(iy) * w + ix] += gv;
                         }
                       }
                     }
                 }
               }
           });
  return out;
}

/// Elementwise activation. relu passes gradient where input > 0 (zero at
/// exactly 0); sigmoid uses p*(1-p).
template <class T>
TensorPtr<T> activation(GraphT<T>& g, const TensorPtr<T>& input, Activation kind) {
  auto out = make_tensor<T>(input->shape);
  const int64_t n = input->numel();
  if (kind == Activation::kRelu) {
    for (int64_t i = 0; i < n; ++i) out->values[i] = std::max(T(0), input->values[i]);
  } else {
    for (int64_t i = 0; i < n; ++i) out->values[i] = detail::sigmoid_scalar(input->values[i]);
  }
  out->requires_grad = input->requires_grad;
  g.record({input}, out, [input, out, kind, n]() {
    if (!input->requires_grad) return;
    if (kind == Activation::kRelu) {
      for (int64_t i = 0; i < n; ++i)
        if (input->values[i] > T(0)) input->grad[i] += out->grad[i];
    } else {
      for (int64_t i = 0; i < n; ++i) {
        const T p = out->values[i];
        input->grad[i] += out->grad[i] * p * (T(1) - p);
      }
    }
  });
  return out;
}

template <class T>
TensorPtr<T> relu(GraphT<T>& g, const TensorPtr<T>& x) {
  return activation(g, x, Activation::kRelu);
}

template <class T>
TensorPtr<T> sigmoid(GraphT<T>& g, const TensorPtr<T>& x) {
  return activation(g, x, Activation::kSigmoid);
}

/// Concatenates [N,Ci,H,W] tensors along the channel axis.
template <class T>
TensorPtr<T> concat_channels(GraphT<T>& g, const std::vector<TensorPtr<T>>& inputs) {
  if (inputs.empty()) throw std::invalid_argument("concat_channels: need at least one input");
  for (const auto& t : inputs)
    if (t->shape.size() != 4) throw std::invalid_argument("concat_channels: inputs must be 4-d");
  const int n = inputs[0]->shape[0], h = inputs[0]->shape[2], w = inputs[0]->shape[3];
  int total_c = 0;
  for (const auto& t : inputs) {
    if (t->shape[0] != n || t->shape[2] != h || t->shape[3] != w)
      throw std::invalid_argument("concat_channels: mismatched batch or spatial dims (" +
                                  shape_str(inputs[0]->shape) + " vs " + shape_str(t->shape) +
                                  ")");
    total_c += t->shape[1];
  }

  auto out = make_tensor<T>({n, total_c, h, w});
  const int64_t plane = static_cast<int64_t>(h) * w;
  for (int s = 0; s < n; ++s) {
    int coff = 0;
    for (const auto& t : inputs) {
      const int tc = t->shape[1];
      std::copy_n(t->values.data() + static_cast<int64_t>(s) * tc * plane, tc * plane,
                  out->values.data() + (static_cast<int64_t>(s) * total_c + coff) * plane);
      coff += tc;
    }
  }

  out->requires_grad = detail::any_requires_grad(inputs);
  g.record(inputs, out, [inputs, out, n, total_c, plane]() {
    for (int s = 0; s < n; ++s) {
      int coff = 0;
      for (const auto& t : inputs) {
        const int tc = t->shape[1];
        if (t->requires_grad) {
          const T* src = out->grad.data() + (static_cast<int64_t>(s) * total_c + coff) * plane;
          T* dst = t->grad.data() + static_cast<int64_t>(s) * tc * plane;
          for (int64_t i = 0; i < static_cast<int64_t>(tc) * plane; ++i) dst[i] += src[i];
        }
        coff += tc;
      }
    }
  });
  return out;
}

/// input [N,D] * weight [D,1] + bias [1] -> [N,1]
template <class T>
TensorPtr<T> affine(GraphT<T>& g, const TensorPtr<T>& input, const TensorPtr<T>& weight,
                    const TensorPtr<T>& bias) {
  if (input->shape.size() != 2) throw std::invalid_argument("affine: input must be 2-d");
  if (weight->shape.size() != 2 || weight->shape[1] != 1)
    throw std::invalid_argument("affine: weight must be [D,1]");
  if (input->shape[1] != weight->shape[0])
    throw std::invalid_argument("affine: inner dimensions disagree (" +
                                std::to_string(input->shape[1]) + " vs " +
                                std::to_string(weight->shape[0]) + ")");
  if (bias->numel() != 1) throw std::invalid_argument("affine: bias must be a single value");
  const int n = input->shape[0], d = input->shape[1];

  auto out = make_tensor<T>({n, 1});
  for (int s = 0; s < n; ++s) {
    T acc = bias->values[0];
    const T* row = input->values.data() + static_cast<int64_t>(s) * d;
    for (int i = 0; i < d; ++i) acc += row[i] * weight->values[i];
    out->values[s] = acc;
  }

  std::vector<TensorPtr<T>> inputs{input, weight, bias};
  out->requires_grad = detail::any_requires_grad(inputs);
  g.record(inputs, out, [input, weight, bias, out, n, d]() {
    for (int s = 0; s < n; ++s) {
      const T dy = out->grad[s];
      const T* row = input->values.data() + static_cast<int64_t>(s) * d;
      if (input->requires_grad) {
        T* drow = input->grad.data() + static_cast<int64_t>(s) * d;
        for (int i = 0; i < d; ++i) drow[i] += dy * weight->values[i];
      }
      if (weight->requires_grad)
        for (int i = 0; i < d; ++i) weight->grad[i] += dy * row[i];
      if (bias->requires_grad) bias->grad[0] += dy;
    }
  });
  return out;
}

/// Copy reshape; gradient flows through unchanged.
template <class T>
TensorPtr<T> reshape(GraphT<T>& g, const TensorPtr<T>& input, Shape new_shape) {
  if (shape_numel(new_shape) != input->numel())
    throw std::invalid_argument("reshape: element count mismatch (" + shape_str(input->shape) +
                                " -> " + shape_str(new_shape) + ")");
  auto out = make_tensor<T>(std::move(new_shape), input->values);
  out->requires_grad = input->requires_grad;
  g.record({input}, out, [input, out]() {
    if (!input->requires_grad) return;
    for (int64_t i = 0; i < input->numel(); ++i) input->grad[i] += out->grad[i];
  });
  return out;
}

template <class T>
TensorPtr<T> add(GraphT<T>& g, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  if (a->shape != b->shape) throw std::invalid_argument("add: shape mismatch");
  auto out = make_tensor<T>(a->shape);
  for (int64_t i = 0; i < a->numel(); ++i) out->values[i] = a->values[i] + b->values[i];
  out->requires_grad = a->requires_grad || b->requires_grad;
  g.record({a, b}, out, [a, b, out]() {
    for (int64_t i = 0; i < out->numel(); ++i) {
      if (a->requires_grad) a->grad[i] += out->grad[i];
      if (b->requires_grad) b->grad[i] += out->grad[i];
    }
  });
  return out;
}

template <class T>
TensorPtr<T> mul(GraphT<T>& g, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  if (a->shape != b->shape) throw std::invalid_argument("mul: shape mismatch");
  auto out = make_tensor<T>(a->shape);
  for (int64_t i = 0; i < a->numel(); ++i) out->values[i] = a->values[i] * b->values[i];
  out->requires_grad = a->requires_grad || b->requires_grad;
  g.record({a, b}, out, [a, b, out]() {
    for (int64_t i = 0; i < out->numel(); ++i) {
      if (a->requires_grad) a->grad[i] += out->grad[i] * b->values[i];
      if (b->requires_grad) b->grad[i] += out->grad[i] * a->values[i];
    }
  });
  return out;
}

template <class T>
TensorPtr<T> sum(GraphT<T>& g, const TensorPtr<T>& x) {
  auto out = make_tensor<T>({1});
  T acc = 0;
  for (const T v : x->values) acc += v;
  out->values[0] = acc;
  out->requires_grad = x->requires_grad;
  g.record({x}, out, [x, out]() {
    if (!x->requires_grad) return;
    for (int64_t i = 0; i < x->numel(); ++i) x->grad[i] += out->grad[0];
  });
  return out;
}

/// sum_i x_i * w_i as a scalar; the usual scalarizer for gradient checks.
template <class T>
TensorPtr<T> weighted_sum(GraphT<T>& g, const TensorPtr<T>& x, std::vector<T> weights) {
  if (static_cast<int64_t>(weights.size()) != x->numel())
    throw std::invalid_argument("weighted_sum: weight count mismatch");
  auto out = make_tensor<T>({1});
  T acc = 0;
  for (int64_t i = 0; i < x->numel(); ++i) acc += x->values[i] * weights[i];
  out->values[0] = acc;
  out->requires_grad = x->requires_grad;
  g.record({x}, out, [x, out, weights = std::move(weights)]() {
    if (!x->requires_grad) return;
    for (int64_t i = 0; i < x->numel(); ++i) x->grad[i] += out->grad[0] * weights[i];
  });
  return out;
}

}  // namespace pixbis
