#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixbis/tensor.hpp"

namespace pixbis {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

/// Adam moments, one pair of buffers per trainable parameter (same order as
/// the parameter list it was initialized from).
template <class T>
struct AdamStateT {
  AdamConfig config;
  int64_t step_count = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  void init(const std::vector<TensorPtr<T>>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p->values.size(), T(0));
      v.emplace_back(p->values.size(), T(0));
    }
    step_count = 0;
  }
};

/// One Adam update with bias correction. Weight decay is coupled L2: it is
/// added to the gradient before the moment updates.
template <class T>
void adam_step(const std::vector<TensorPtr<T>>& params, AdamStateT<T>& state) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: state not initialized for this parameter list");
  ++state.step_count;
  const T lr = static_cast<T>(state.config.lr);
  const T b1 = static_cast<T>(state.config.beta1);
  const T b2 = static_cast<T>(state.config.beta2);
  const T eps = static_cast<T>(state.config.eps);
  const T wd = static_cast<T>(state.config.weight_decay);
  const T corr1 = T(1) - static_cast<T>(std::pow(state.config.beta1,
                                                 static_cast<double>(state.step_count)));
  const T corr2 = T(1) - static_cast<T>(std::pow(state.config.beta2,
                                                 static_cast<double>(state.step_count)));

  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = *params[pi];
    if (!p.has_grad())
      throw std::invalid_argument("adam_step: parameter " + std::to_string(pi) +
                                  " has no gradient");
    auto& mp = state.m[pi];
    auto& vp = state.v[pi];
    for (size_t i = 0; i < p.values.size(); ++i) {
      const T g = p.grad[i] + wd * p.values[i];
      mp[i] = b1 * mp[i] + (T(1) - b1) * g;
      vp[i] = b2 * vp[i] + (T(1) - b2) * g * g;
      const T m_hat = mp[i] / corr1;
      const T v_hat = vp[i] / corr2;
      p.values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

using AdamState = AdamStateT<float>;

}  // namespace pixbis
