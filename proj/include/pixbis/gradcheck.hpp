#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pixbis/graph.hpp"
#include "pixbis/rng.hpp"
#include "pixbis/tensor.hpp"

namespace pixbis {

struct GradCheckReport {
  double max_rel_err = 0.0;
  int64_t coords_checked = 0;
  double step = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Central-difference verification of reverse-mode gradients, run in double
/// precision. `fn` must rebuild the computation from the current values of
/// `inputs` on every call and return a scalar loss. When `max_coords_per_input`
/// is positive, that many coordinates are sampled per input with `coord_rng`;
/// otherwise every coordinate is perturbed.
///
/// `zero_band` handles structurally zero gradients: when both the analytic and
/// numeric values are inside the band, they agree iff their difference also
/// stays inside it (the numeric side of a true zero is pure rounding noise of
/// order ulp(loss)/step, which the relative formula would otherwise magnify).
/// The default band of 0 keeps the strict relative formula everywhere.
template <class Fn>
GradCheckReport grad_check(Fn&& fn, const std::vector<TensorPtr<double>>& inputs, double step,
                           double tolerance, int64_t max_coords_per_input = -1,
                           Rng* coord_rng = nullptr, double zero_band = 0.0) {
  for (const auto& t : inputs) t->requires_grad = true;

  GraphT<double> graph;
  auto loss = fn(graph);
  graph.backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& t : inputs) analytic.push_back(t->grad);

  auto eval = [&](void) -> double {
    GraphT<double> g;
    return fn(g)->values[0];
  };

  GradCheckReport report;
  report.step = step;
  report.tolerance = tolerance;
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& t = *inputs[ti];
    std::vector<int64_t> coords;
    if (max_coords_per_input > 0 && t.numel() > max_coords_per_input) {
      for (int64_t i = 0; i < max_coords_per_input; ++i)
        coords.push_back(static_cast<int64_t>(
            coord_rng ? coord_rng->uniform_int(static_cast<uint64_t>(t.numel()))
                      : i * t.numel() / max_coords_per_input));
    } else {
      coords.resize(t.numel());
      for (int64_t i = 0; i < t.numel(); ++i) coords[i] = i;
    }
    for (int64_t i : coords) {
      const double saved = t.values[i];
      t.values[i] = saved + step;
      const double fplus = eval();
      t.values[i] = saved - step;
      const double fminus = eval();
      t.values[i] = saved;
      const double numeric = (fplus - fminus) / (2.0 * step);
      const double a = analytic[ti][i];
      double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (std::max(std::abs(a), std::abs(numeric)) <= zero_band &&
          std::abs(a - numeric) <= zero_band)
        rel = 0.0;
      report.max_rel_err = std::max(report.max_rel_err, rel);
      ++report.coords_checked;
    }
  }
  report.pass = report.max_rel_err <= tolerance;
  return report;
}

}  // namespace pixbis
