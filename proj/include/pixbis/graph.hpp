#pragma once

#include <functional>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pixbis/tensor.hpp"

namespace pixbis {

/// Tape of executed primitive operations. Operations are recorded in execution
/// order (which is a topological order by construction); backward replays the
/// tape in exact reverse. Gradients of every tensor on the tape are zeroed at
/// the start of each sweep, so sweeps never accumulate across forward passes.
template <class T>
class GraphT {
 public:
  void record(std::vector<TensorPtr<T>> inputs, TensorPtr<T> output,
              std::function<void()> backward_fn) {
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward_fn)});
  }

  size_t size() const { return nodes_.size(); }

  void backward(const TensorPtr<T>& loss) {
    if (!loss || loss->numel() != 1)
      throw std::invalid_argument("backward: loss must be a scalar tensor");
    size_t loss_index = nodes_.size();
    for (size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].output.get() == loss.get()) {
        loss_index = i;
        break;
      }
    }
    if (loss_index == nodes_.size())
      throw std::invalid_argument("backward: loss was not produced by a recorded operation");

    // Zero exactly the tensors on the tape; nothing outside the graph is touched.
    std::unordered_set<TensorT<T>*> seen;
    for (size_t i = 0; i <= loss_index; ++i) {
      for (const auto& t : nodes_[i].inputs)
        if (t && t->requires_grad && seen.insert(t.get()).second) t->zero_grad();
      const auto& out = nodes_[i].output;
      if (out && out->requires_grad && seen.insert(out.get()).second) out->zero_grad();
    }

    loss->grad.assign(1, T(1));
    for (size_t i = loss_index + 1; i-- > 0;) {
      if (nodes_[i].backward_fn && nodes_[i].output->requires_grad) nodes_[i].backward_fn();
    }
  }

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    std::vector<TensorPtr<T>> inputs;
    TensorPtr<T> output;
    std::function<void()> backward_fn;
  };
  std::vector<Node> nodes_;
};

using Graph = GraphT<float>;
using Tensor = TensorT<float>;

}  // namespace pixbis
