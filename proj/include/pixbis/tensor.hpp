#pragma once

#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pixbis {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

/// N-dimensional array with a gradient slot. Values are stored row-major.
/// `grad` stays empty until a backward sweep populates it.
template <class T>
struct TensorT {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;
  bool requires_grad = false;

  TensorT() = default;

  explicit TensorT(Shape s, bool rg = false) : shape(std::move(s)), requires_grad(rg) {
    validate_shape();
    values.assign(static_cast<size_t>(shape_numel(shape)), T(0));
  }

  TensorT(Shape s, std::vector<T> vals, bool rg = false)
      : shape(std::move(s)), values(std::move(vals)), requires_grad(rg) {
    validate_shape();
    if (shape_numel(shape) != static_cast<int64_t>(values.size()))
      throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                  std::to_string(values.size()) + " values");
  }

  int64_t numel() const { return static_cast<int64_t>(values.size()); }

  int dim(size_t i) const { return shape.at(i); }

  void zero_grad() { grad.assign(values.size(), T(0)); }

  bool has_grad() const { return grad.size() == values.size(); }

 private:
  void validate_shape() const {
    for (int d : shape)
      if (d <= 0)
        throw std::invalid_argument("tensor: non-positive extent in shape " + shape_str(shape));
  }
};

template <class T>
using TensorPtr = std::shared_ptr<TensorT<T>>;

template <class T>
TensorPtr<T> make_tensor(Shape s, bool requires_grad = false) {
  return std::make_shared<TensorT<T>>(std::move(s), requires_grad);
}

template <class T>
TensorPtr<T> make_tensor(Shape s, std::vector<T> vals, bool requires_grad = false) {
  return std::make_shared<TensorT<T>>(std::move(s), std::move(vals), requires_grad);
}

}  // namespace pixbis
