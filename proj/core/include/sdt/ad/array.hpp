#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sdt/common/error.hpp"

namespace sdt::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

/// Dense row-major array of doubles. The gradient buffer exists exactly when
/// requires_grad() is set.
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0, bool requires_grad = false);
  Array(Shape shape, std::vector<double> data, bool requires_grad = false);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool flag);
  std::vector<double>& grad() { return grad_; }
  const std::vector<double>& grad() const { return grad_; }
  void zero_grad();

  friend bool operator==(const Array& a, const Array& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

}  // namespace sdt::ad
