#include "sdt/ad/array.hpp"

namespace sdt::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Array::Array(Shape shape, double fill, bool requires_grad)
    : Array(shape, std::vector<double>(numel(shape), fill), requires_grad) {}

Array::Array(Shape shape, std::vector<double> data, bool requires_grad)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("array extents must be positive, got " + to_string(shape_));
  }
  if (data_.size() != numel(shape_)) {
    throw ShapeError("array of shape " + to_string(shape_) + " given " +
                     std::to_string(data_.size()) + " values");
  }
  set_requires_grad(requires_grad);
}

void Array::set_requires_grad(bool flag) {
  requires_grad_ = flag;
  if (flag) {
    grad_.assign(data_.size(), 0.0);
  } else {
    grad_.clear();
    grad_.shrink_to_fit();
  }
}

void Array::zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }

}  // namespace sdt::ad
