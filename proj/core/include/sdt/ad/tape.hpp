#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sdt/ad/array.hpp"

namespace sdt::ad {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Records primitive operations in execution order; backward() replays them
/// in reverse, visiting each node once. Binary elementwise operations accept
/// equal shapes or an operand whose shape is a suffix of the other's (repeated
/// over the leading axes), including single-element operands.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Array value);
  Var constant(Shape shape, std::vector<double> data);
  /// Leaf bound to `param`; backward accumulates into param.grad() when the
  /// parameter requires a gradient. `param` must outlive the tape.
  Var parameter(Array& param);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);

  /// [..., m, k] x [..., k, n] with equal leading axes, or [..., m, k] x [k, n].
  Var matmul(Var a, Var b);
  /// Swaps the last two axes.
  Var transpose(Var a);
  Var reshape(Var a, Shape shape);
  /// Elements [begin, end) of the last axis.
  Var slice(Var a, std::size_t begin, std::size_t end);
  /// Concatenation along the last axis; leading axes must agree.
  Var concat(std::span<const Var> parts);

  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var softmax(Var a);
  /// (x - mean) / sqrt(var + eps) over the last axis, without affine terms.
  Var layer_norm(Var a, double eps = 1e-5);

  /// Rows of a [n, d] table; output shape is index_shape + [d].
  Var gather(Var table, std::vector<std::size_t> indices, Shape index_shape);
  /// Entries where mask is nonzero are replaced by `value`; the mask covers
  /// the trailing numel(mask) elements and repeats over leading axes.
  Var masked_fill(Var a, std::vector<std::uint8_t> mask, double value);

  Var sum(Var a);
  Var mean(Var a);
  /// Sum over the last axis.
  Var sum_last(Var a);

  const Shape& shape(Var v) const;
  std::span<const double> value(Var v) const;
  double item(Var v) const;
  /// Gradient of the last backward() target with respect to v (zeros when v
  /// does not influence it).
  std::span<const double> grad(Var v) const;

  /// Seeds d(out)/d(out) = 1 for a single-element `out` and accumulates
  /// gradients into every recorded node and bound parameter.
  void backward(Var out);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    Array* param = nullptr;
    bool needs_grad = false;
    std::function<void(Tape&, std::size_t)> backward;
  };

  Var push(Shape shape, std::vector<double> value, bool needs_grad,
           std::function<void(Tape&, std::size_t)> backward = {});
  Node& node(Var v) { return nodes_.at(v.id); }
  const Node& node(Var v) const { return nodes_.at(v.id); }
  const double* data(const Node& n) const;
  double* grad_buffer(Node& n);
  bool wants(Var v) const { return node(v).needs_grad; }

  Var binary(Var a, Var b, const char* op, int kind);

  std::vector<Node> nodes_;
};

}  // namespace sdt::ad
