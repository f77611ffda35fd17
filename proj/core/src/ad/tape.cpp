#include "sdt/ad/tape.hpp"

#include <algorithm>
#include <cmath>

#ifdef SDT_HAVE_CBLAS
#include <cblas.h>
#endif

namespace sdt::ad {

namespace {

bool is_suffix(const Shape& small, const Shape& large) {
  if (small.size() > large.size()) return false;
  return std::equal(small.rbegin(), small.rend(), large.rbegin());
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + to_string(a) + " and " +
                   to_string(b));
}

std::size_t last_axis(const Shape& s, const char* op) {
  if (s.empty()) throw ShapeError(std::string(op) + ": needs at least one axis");
  return s.back();
}

}  // namespace

Var Tape::push(Shape shape, std::vector<double> value, bool needs_grad,
               std::function<void(Tape&, std::size_t)> backward) {
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const double* Tape::data(const Node& n) const {
  return n.param ? n.param->data().data() : n.value.data();
}

double* Tape::grad_buffer(Node& n) {
  if (n.param) return n.param->grad().data();
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad.data();
}

Var Tape::constant(Array value) {
  Shape shape = value.shape();
  return push(std::move(shape), std::move(value.data()), false);
}

Var Tape::constant(Shape shape, std::vector<double> data) {
  return constant(Array(std::move(shape), std::move(data)));
}

Var Tape::parameter(Array& param) {
  Node n;
  n.shape = param.shape();
  n.param = &param;
  n.needs_grad = param.requires_grad();
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Shape& Tape::shape(Var v) const { return node(v).shape; }

std::span<const double> Tape::value(Var v) const {
  const Node& n = node(v);
  return {data(n), numel(n.shape)};
}

double Tape::item(Var v) const {
  if (numel(shape(v)) != 1) throw ShapeError("item: shape " + to_string(shape(v)) + " is not a scalar");
  return value(v)[0];
}

std::span<const double> Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.param) return n.param->grad();
  if (n.grad.empty()) return {};
  return n.grad;
}

namespace {

// Visits (i, i mod na, i mod nb) for i < n where one of na, nb equals n and
// the other divides it, without per-element division.
template <typename F>
void tiled(std::size_t n, std::size_t na, std::size_t nb, F&& f) {
  if (na == nb) {
    for (std::size_t i = 0; i < n; ++i) f(i, i, i);
  } else if (na == n) {
    for (std::size_t r = 0; r < n; r += nb)
      for (std::size_t j = 0; j < nb; ++j) f(r + j, r + j, j);
  } else {
    for (std::size_t r = 0; r < n; r += na)
      for (std::size_t j = 0; j < na; ++j) f(r + j, j, r + j);
  }
}

}  // namespace

Var Tape::binary(Var a, Var b, const char* op, int kind) {
  const Shape sa = shape(a), sb = shape(b);
  const std::size_t na = numel(sa), nb = numel(sb);
  Shape out_shape;
  if (na >= nb && (nb == 1 || is_suffix(sb, sa))) {
    out_shape = sa;
  } else if (nb > na && (na == 1 || is_suffix(sa, sb))) {
    out_shape = sb;
  } else {
    mismatch(op, sa, sb);
  }
  const std::size_t n = numel(out_shape);
  const double* x = data(node(a));
  const double* y = data(node(b));
  std::vector<double> out(n);
  double* o = out.data();
  switch (kind) {
    case 0:
      tiled(n, na, nb, [&](std::size_t i, std::size_t p, std::size_t q) { o[i] = x[p] + y[q]; });
      break;
    case 1:
      tiled(n, na, nb, [&](std::size_t i, std::size_t p, std::size_t q) { o[i] = x[p] - y[q]; });
      break;
    default:
      tiled(n, na, nb, [&](std::size_t i, std::size_t p, std::size_t q) { o[i] = x[p] * y[q]; });
      break;
  }
  const std::size_t ia = a.id, ib = b.id;
  return push(std::move(out_shape), std::move(out), wants(a) || wants(b),
              [ia, ib, na, nb, n, kind](Tape& t, std::size_t self) {
                const double* g = t.nodes_[self].grad.data();
                if (t.nodes_[ia].needs_grad) {
                  double* ga = t.grad_buffer(t.nodes_[ia]);
                  if (kind == 2) {
                    const double* y = t.data(t.nodes_[ib]);
                    tiled(n, na, nb, [&](std::size_t i, std::size_t p, std::size_t q) { ga[p] += g[i] * y[q]; });
                  } else {
                    tiled(n, na, nb, [&](std::size_t i, std::size_t p, std::size_t) { ga[p] += g[i]; });
                  }
                }
                if (t.nodes_[ib].needs_grad) {
                  double* gb = t.grad_buffer(t.nodes_[ib]);
                  if (kind == 2) {
                    const double* x = t.data(t.nodes_[ia]);
                    tiled(n, na, nb, [&](std::size_t i, std::size_t p, std::size_t q) { gb[q] += g[i] * x[p]; });
                  } else if (kind == 1) {
                    tiled(n, na, nb, [&](std::size_t i, std::size_t, std::size_t q) { gb[q] -= g[i]; });
                  } else {
                    tiled(n, na, nb, [&](std::size_t i, std::size_t, std::size_t q) { gb[q] += g[i]; });
                  }
                }
              });
}

Var Tape::add(Var a, Var b) { return binary(a, b, "add", 0); }
Var Tape::sub(Var a, Var b) { return binary(a, b, "sub", 1); }
Var Tape::mul(Var a, Var b) { return binary(a, b, "mul", 2); }

Var Tape::scale(Var a, double c) {
  const auto x = value(a);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * c;
  const std::size_t ia = a.id;
  return push(shape(a), std::move(out), wants(a), [ia, c](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
  });
}

Var Tape::add_scalar(Var a, double c) {
  const auto x = value(a);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + c;
  const std::size_t ia = a.id;
  return push(shape(a), std::move(out), wants(a), [ia](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var Tape::matmul(Var a, Var b) {
  const Shape sa = shape(a), sb = shape(b);
  if (sa.size() < 2 || sb.size() < 2 || sa[sa.size() - 1] != sb[sb.size() - 2]) mismatch("matmul", sa, sb);
  const std::size_t m = sa[sa.size() - 2], k = sa.back(), n = sb.back();
  std::size_t batch = 1;
  bool shared_b = sb.size() == 2;
  if (shared_b) {
    // Fold the leading axes of a into its rows.
    batch = 1;
  } else {
    if (sa.size() != sb.size() || !std::equal(sa.begin(), sa.end() - 2, sb.begin())) mismatch("matmul", sa, sb);
    batch = numel(Shape(sa.begin(), sa.end() - 2));
  }
  const std::size_t rows = shared_b ? numel(sa) / k : m;
  Shape out_shape(sa.begin(), sa.end() - 1);
  out_shape.push_back(n);
  std::vector<double> out(numel(out_shape), 0.0);
  const double* x = data(node(a));
  const double* y = data(node(b));
  for (std::size_t bi = 0; bi < batch; ++bi) {
    const double* xb = x + bi * rows * k;
    const double* yb = shared_b ? y : y + bi * k * n;
    double* ob = out.data() + bi * rows * n;
#ifdef SDT_HAVE_CBLAS
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(rows), static_cast<int>(n),
                static_cast<int>(k), 1.0, xb, static_cast<int>(k), yb, static_cast<int>(n), 0.0, ob,
                static_cast<int>(n));
    continue;
#endif
    for (std::size_t i = 0; i < rows; ++i) {
      double* orow = ob + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double xv = xb[i * k + p];
        const double* yrow = yb + p * n;
        for (std::size_t j = 0; j < n; ++j) orow[j] += xv * yrow[j];
      }
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return push(std::move(out_shape), std::move(out), wants(a) || wants(b),
              [ia, ib, batch, rows, k, n, shared_b](Tape& t, std::size_t self) {
                const double* g = t.nodes_[self].grad.data();
                const bool want_a = t.nodes_[ia].needs_grad;
                const bool want_b = t.nodes_[ib].needs_grad;
                double* ga = want_a ? t.grad_buffer(t.nodes_[ia]) : nullptr;
                double* gb = want_b ? t.grad_buffer(t.nodes_[ib]) : nullptr;
                const double* x = t.data(t.nodes_[ia]);
                const double* y = t.data(t.nodes_[ib]);
                std::vector<double> yt;
                for (std::size_t bi = 0; bi < batch; ++bi) {
                  const double* xb = x + bi * rows * k;
                  const double* yb = shared_b ? y : y + bi * k * n;
                  const double* gbat = g + bi * rows * n;
#ifdef SDT_HAVE_CBLAS
                  const int ir = static_cast<int>(rows), ik = static_cast<int>(k), in = static_cast<int>(n);
                  if (want_a) {
                    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, ir, ik, in, 1.0, gbat, in, yb, in, 1.0,
                                ga + bi * rows * k, ik);
                  }
                  if (want_b) {
                    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, ik, in, ir, 1.0, xb, ik, gbat, in, 1.0,
                                shared_b ? gb : gb + bi * k * n, in);
                  }
                  continue;
#endif
                  if (want_a) {
                    // dA = dC B^T, accumulated row-wise against an explicit B^T.
                    yt.resize(k * n);
                    for (std::size_t p = 0; p < k; ++p)
                      for (std::size_t j = 0; j < n; ++j) yt[j * k + p] = yb[p * n + j];
                    double* gab = ga + bi * rows * k;
                    for (std::size_t i = 0; i < rows; ++i) {
                      const double* grow = gbat + i * n;
                      double* garow = gab + i * k;
                      for (std::size_t j = 0; j < n; ++j) {
                        const double gv = grow[j];
                        const double* ytrow = yt.data() + j * k;
                        for (std::size_t p = 0; p < k; ++p) garow[p] += gv * ytrow[p];
                      }
                    }
                  }
                  if (want_b) {
                    double* gbb = shared_b ? gb : gb + bi * k * n;
                    for (std::size_t i = 0; i < rows; ++i) {
                      const double* grow = gbat + i * n;
                      for (std::size_t p = 0; p < k; ++p) {
                        const double xv = xb[i * k + p];
                        double* grow_b = gbb + p * n;
                        for (std::size_t j = 0; j < n; ++j) grow_b[j] += xv * grow[j];
                      }
                    }
                  }
                }
              });
}

Var Tape::transpose(Var a) {
  const Shape sa = shape(a);
  if (sa.size() < 2) throw ShapeError("transpose: needs two axes, got " + to_string(sa));
  const std::size_t r = sa[sa.size() - 2], c = sa.back();
  const std::size_t batch = numel(sa) / (r * c);
  Shape out_shape = sa;
  std::swap(out_shape[sa.size() - 2], out_shape[sa.size() - 1]);
  const double* x = data(node(a));
  std::vector<double> out(numel(sa));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) out[b * r * c + j * r + i] = x[b * r * c + i * c + j];
    }
  }
  const std::size_t ia = a.id;
  return push(std::move(out_shape), std::move(out), wants(a), [ia, batch, r, c](Tape& t, std::size_t self) {
    const double* g = t.nodes_[self].grad.data();
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) ga[b * r * c + i * c + j] += g[b * r * c + j * r + i];
      }
    }
  });
}

Var Tape::reshape(Var a, Shape new_shape) {
  if (numel(new_shape) != numel(shape(a))) mismatch("reshape", shape(a), new_shape);
  const auto x = value(a);
  const std::size_t ia = a.id;
  return push(std::move(new_shape), std::vector<double>(x.begin(), x.end()), wants(a),
              [ia](Tape& t, std::size_t self) {
                const auto& g = t.nodes_[self].grad;
                double* ga = t.grad_buffer(t.nodes_[ia]);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
              });
}

Var Tape::slice(Var a, std::size_t begin, std::size_t end) {
  const Shape sa = shape(a);
  const std::size_t d = last_axis(sa, "slice");
  if (begin >= end || end > d) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for shape " + to_string(sa));
  }
  const std::size_t rows = numel(sa) / d, w = end - begin;
  Shape out_shape = sa;
  out_shape.back() = w;
  const double* x = data(node(a));
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x + r * d + begin, w, out.data() + r * w);
  const std::size_t ia = a.id;
  return push(std::move(out_shape), std::move(out), wants(a), [ia, rows, d, w, begin](Tape& t, std::size_t self) {
    const double* g = t.nodes_[self].grad.data();
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < w; ++j) ga[r * d + begin + j] += g[r * w + j];
    }
  });
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape first = shape(parts[0]);
  last_axis(first, "concat");
  const Shape lead(first.begin(), first.end() - 1);
  const std::size_t rows = numel(lead);
  std::vector<std::size_t> ids, widths;
  std::size_t total = 0;
  bool needs = false;
  for (const Var& p : parts) {
    const Shape& s = shape(p);
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      mismatch("concat", first, s);
    }
    ids.push_back(p.id);
    widths.push_back(s.back());
    total += s.back();
    needs = needs || wants(p);
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const double* x = data(nodes_[ids[k]]);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(x + r * widths[k], widths[k], out.data() + r * total + offset);
    offset += widths[k];
  }
  Shape out_shape = first;
  out_shape.back() = total;
  return push(std::move(out_shape), std::move(out), needs, [ids, widths, rows, total](Tape& t, std::size_t self) {
    const double* g = t.nodes_[self].grad.data();
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.nodes_[ids[k]].needs_grad) {
        double* gk = t.grad_buffer(t.nodes_[ids[k]]);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < widths[k]; ++j) gk[r * widths[k] + j] += g[r * total + offset + j];
        }
      }
      offset += widths[k];
    }
  });
}

Var Tape::tanh(Var a) {
  const auto x = value(a);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  const std::size_t ia = a.id;
  return push(shape(a), std::move(out), wants(a), [ia](Tape& t, std::size_t self) {
    const Node& n = t.nodes_[self];
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * (1.0 - n.value[i] * n.value[i]);
  });
}

Var Tape::exp(Var a) {
  const auto x = value(a);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]);
  const std::size_t ia = a.id;
  return push(shape(a), std::move(out), wants(a), [ia](Tape& t, std::size_t self) {
    const Node& n = t.nodes_[self];
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga[i] += n.grad[i] * n.value[i];
  });
}

Var Tape::log(Var a) {
  const auto x = value(a);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::log(x[i]);
  const std::size_t ia = a.id;
  return push(shape(a), std::move(out), wants(a), [ia](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    const double* x = t.data(t.nodes_[ia]);
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

Var Tape::softmax(Var a) {
  const Shape sa = shape(a);
  const std::size_t d = last_axis(sa, "softmax"), rows = numel(sa) / d;
  const double* x = data(node(a));
  std::vector<double> out(numel(sa));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * d;
    double* o = out.data() + r * d;
    const double mx = *std::max_element(xr, xr + d);
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) total += (o[j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < d; ++j) o[j] /= total;
  }
  const std::size_t ia = a.id;
  return push(sa, std::move(out), wants(a), [ia, rows, d](Tape& t, std::size_t self) {
    const Node& n = t.nodes_[self];
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * d;
      const double* g = n.grad.data() + r * d;
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < d; ++j) ga[r * d + j] += y[j] * (g[j] - dot);
    }
  });
}

Var Tape::layer_norm(Var a, double eps) {
  const Shape sa = shape(a);
  const std::size_t d = last_axis(sa, "layer_norm"), rows = numel(sa) / d;
  const double* x = data(node(a));
  std::vector<double> out(numel(sa));
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = (xr[j] - mean) * inv_std[r];
  }
  const std::size_t ia = a.id;
  return push(sa, std::move(out), wants(a), [ia, rows, d, inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
    const Node& n = t.nodes_[self];
    double* ga = t.grad_buffer(t.nodes_[ia]);
    const double inv_d = 1.0 / static_cast<double>(d);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = n.value.data() + r * d;
      const double* g = n.grad.data() + r * d;
      double g_mean = 0.0, gy_mean = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        g_mean += g[j];
        gy_mean += g[j] * y[j];
      }
      g_mean *= inv_d;
      gy_mean *= inv_d;
      for (std::size_t j = 0; j < d; ++j) ga[r * d + j] += inv_std[r] * (g[j] - g_mean - y[j] * gy_mean);
    }
  });
}

Var Tape::gather(Var table, std::vector<std::size_t> indices, Shape index_shape) {
  const Shape st = shape(table);
  if (st.size() != 2) throw ShapeError("gather: table must be 2-D, got " + to_string(st));
  if (numel(index_shape) != indices.size()) {
    throw ShapeError("gather: " + std::to_string(indices.size()) + " indices for index shape " +
                     to_string(index_shape));
  }
  const std::size_t rows = st[0], d = st[1];
  for (auto i : indices) {
    if (i >= rows) {
      throw ShapeError("gather: index " + std::to_string(i) + " out of range for table " + to_string(st));
    }
  }
  const double* x = data(node(table));
  std::vector<double> out(indices.size() * d);
  for (std::size_t k = 0; k < indices.size(); ++k) std::copy_n(x + indices[k] * d, d, out.data() + k * d);
  Shape out_shape = std::move(index_shape);
  out_shape.push_back(d);
  const std::size_t it = table.id;
  return push(std::move(out_shape), std::move(out), wants(table),
              [it, d, indices = std::move(indices)](Tape& t, std::size_t self) {
                const double* g = t.nodes_[self].grad.data();
                double* gt = t.grad_buffer(t.nodes_[it]);
                for (std::size_t k = 0; k < indices.size(); ++k) {
                  for (std::size_t j = 0; j < d; ++j) gt[indices[k] * d + j] += g[k * d + j];
                }
              });
}

Var Tape::masked_fill(Var a, std::vector<std::uint8_t> mask, double value) {
  const Shape sa = shape(a);
  const std::size_t n = numel(sa), nm = mask.size();
  if (nm == 0 || n % nm != 0) {
    throw ShapeError("masked_fill: mask of " + std::to_string(nm) + " entries does not tile shape " +
                     to_string(sa));
  }
  const double* x = data(node(a));
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; r += nm)
    for (std::size_t j = 0; j < nm; ++j) out[r + j] = mask[j] ? value : x[r + j];
  const std::size_t ia = a.id;
  return push(sa, std::move(out), wants(a), [ia, nm, mask = std::move(mask)](Tape& t, std::size_t self) {
    const auto& g = t.nodes_[self].grad;
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t r = 0; r < g.size(); r += nm)
      for (std::size_t j = 0; j < nm; ++j)
        if (!mask[j]) ga[r + j] += g[r + j];
  });
}

Var Tape::sum(Var a) {
  const auto x = value(a);
  double total = 0.0;
  for (double v : x) total += v;
  const std::size_t ia = a.id;
  return push({1}, {total}, wants(a), [ia](Tape& t, std::size_t self) {
    const double g = t.nodes_[self].grad[0];
    Node& A = t.nodes_[ia];
    double* ga = t.grad_buffer(A);
    const std::size_t n = numel(A.shape);
    for (std::size_t i = 0; i < n; ++i) ga[i] += g;
  });
}

Var Tape::mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(numel(shape(a)))); }

Var Tape::sum_last(Var a) {
  const Shape sa = shape(a);
  const std::size_t d = last_axis(sa, "sum_last"), rows = numel(sa) / d;
  const double* x = data(node(a));
  std::vector<double> out(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) out[r] += x[r * d + j];
  }
  Shape out_shape(sa.begin(), sa.end() - 1);
  if (out_shape.empty()) out_shape.push_back(1);
  const std::size_t ia = a.id;
  return push(std::move(out_shape), std::move(out), wants(a), [ia, rows, d](Tape& t, std::size_t self) {
    const double* g = t.nodes_[self].grad.data();
    double* ga = t.grad_buffer(t.nodes_[ia]);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < d; ++j) ga[r * d + j] += g[r];
    }
  });
}

void Tape::backward(Var out) {
  if (numel(shape(out)) != 1) {
    throw ShapeError("backward: target shape " + to_string(shape(out)) + " is not a scalar");
  }
  for (auto& n : nodes_) {
    if (!n.param) n.grad.clear();
  }
  if (!node(out).needs_grad) return;
  grad_buffer(node(out))[0] += 1.0;
  for (std::size_t i = out.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

}  // namespace sdt::ad
