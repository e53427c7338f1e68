// Copyright 2026 The sweepret Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sweepret/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "sweepret/kernels.hpp"

namespace sweepret {

using kernels::Trans;

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

template <typename T>
std::span<const T> Tape<T>::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return {n.borrowed ? n.borrowed : n.owned.data(), numel(n.shape)};
}

template <typename T>
Tensor<T> Tape<T>::value_tensor(Var<T> v) const {
  auto s = value(v.id);
  return Tensor<T>(shape(v.id), std::vector<T>(s.begin(), s.end()));
}

template <typename T>
Tensor<T> Tape<T>::grad_tensor(Var<T> v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Tensor<T>(n.shape);
  return Tensor<T>(n.shape, n.grad);
}

template <typename T>
std::string Tape<T>::next_name(const std::string& op) const {
  std::string name;
  for (const auto& s : scopes_) name += s + "/";
  return name + op + "#" + std::to_string(nodes_.size());
}

template <typename T>
std::vector<T>& Tape<T>::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(numel(n.shape), T(0));
  return n.grad;
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> t, std::string name) {
  Node n;
  n.name = next_name(name);
  n.shape = std::move(t.shape);
  n.requires_grad = grad_enabled_ && t.requires_grad;
  n.owned = std::move(t.data);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::parameter(Parameter<T>& p) {
  Node n;
  n.name = next_name(p.name);
  n.shape = p.value.shape;
  n.borrowed = p.value.data.data();
  n.requires_grad = grad_enabled_;
  n.sink = n.requires_grad ? &p : nullptr;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::emit(const std::string& op, Shape shape, std::vector<T> value,
                     std::initializer_list<Var<T>> parents, Backward backward) {
  Node n;
  n.name = next_name(op);
  n.shape = std::move(shape);
  n.owned = std::move(value);
  bool rg = false;
  for (const auto& p : parents) {
    if (p.valid() && nodes_[p.id].requires_grad) rg = true;
  }
  n.requires_grad = grad_enabled_ && rg;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) {
    throw Error(ErrorCode::kInvalidArgument, "backward", "loss belongs to another tape");
  }
  if (numel(shape(loss.id)) != 1) {
    throw Error(ErrorCode::kShapeMismatch, nodes_[loss.id].name,
                "backward needs a scalar loss, got shape " + shape_str(shape(loss.id)));
  }
  for (auto& n : nodes_) n.grad.clear();
  grad_buffer(loss.id)[0] = T(1);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, id);
  }
  for (auto& n : nodes_) {
    if (n.sink == nullptr || n.grad.empty()) continue;
    Parameter<T>& p = *n.sink;
    if (p.grad.shape != p.value.shape) p.zero_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad.data[i] += n.grad[i];
  }
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace {

template <typename T>
Tape<T>& common_tape(const std::string& op, Var<T> a, Var<T> b) {
  if (!a.valid() || !b.valid() || a.tape != b.tape) {
    throw Error(ErrorCode::kInvalidArgument, op, "operands must be bound to the same tape");
  }
  return *a.tape;
}

template <typename T>
void require_same_shape(const std::string& op, Var<T> a, Var<T> b) {
  Tape<T>& t = common_tape(op, a, b);
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShapeMismatch, t.next_name(op),
                "operand shapes differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename T>
void require_rank(const std::string& op, Var<T> a, std::size_t rank, const char* what) {
  if (a.shape().size() != rank) {
    throw Error(ErrorCode::kShapeMismatch, a.tape->next_name(op),
                std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                    shape_str(a.shape()));
  }
}

template <typename T>
std::vector<T> copy_value(Var<T> a) {
  auto s = a.value();
  return {s.begin(), s.end()};
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape("add", a, b);
  auto av = a.value(), bv = b.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.tape->emit("add", a.shape(), std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    auto g = t.grad(self);
    for (Var<T> v : {a, b}) {
      if (!t.requires_grad(v.id)) continue;
      auto& dv = t.grad_buffer(v.id);
      for (std::size_t i = 0; i < g.size(); ++i) dv[i] += g[i];
    }
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  require_same_shape("sub", a, b);
  auto av = a.value(), bv = b.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return a.tape->emit("sub", a.shape(), std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    auto g = t.grad(self);
    if (t.requires_grad(a.id)) {
      auto& da = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    }
    if (t.requires_grad(b.id)) {
      auto& db = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape("mul", a, b);
  auto av = a.value(), bv = b.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape->emit("mul", a.shape(), std::move(out), {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    auto g = t.grad(self);
    auto av = t.value(a.id), bv = t.value(b.id);
    if (t.requires_grad(a.id)) {
      auto& da = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b.id)) {
      auto& db = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  auto av = a.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * factor;
  return a.tape->emit("scale", a.shape(), std::move(out), {a},
                      [a, factor](Tape<T>& t, std::size_t self) {
                        auto g = t.grad(self);
                        auto& da = t.grad_buffer(a.id);
                        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * factor;
                      });
}

template <typename T>
Var<T> mul_const(Var<T> a, const Tensor<T>& c) {
  if (c.shape != a.shape()) {
    throw Error(ErrorCode::kShapeMismatch, a.tape->next_name("mul_const"),
                "constant shape " + shape_str(c.shape) + " vs operand " + shape_str(a.shape()));
  }
  auto av = a.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c.data[i];
  auto cv = std::make_shared<std::vector<T>>(c.data);
  return a.tape->emit("mul_const", a.shape(), std::move(out), {a},
                      [a, cv](Tape<T>& t, std::size_t self) {
                        auto g = t.grad(self);
                        auto& da = t.grad_buffer(a.id);
                        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * (*cv)[i];
                      });
}

template <typename T>
Var<T> relu(Var<T> a) {
  auto av = a.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > T(0) ? av[i] : T(0);
  return a.tape->emit("relu", a.shape(), std::move(out), {a}, [a](Tape<T>& t, std::size_t self) {
    auto g = t.grad(self);
    auto av = t.value(a.id);
    auto& da = t.grad_buffer(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > T(0)) da[i] += g[i];
    }
  });
}

template <typename T>
Var<T> normalize_rows(Var<T> a, T eps) {
  require_rank("normalize_rows", a, 2, "input");
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  auto av = a.value();
  auto inv = std::make_shared<std::vector<T>>(rows);
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < rows; ++i) {
    T ss = 0;
    for (std::size_t j = 0; j < cols; ++j) ss += av[i * cols + j] * av[i * cols + j];
    (*inv)[i] = T(1) / std::sqrt(ss + eps);
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = av[i * cols + j] * (*inv)[i];
  }
  return a.tape->emit("normalize_rows", a.shape(), std::move(out), {a},
                      [a, inv, rows, cols](Tape<T>& t, std::size_t self) {
                        auto g = t.grad(self);
                        auto av = t.value(a.id);
                        auto& da = t.grad_buffer(a.id);
                        for (std::size_t i = 0; i < rows; ++i) {
                          const T r = (*inv)[i];
                          T gx = 0;
                          for (std::size_t j = 0; j < cols; ++j) gx += g[i * cols + j] * av[i * cols + j];
                          const T c = gx * r * r * r;
                          for (std::size_t j = 0; j < cols; ++j)
                            da[i * cols + j] += g[i * cols + j] * r - av[i * cols + j] * c;
                        }
                      });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
Var<T> sum(Var<T> a) {
  T s = 0;
  for (T v : a.value()) s += v;
  return a.tape->emit("sum", {}, {s}, {a}, [a](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    auto& da = t.grad_buffer(a.id);
    for (auto& d : da) d += g;
  });
}

template <typename T>
Var<T> dot(Var<T> a, Var<T> b) {
  require_same_shape("dot", a, b);
  auto av = a.value(), bv = b.value();
  T s = 0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return a.tape->emit("dot", {}, {s}, {a, b}, [a, b](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    auto av = t.value(a.id), bv = t.value(b.id);
    if (t.requires_grad(a.id)) {
      auto& da = t.grad_buffer(a.id);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g * bv[i];
    }
    if (t.requires_grad(b.id)) {
      auto& db = t.grad_buffer(b.id);
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g * av[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Shape
// ---------------------------------------------------------------------------

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  if (numel(shape) != numel(a.shape())) {
    throw Error(ErrorCode::kShapeMismatch, a.tape->next_name("reshape"),
                "cannot reshape " + shape_str(a.shape()) + " to " + shape_str(shape));
  }
  return a.tape->emit("reshape", std::move(shape), copy_value(a), {a},
                      [a](Tape<T>& t, std::size_t self) {
                        auto g = t.grad(self);
                        auto& da = t.grad_buffer(a.id);
                        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                      });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  require_rank("transpose", a, 2, "operand");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  auto av = a.value();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return a.tape->emit("transpose", {c, r}, std::move(out), {a},
                      [a, r, c](Tape<T>& t, std::size_t self) {
                        auto g = t.grad(self);
                        auto& da = t.grad_buffer(a.id);
                        for (std::size_t i = 0; i < r; ++i)
                          for (std::size_t j = 0; j < c; ++j) da[i * c + j] += g[j * r + i];
                      });
}

template <typename T>
Var<T> slice_rows(Var<T> a, std::size_t begin, std::size_t end) {
  if (a.shape().empty() || begin > end || end > a.shape()[0]) {
    throw Error(ErrorCode::kShapeMismatch, a.tape->next_name("slice_rows"),
                "row range [" + std::to_string(begin) + "," + std::to_string(end) +
                    ") invalid for shape " + shape_str(a.shape()));
  }
  const std::size_t row = numel(a.shape()) / a.shape()[0];
  Shape shape = a.shape();
  shape[0] = end - begin;
  auto av = a.value();
  std::vector<T> out(av.begin() + begin * row, av.begin() + end * row);
  return a.tape->emit("slice_rows", std::move(shape), std::move(out), {a},
                      [a, begin, row](Tape<T>& t, std::size_t self) {
                        auto g = t.grad(self);
                        auto& da = t.grad_buffer(a.id);
                        for (std::size_t i = 0; i < g.size(); ++i) da[begin * row + i] += g[i];
                      });
}

template <typename T>
Var<T> block(Var<T> a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
  require_rank("block", a, 2, "operand");
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  if (r0 > r1 || r1 > rows || c0 > c1 || c1 > cols) {
    throw Error(ErrorCode::kShapeMismatch, a.tape->next_name("block"),
                "block out of range for shape " + shape_str(a.shape()));
  }
  const std::size_t h = r1 - r0, w = c1 - c0;
  auto av = a.value();
  std::vector<T> out(h * w);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = av[(r0 + i) * cols + c0 + j];
  return a.tape->emit("block", {h, w}, std::move(out), {a},
                      [a, r0, c0, h, w, cols](Tape<T>& t, std::size_t self) {
                        auto g = t.grad(self);
                        auto& da = t.grad_buffer(a.id);
                        for (std::size_t i = 0; i < h; ++i)
                          for (std::size_t j = 0; j < w; ++j)
                            da[(r0 + i) * cols + c0 + j] += g[i * w + j];
                      });
}

// ---------------------------------------------------------------------------
// Linear algebra and layers
// ---------------------------------------------------------------------------

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& tape = common_tape("matmul", a, b);
  require_rank("matmul", a, 2, "lhs");
  require_rank("matmul", b, 2, "rhs");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("matmul"),
                "inner dimensions differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::vector<T> out(m * n);
  kernels::gemm(Trans::kNo, Trans::kNo, m, n, k, T(1), a.value().data(), k, b.value().data(), n,
                T(0), out.data(), n);
  return tape.emit("matmul", {m, n}, std::move(out), {a, b},
                   [a, b, m, n, k](Tape<T>& t, std::size_t self) {
                     const T* g = t.grad(self).data();
                     if (t.requires_grad(a.id)) {
                       kernels::gemm(Trans::kNo, Trans::kYes, m, k, n, T(1), g, n,
                                     t.value(b.id).data(), n, T(1), t.grad_buffer(a.id).data(), k);
                     }
                     if (t.requires_grad(b.id)) {
                       kernels::gemm(Trans::kYes, Trans::kNo, k, n, m, T(1), t.value(a.id).data(),
                                     k, g, n, T(1), t.grad_buffer(b.id).data(), n);
                     }
                   });
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  Tape<T>& tape = common_tape("matmul_nt", a, b);
  require_rank("matmul_nt", a, 2, "lhs");
  require_rank("matmul_nt", b, 2, "rhs");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("matmul_nt"),
                "row lengths differ: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<T> out(m * n);
  kernels::gemm(Trans::kNo, Trans::kYes, m, n, k, T(1), a.value().data(), k, b.value().data(), k,
                T(0), out.data(), n);
  return tape.emit("matmul_nt", {m, n}, std::move(out), {a, b},
                   [a, b, m, n, k](Tape<T>& t, std::size_t self) {
                     const T* g = t.grad(self).data();
                     if (t.requires_grad(a.id)) {
                       kernels::gemm(Trans::kNo, Trans::kNo, m, k, n, T(1), g, n,
                                     t.value(b.id).data(), k, T(1), t.grad_buffer(a.id).data(), k);
                     }
                     if (t.requires_grad(b.id)) {
                       kernels::gemm(Trans::kYes, Trans::kNo, n, k, m, T(1), g, n,
                                     t.value(a.id).data(), k, T(1), t.grad_buffer(b.id).data(), k);
                     }
                   });
}

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, Var<T> bias) {
  Tape<T>& tape = common_tape("linear", x, weight);
  require_rank("linear", x, 2, "input");
  require_rank("linear", weight, 2, "weight");
  const std::size_t batch = x.shape()[0], in = x.shape()[1], out_dim = weight.shape()[0];
  if (weight.shape()[1] != in) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("linear"),
                "input width " + std::to_string(in) + " does not match weight " +
                    shape_str(weight.shape()));
  }
  if (bias.valid() && bias.shape() != Shape{out_dim}) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("linear"),
                "bias shape " + shape_str(bias.shape()) + " expected [" +
                    std::to_string(out_dim) + "]");
  }
  std::vector<T> out(batch * out_dim);
  kernels::gemm(Trans::kNo, Trans::kYes, batch, out_dim, in, T(1), x.value().data(), in,
                weight.value().data(), in, T(0), out.data(), out_dim);
  if (bias.valid()) {
    auto bv = bias.value();
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t j = 0; j < out_dim; ++j) out[i * out_dim + j] += bv[j];
  }
  return tape.emit(
      "linear", {batch, out_dim}, std::move(out), {x, weight, bias},
      [x, weight, bias, batch, in, out_dim](Tape<T>& t, std::size_t self) {
        const T* g = t.grad(self).data();
        if (t.requires_grad(x.id)) {
          kernels::gemm(Trans::kNo, Trans::kNo, batch, in, out_dim, T(1), g, out_dim,
                        t.value(weight.id).data(), in, T(1), t.grad_buffer(x.id).data(), in);
        }
        if (t.requires_grad(weight.id)) {
          kernels::gemm(Trans::kYes, Trans::kNo, out_dim, in, batch, T(1), g, out_dim,
                        t.value(x.id).data(), in, T(1), t.grad_buffer(weight.id).data(), in);
        }
        if (bias.valid() && t.requires_grad(bias.id)) {
          auto& db = t.grad_buffer(bias.id);
          for (std::size_t i = 0; i < batch; ++i)
            for (std::size_t j = 0; j < out_dim; ++j) db[j] += g[i * out_dim + j];
        }
      });
}

namespace {

struct ConvGeometry {
  std::size_t channels, height, width, kernel, stride, padding, out_h, out_w;
  std::size_t patch() const { return channels * kernel * kernel; }
  std::size_t pixels() const { return out_h * out_w; }
};

// cols[(c*k + ky)*k + kx][oy*out_w + ox] = x[c][oy*s + ky - p][ox*s + kx - p]
template <typename T>
void im2col(const ConvGeometry& g, const T* x, T* cols) {
  const std::size_t k = g.kernel;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = cols + ((c * k + ky) * k + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = x + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.width)) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* cols, T* dx) {
  const std::size_t k = g.kernel;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = cols + ((c * k + ky) * k + kx) * g.pixels();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          T* dst = dx + (c * g.height + static_cast<std::size_t>(iy)) * g.width;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (ix >= 0 && ix < static_cast<long>(g.width)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> x, Var<T> weight, Var<T> bias, Conv2dOptions options) {
  Tape<T>& tape = common_tape("conv2d", x, weight);
  require_rank("conv2d", x, 4, "input");
  require_rank("conv2d", weight, 4, "weight");
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws[1] != xs[1] || ws[2] != ws[3]) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("conv2d"),
                "weight " + shape_str(ws) + " incompatible with input " + shape_str(xs));
  }
  if (options.stride == 0) {
    throw Error(ErrorCode::kInvalidArgument, tape.next_name("conv2d"), "stride must be positive");
  }
  const std::size_t batch = xs[0], out_ch = ws[0];
  ConvGeometry g{xs[1], xs[2], xs[3], ws[2], options.stride, options.padding, 0, 0};
  if (g.height + 2 * g.padding < g.kernel || g.width + 2 * g.padding < g.kernel) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("conv2d"),
                "kernel larger than padded input " + shape_str(xs));
  }
  g.out_h = (g.height + 2 * g.padding - g.kernel) / g.stride + 1;
  g.out_w = (g.width + 2 * g.padding - g.kernel) / g.stride + 1;
  if (bias.valid() && bias.shape() != Shape{out_ch}) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("conv2d"),
                "bias shape " + shape_str(bias.shape()) + " expected [" + std::to_string(out_ch) +
                    "]");
  }

  const std::size_t in_img = g.channels * g.height * g.width;
  const std::size_t out_img = out_ch * g.pixels();
  std::vector<T> out(batch * out_img);
  std::vector<T> cols(g.patch() * g.pixels());
  const T* xv = x.value().data();
  const T* wv = weight.value().data();
  for (std::size_t n = 0; n < batch; ++n) {
    im2col(g, xv + n * in_img, cols.data());
    kernels::gemm(Trans::kNo, Trans::kNo, out_ch, g.pixels(), g.patch(), T(1), wv, g.patch(),
                  cols.data(), g.pixels(), T(0), out.data() + n * out_img, g.pixels());
  }
  if (bias.valid()) {
    auto bv = bias.value();
    for (std::size_t n = 0; n < batch; ++n)
      for (std::size_t o = 0; o < out_ch; ++o) {
        T* dst = out.data() + n * out_img + o * g.pixels();
        for (std::size_t p = 0; p < g.pixels(); ++p) dst[p] += bv[o];
      }
  }
  return tape.emit(
      "conv2d", {batch, out_ch, g.out_h, g.out_w}, std::move(out), {x, weight, bias},
      [x, weight, bias, g, batch, out_ch, in_img, out_img](Tape<T>& t, std::size_t self) {
        const T* gout = t.grad(self).data();
        const T* xv = t.value(x.id).data();
        const T* wv = t.value(weight.id).data();
        const bool need_x = t.requires_grad(x.id);
        const bool need_w = t.requires_grad(weight.id);
        std::vector<T> cols(g.patch() * g.pixels());
        for (std::size_t n = 0; n < batch; ++n) {
          const T* gn = gout + n * out_img;
          if (need_w) {
            im2col(g, xv + n * in_img, cols.data());
            kernels::gemm(Trans::kNo, Trans::kYes, out_ch, g.patch(), g.pixels(), T(1), gn,
                          g.pixels(), cols.data(), g.pixels(), T(1),
                          t.grad_buffer(weight.id).data(), g.patch());
          }
          if (need_x) {
            kernels::gemm(Trans::kYes, Trans::kNo, g.patch(), g.pixels(), out_ch, T(1), wv,
                          g.patch(), gn, g.pixels(), T(0), cols.data(), g.pixels());
            col2im_add(g, cols.data(), t.grad_buffer(x.id).data() + n * in_img);
          }
        }
        if (bias.valid() && t.requires_grad(bias.id)) {
          auto& db = t.grad_buffer(bias.id);
          for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t o = 0; o < out_ch; ++o) {
              const T* src = gout + n * out_img + o * g.pixels();
              T s = 0;
              for (std::size_t p = 0; p < g.pixels(); ++p) s += src[p];
              db[o] += s;
            }
        }
      });
}

template <typename T>
Var<T> batch_norm(Var<T> x, Var<T> gamma, Var<T> beta, BatchNormStats<T> stats,
                  BatchNormOptions options) {
  Tape<T>& tape = common_tape("batch_norm", x, gamma);
  const Shape& xs = x.shape();
  if (xs.size() != 2 && xs.size() != 4) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("batch_norm"),
                "input must be [N,C] or [N,C,H,W], got " + shape_str(xs));
  }
  const std::size_t batch = xs[0], ch = xs[1];
  const std::size_t spatial = xs.size() == 4 ? xs[2] * xs[3] : 1;
  if (gamma.shape() != Shape{ch} || beta.shape() != Shape{ch}) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("batch_norm"),
                "affine parameters must be [" + std::to_string(ch) + "]");
  }
  const std::size_t count = batch * spatial;
  if (options.training && count < 2) {
    throw Error(ErrorCode::kInvalidArgument, tape.next_name("batch_norm"),
                "training mode needs more than one value per channel (batch of 1)");
  }
  if (!options.training && (stats.running_mean == nullptr || stats.running_var == nullptr)) {
    throw Error(ErrorCode::kInvalidArgument, tape.next_name("batch_norm"),
                "inference mode needs running statistics");
  }
  for (auto* buf : {stats.running_mean, stats.running_var}) {
    if (buf != nullptr && buf->size() != ch) {
      throw Error(ErrorCode::kShapeMismatch, tape.next_name("batch_norm"),
                  "running statistics must have " + std::to_string(ch) + " entries");
    }
  }

  auto xv = x.value();
  auto gv = gamma.value(), bv = beta.value();
  const T eps = static_cast<T>(options.eps);
  auto xhat = std::make_shared<std::vector<T>>(xv.size());
  auto inv_std = std::make_shared<std::vector<T>>(ch);
  std::vector<T> out(xv.size());
  auto at = [&](std::size_t n, std::size_t c) { return (n * ch + c) * spatial; };

  for (std::size_t c = 0; c < ch; ++c) {
    T mean, var;
    if (options.training) {
      T s = 0;
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t p = 0; p < spatial; ++p) s += xv[at(n, c) + p];
      mean = s / static_cast<T>(count);
      T ss = 0;
      for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t p = 0; p < spatial; ++p) {
          const T d = xv[at(n, c) + p] - mean;
          ss += d * d;
        }
      var = ss / static_cast<T>(count);
      if (stats.running_mean != nullptr && stats.running_var != nullptr) {
        const T m = static_cast<T>(options.momentum);
        auto& rm = *stats.running_mean;
        auto& rv = *stats.running_var;
        rm[c] = (T(1) - m) * rm[c] + m * mean;
        rv[c] = (T(1) - m) * rv[c] + m * (ss / static_cast<T>(count - 1));
      }
    } else {
      mean = (*stats.running_mean)[c];
      var = (*stats.running_var)[c];
    }
    const T istd = T(1) / std::sqrt(var + eps);
    (*inv_std)[c] = istd;
    for (std::size_t n = 0; n < batch; ++n)
      for (std::size_t p = 0; p < spatial; ++p) {
        const std::size_t i = at(n, c) + p;
        const T h = (xv[i] - mean) * istd;
        (*xhat)[i] = h;
        out[i] = gv[c] * h + bv[c];
      }
  }

  const bool training = options.training;
  return tape.emit(
      "batch_norm", xs, std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, batch, ch, spatial, count, training](Tape<T>& t,
                                                                           std::size_t self) {
        auto g = t.grad(self);
        auto gv = t.value(gamma.id);
        auto at = [&](std::size_t n, std::size_t c) { return (n * ch + c) * spatial; };
        for (std::size_t c = 0; c < ch; ++c) {
          T sum_g = 0, sum_gh = 0;
          for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t p = 0; p < spatial; ++p) {
              const std::size_t i = at(n, c) + p;
              sum_g += g[i];
              sum_gh += g[i] * (*xhat)[i];
            }
          if (t.requires_grad(gamma.id)) t.grad_buffer(gamma.id)[c] += sum_gh;
          if (t.requires_grad(beta.id)) t.grad_buffer(beta.id)[c] += sum_g;
          if (!t.requires_grad(x.id)) continue;
          auto& dx = t.grad_buffer(x.id);
          const T istd = (*inv_std)[c];
          const T k = gv[c] * istd;
          const T inv_count = T(1) / static_cast<T>(count);
          for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t p = 0; p < spatial; ++p) {
              const std::size_t i = at(n, c) + p;
              if (training) {
                dx[i] += k * (g[i] - inv_count * sum_g - (*xhat)[i] * inv_count * sum_gh);
              } else {
                dx[i] += k * g[i];
              }
            }
        }
      });
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

template <typename T>
Var<T> append_dustbin(Var<T> inner, Var<T> alpha) {
  Tape<T>& tape = common_tape("append_dustbin", inner, alpha);
  require_rank("append_dustbin", inner, 2, "similarity block");
  if (numel(alpha.shape()) != 1) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("append_dustbin"),
                "dustbin value must be a scalar, got " + shape_str(alpha.shape()));
  }
  const std::size_t b1 = inner.shape()[0], b2 = inner.shape()[1];
  const std::size_t cols = b2 + 1;
  auto iv = inner.value();
  const T a = alpha.item();
  std::vector<T> out((b1 + 1) * cols, a);
  for (std::size_t i = 0; i < b1; ++i)
    for (std::size_t j = 0; j < b2; ++j) out[i * cols + j] = iv[i * b2 + j];
  return tape.emit("append_dustbin", {b1 + 1, cols}, std::move(out), {inner, alpha},
                   [inner, alpha, b1, b2, cols](Tape<T>& t, std::size_t self) {
                     auto g = t.grad(self);
                     if (t.requires_grad(inner.id)) {
                       auto& di = t.grad_buffer(inner.id);
                       for (std::size_t i = 0; i < b1; ++i)
                         for (std::size_t j = 0; j < b2; ++j) di[i * b2 + j] += g[i * cols + j];
                     }
                     if (t.requires_grad(alpha.id)) {
                       T s = 0;
                       for (std::size_t i = 0; i < b1; ++i) s += g[i * cols + b2];
                       for (std::size_t j = 0; j <= b2; ++j) s += g[b1 * cols + j];
                       t.grad_buffer(alpha.id)[0] += s;
                     }
                   });
}

template <typename T>
Var<T> cross_entropy_rows(Var<T> logits, std::span<const int> labels, std::span<const T> weights) {
  Tape<T>& tape = *logits.tape;
  require_rank("cross_entropy_rows", logits, 2, "logits");
  const std::size_t rows = logits.shape()[0], cols = logits.shape()[1];
  const std::size_t used = labels.size();
  if (used > rows) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("cross_entropy_rows"),
                std::to_string(used) + " labels for " + std::to_string(rows) + " rows");
  }
  if (!weights.empty() && weights.size() != used) {
    throw Error(ErrorCode::kShapeMismatch, tape.next_name("cross_entropy_rows"),
                "weight count " + std::to_string(weights.size()) + " != label count " +
                    std::to_string(used));
  }
  for (std::size_t i = 0; i < used; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= cols) {
      throw Error(ErrorCode::kOutOfRange, tape.next_name("cross_entropy_rows"),
                  "label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                      " outside [0," + std::to_string(cols) + ")");
    }
  }
  auto lv = logits.value();
  auto probs = std::make_shared<std::vector<T>>(used * cols);
  auto w = std::make_shared<std::vector<T>>(used, T(1));
  if (!weights.empty()) std::copy(weights.begin(), weights.end(), w->begin());
  auto lab = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  T total = 0;
  for (std::size_t i = 0; i < used; ++i) {
    const T* row = lv.data() + i * cols;
    const T mx = *std::max_element(row, row + cols);
    T se = 0;
    for (std::size_t j = 0; j < cols; ++j) se += std::exp(row[j] - mx);
    const T lse = mx + std::log(se);
    for (std::size_t j = 0; j < cols; ++j) (*probs)[i * cols + j] = std::exp(row[j] - lse);
    total += (*w)[i] * (lse - row[labels[i]]);
  }
  return tape.emit("cross_entropy_rows", {}, {total}, {logits},
                   [logits, probs, w, lab, cols](Tape<T>& t, std::size_t self) {
                     const T g = t.grad(self)[0];
                     auto& dl = t.grad_buffer(logits.id);
                     for (std::size_t i = 0; i < lab->size(); ++i) {
                       const T s = g * (*w)[i];
                       for (std::size_t j = 0; j < cols; ++j) dl[i * cols + j] += s * (*probs)[i * cols + j];
                       dl[i * cols + (*lab)[i]] -= s;
                     }
                   });
}

// ---------------------------------------------------------------------------
// Instantiations
// ---------------------------------------------------------------------------

#define SWEEPRET_INSTANTIATE(T)                                                                 \
  template class Tape<T>;                                                                       \
  template Var<T> add(Var<T>, Var<T>);                                                          \
  template Var<T> sub(Var<T>, Var<T>);                                                          \
  template Var<T> mul(Var<T>, Var<T>);                                                          \
  template Var<T> scale(Var<T>, T);                                                             \
  template Var<T> mul_const(Var<T>, const Tensor<T>&);                                          \
  template Var<T> relu(Var<T>);                                                                 \
  template Var<T> normalize_rows(Var<T>, T);                                                    \
  template Var<T> sum(Var<T>);                                                                  \
  template Var<T> dot(Var<T>, Var<T>);                                                          \
  template Var<T> reshape(Var<T>, Shape);                                                       \
  template Var<T> transpose(Var<T>);                                                            \
  template Var<T> slice_rows(Var<T>, std::size_t, std::size_t);                                 \
  template Var<T> block(Var<T>, std::size_t, std::size_t, std::size_t, std::size_t);            \
  template Var<T> matmul(Var<T>, Var<T>);                                                       \
  template Var<T> matmul_nt(Var<T>, Var<T>);                                                    \
  template Var<T> linear(Var<T>, Var<T>, Var<T>);                                               \
  template Var<T> conv2d(Var<T>, Var<T>, Var<T>, Conv2dOptions);                                \
  template Var<T> batch_norm(Var<T>, Var<T>, Var<T>, BatchNormStats<T>, BatchNormOptions);      \
  template Var<T> append_dustbin(Var<T>, Var<T>);                                               \
  template Var<T> cross_entropy_rows(Var<T>, std::span<const int>, std::span<const T>);

SWEEPRET_INSTANTIATE(float)
SWEEPRET_INSTANTIATE(double)

#undef SWEEPRET_INSTANTIATE

}  // namespace sweepret
