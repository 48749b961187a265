// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "emodynamix/error.hpp"

namespace emx {

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape->value(*this);
}

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  if (checked_ && !value.all_finite()) throw NumericError("non-finite constant recorded on tape");
  return record("constant", std::move(value), nullptr);
}

template <typename T>
Var<T> Tape<T>::param(Parameter<T>& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var<T>{this, it->second};
  if (checked_ && !p.value.all_finite()) throw NumericError("non-finite value in parameter " + p.name);
  Node n;
  n.op = "param";
  n.alias = &p.value;
  n.grad_alias = &p.grad;
  nodes_.push_back(std::move(n));
  param_ids_.emplace(&p, nodes_.size() - 1);
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
Var<T> Tape<T>::record(std::string_view op, Tensor<T> value, Backward backward) {
  if (checked_ && !value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
  Node n;
  n.op = op;
  n.own = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var<T>{this, nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::value(Var<T> v) const {
  return node_value(nodes_.at(v.id));
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad_alias) {
    n.has_grad = true;
    return *n.grad_alias;
  }
  if (!n.has_grad) {
    n.own_grad = Tensor<T>(node_value(n).shape(), T(0));
    n.has_grad = true;
  }
  return n.own_grad;
}

template <typename T>
Tensor<T> Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.has_grad) return Tensor<T>(node_value(n).shape(), T(0));
  return n.grad_alias ? *n.grad_alias : n.own_grad;
}

template <typename T>
void Tape<T>::backward(Var<T> out) {
  if (value(out).size() != 1) {
    throw ShapeError("backward requires a scalar output, got shape " + shape_str(value(out).shape()));
  }
  grad_buffer(out.id)[0] += T(1);
  for (std::size_t id = out.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, id);
  }
}

namespace ops {
namespace {

template <typename T>
[[noreturn]] void shape_fail(std::string_view op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

template <typename T>
[[noreturn]] void shape_fail(std::string_view op, const Shape& a) {
  throw ShapeError(std::string(op) + ": unsupported shape " + shape_str(a));
}

template <typename T>
void same_tape(Var<T> a, Var<T> b, std::string_view op) {
  if (a.tape != b.tape) throw ValidationError(std::string(op) + ": operands live on different tapes");
}

template <typename T>
const Tensor<T>& val(Tape<T>& t, std::size_t id) {
  return t.value(Var<T>{&t, id});
}

template <typename T>
const Tensor<T>& gout(Tape<T>& t, std::size_t self) {
  return t.grad_buffer(self);
}

std::size_t resolve_axis(int axis, std::size_t rank) {
  if (axis < 0) axis += static_cast<int>(rank);
  return static_cast<std::size_t>(std::max(axis, 0));
}

}  // namespace

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  same_tape(a, b, "matmul");
  Tape<T>& t = *a.tape;
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  const std::size_t ia = a.id, ib = b.id;

  if (A.rank() == 2 && B.rank() == 2) {
    const std::size_t m = A.shape()[0], k = A.shape()[1], n = B.shape()[1];
    if (B.shape()[0] != k) shape_fail<T>("matmul", A.shape(), B.shape());
    Tensor<T> C(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const T aip = A[i * k + p];
        for (std::size_t j = 0; j < n; ++j) C[i * n + j] += aip * B[p * n + j];
      }
    return t.record("matmul", std::move(C), [ia, ib, m, k, n](Tape<T>& t, std::size_t self) {
      const Tensor<T>& dC = gout(t, self);
      const Tensor<T>& A = val(t, ia);
      const Tensor<T>& B = val(t, ib);
      Tensor<T>& dA = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          T acc = 0;
          for (std::size_t j = 0; j < n; ++j) acc += dC[i * n + j] * B[p * n + j];
          dA[i * k + p] += acc;
        }
      Tensor<T>& dB = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const T aip = A[i * k + p];
          for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * dC[i * n + j];
        }
    });
  }
  if (A.rank() == 2 && B.rank() == 1) {
    const std::size_t m = A.shape()[0], k = A.shape()[1];
    if (B.size() != k) shape_fail<T>("matmul", A.shape(), B.shape());
    Tensor<T> c(Shape{m});
    for (std::size_t i = 0; i < m; ++i) {
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += A[i * k + p] * B[p];
      c[i] = acc;
    }
    return t.record("matmul", std::move(c), [ia, ib, m, k](Tape<T>& t, std::size_t self) {
      const Tensor<T>& dc = gout(t, self);
      const Tensor<T>& A = val(t, ia);
      const Tensor<T>& b = val(t, ib);
      Tensor<T>& dA = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i) {
        const T g = dc[i];
        if (g == T(0)) continue;
        for (std::size_t p = 0; p < k; ++p) dA[i * k + p] += g * b[p];
      }
      Tensor<T>& db = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i) {
        const T g = dc[i];
        for (std::size_t p = 0; p < k; ++p) db[p] += A[i * k + p] * g;
      }
    });
  }
  if (A.rank() == 1 && B.rank() == 2) {
    const std::size_t k = B.shape()[0], n = B.shape()[1];
    if (A.size() != k) shape_fail<T>("matmul", A.shape(), B.shape());
    Tensor<T> c(Shape{n});
    for (std::size_t p = 0; p < k; ++p) {
      const T ap = A[p];
      if (ap == T(0)) continue;
      for (std::size_t j = 0; j < n; ++j) c[j] += ap * B[p * n + j];
    }
    return t.record("matmul", std::move(c), [ia, ib, k, n](Tape<T>& t, std::size_t self) {
      const Tensor<T>& dc = gout(t, self);
      const Tensor<T>& a = val(t, ia);
      const Tensor<T>& B = val(t, ib);
      Tensor<T>& da = t.grad_buffer(ia);
      for (std::size_t p = 0; p < k; ++p) {
        T acc = 0;
        for (std::size_t j = 0; j < n; ++j) acc += B[p * n + j] * dc[j];
        da[p] += acc;
      }
      Tensor<T>& dB = t.grad_buffer(ib);
      for (std::size_t p = 0; p < k; ++p) {
        const T ap = a[p];
        if (ap == T(0)) continue;
        for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += ap * dc[j];
      }
    });
  }
  shape_fail<T>("matmul", A.shape(), B.shape());
}

template <typename T>
Var<T> embedding_select(Var<T> matrix, Var<T> weights) {
  if (weights.value().rank() != 1 || matrix.value().rank() != 2) {
    shape_fail<T>("embedding_select", matrix.shape(), weights.shape());
  }
  return matmul(weights, matrix);
}

namespace {

template <typename T, typename Fwd, typename Bwd>
Var<T> binary_elementwise(std::string_view op, Var<T> a, Var<T> b, Fwd fwd, Bwd bwd) {
  same_tape(a, b, op);
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  if (A.shape() != B.shape()) shape_fail<T>(op, A.shape(), B.shape());
  Tensor<T> C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = fwd(A[i], B[i]);
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->record(op, std::move(C), [ia, ib, bwd](Tape<T>& t, std::size_t self) {
    const Tensor<T>& dC = gout(t, self);
    const Tensor<T> A = val(t, ia);
    const Tensor<T> B = val(t, ib);
    {
      Tensor<T>& dA = t.grad_buffer(ia);
      for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += bwd(A[i], B[i], dC[i], true);
    }
    Tensor<T>& dB = t.grad_buffer(ib);
    for (std::size_t i = 0; i < dB.size(); ++i) dB[i] += bwd(A[i], B[i], dC[i], false);
  });
}

}  // namespace

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  return binary_elementwise<T>(
      "add", a, b, [](T x, T y) { return x + y; }, [](T, T, T g, bool) { return g; });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return binary_elementwise<T>(
      "sub", a, b, [](T x, T y) { return x - y; }, [](T, T, T g, bool lhs) { return lhs ? g : -g; });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  return binary_elementwise<T>(
      "mul", a, b, [](T x, T y) { return x * y; },
      [](T x, T y, T g, bool lhs) { return lhs ? g * y : g * x; });
}

template <typename T>
Var<T> scale(Var<T> a, T factor) {
  Tensor<T> C = a.value();
  for (auto& x : C.data()) x *= factor;
  const std::size_t ia = a.id;
  return a.tape->record("scale", std::move(C), [ia, factor](Tape<T>& t, std::size_t self) {
    const Tensor<T>& dC = gout(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += factor * dC[i];
  });
}

template <typename T>
Var<T> scale_by(Var<T> a, Var<T> s) {
  same_tape(a, s, "scale_by");
  if (s.value().size() != 1) shape_fail<T>("scale_by", a.shape(), s.shape());
  const T sv = s.value()[0];
  Tensor<T> C = a.value();
  for (auto& x : C.data()) x *= sv;
  const std::size_t ia = a.id, is = s.id;
  return a.tape->record("scale_by", std::move(C), [ia, is](Tape<T>& t, std::size_t self) {
    const Tensor<T>& dC = gout(t, self);
    const T sv = val(t, is)[0];
    T ds = 0;
    {
      const Tensor<T>& A = val(t, ia);
      for (std::size_t i = 0; i < A.size(); ++i) ds += A[i] * dC[i];
    }
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += sv * dC[i];
    t.grad_buffer(is)[0] += ds;
  });
}

template <typename T>
Var<T> exp(Var<T> a) {
  Tensor<T> C = a.value();
  for (auto& x : C.data()) x = std::exp(x);
  const std::size_t ia = a.id;
  return a.tape->record("exp", std::move(C), [ia](Tape<T>& t, std::size_t self) {
    const Tensor<T>& dC = gout(t, self);
    const Tensor<T>& Y = val(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += Y[i] * dC[i];
  });
}

template <typename T>
Var<T> leaky_relu(Var<T> a, T negative_slope) {
  Tensor<T> C = a.value();
  for (auto& x : C.data()) x = x >= T(0) ? x : negative_slope * x;
  if (a.tape->recording_branches())
    for (const T& x : a.value().data()) a.tape->note_branch(x >= T(0));
  const std::size_t ia = a.id;
  return a.tape->record("leaky_relu", std::move(C), [ia, negative_slope](Tape<T>& t, std::size_t self) {
    const Tensor<T>& dC = gout(t, self);
    const Tensor<T> X = val(t, ia);
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += (X[i] >= T(0) ? T(1) : negative_slope) * dC[i];
  });
}

template <typename T>
Var<T> concat(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape<T>& t = *parts.front().tape;
  std::vector<std::size_t> ids, offsets;
  std::vector<T> out;
  for (const auto& p : parts) {
    same_tape(parts.front(), p, "concat");
    if (p.value().rank() != 1) shape_fail<T>("concat", p.shape());
    ids.push_back(p.id);
    offsets.push_back(out.size());
    out.insert(out.end(), p.value().data().begin(), p.value().data().end());
  }
  return t.record("concat", Tensor<T>::vector(std::move(out)),
                  [ids, offsets](Tape<T>& t, std::size_t self) {
                    const Tensor<T> dC = gout(t, self);
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      Tensor<T>& d = t.grad_buffer(ids[k]);
                      for (std::size_t i = 0; i < d.size(); ++i) d[i] += dC[offsets[k] + i];
                    }
                  });
}

template <typename T>
Var<T> stack_rows(std::span<const Var<T>> rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  const std::size_t n = rows.front().value().size();
  std::vector<std::size_t> ids;
  std::vector<T> out;
  out.reserve(n * rows.size());
  for (const auto& r : rows) {
    same_tape(rows.front(), r, "stack_rows");
    if (r.value().rank() != 1 || r.value().size() != n) shape_fail<T>("stack_rows", rows.front().shape(), r.shape());
    ids.push_back(r.id);
    out.insert(out.end(), r.value().data().begin(), r.value().data().end());
  }
  const std::size_t m = rows.size();
  return rows.front().tape->record("stack_rows", Tensor<T>::matrix(m, n, std::move(out)),
                                   [ids, n](Tape<T>& t, std::size_t self) {
                                     const Tensor<T> dC = gout(t, self);
                                     for (std::size_t k = 0; k < ids.size(); ++k) {
                                       Tensor<T>& d = t.grad_buffer(ids[k]);
                                       for (std::size_t i = 0; i < n; ++i) d[i] += dC[k * n + i];
                                     }
                                   });
}

template <typename T>
Var<T> slice(Var<T> a, std::size_t begin, std::size_t end) {
  const Tensor<T>& A = a.value();
  if (A.rank() != 1 || begin > end || end > A.size()) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for shape " +
                     shape_str(A.shape()));
  }
  std::vector<T> out(A.data().begin() + begin, A.data().begin() + end);
  const std::size_t ia = a.id;
  return a.tape->record("slice", Tensor<T>::vector(std::move(out)), [ia, begin](Tape<T>& t, std::size_t self) {
    const Tensor<T> dC = gout(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < dC.size(); ++i) dA[begin + i] += dC[i];
  });
}

template <typename T>
Var<T> row(Var<T> a, std::size_t r) {
  const Tensor<T>& A = a.value();
  if (A.rank() != 2 || r >= A.shape()[0]) {
    throw ShapeError("row: index " + std::to_string(r) + " invalid for shape " + shape_str(A.shape()));
  }
  const std::size_t n = A.shape()[1];
  std::vector<T> out(A.data().begin() + r * n, A.data().begin() + (r + 1) * n);
  const std::size_t ia = a.id;
  return a.tape->record("row", Tensor<T>::vector(std::move(out)), [ia, r, n](Tape<T>& t, std::size_t self) {
    const Tensor<T> dC = gout(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < n; ++i) dA[r * n + i] += dC[i];
  });
}

template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  const Tensor<T>& A = a.value();
  if (shape_numel(shape) != A.size()) shape_fail<T>("reshape", A.shape(), shape);
  std::vector<T> data(A.data().begin(), A.data().end());
  const std::size_t ia = a.id;
  return a.tape->record("reshape", Tensor<T>(std::move(shape), std::move(data)),
                        [ia](Tape<T>& t, std::size_t self) {
                          const Tensor<T> dC = gout(t, self);
                          Tensor<T>& dA = t.grad_buffer(ia);
                          for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += dC[i];
                        });
}

template <typename T>
Var<T> pick(Var<T> a, std::size_t i) {
  if (i >= a.value().size()) {
    throw ShapeError("pick: index " + std::to_string(i) + " out of range for shape " + shape_str(a.shape()));
  }
  const std::size_t ia = a.id;
  return a.tape->record("pick", Tensor<T>::scalar(a.value()[i]), [ia, i](Tape<T>& t, std::size_t self) {
    const T g = gout(t, self)[0];
    t.grad_buffer(ia)[i] += g;
  });
}

template <typename T>
Var<T> repeat_cols(Var<T> a, std::size_t times) {
  const Tensor<T>& A = a.value();
  if (A.rank() != 2 || times == 0) shape_fail<T>("repeat_cols", A.shape());
  const std::size_t r = A.shape()[0], c = A.shape()[1];
  Tensor<T> C(Shape{r, c * times});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c * times; ++j) C[i * c * times + j] = A[i * c + j / times];
  const std::size_t ia = a.id;
  return a.tape->record("repeat_cols", std::move(C), [ia, r, c, times](Tape<T>& t, std::size_t self) {
    const Tensor<T> dC = gout(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c * times; ++j) dA[i * c + j / times] += dC[i * c * times + j];
  });
}

namespace {

// Iterates the independent 1-D lanes of `shape` along `axis`: calls
// f(offset, stride, length) once per lane.
template <typename F>
void for_each_lane(const Shape& shape, std::size_t axis, F f) {
  if (shape.size() <= 1) {
    f(std::size_t{0}, std::size_t{1}, shape_numel(shape));
    return;
  }
  const std::size_t r = shape[0], c = shape[1];
  if (axis == 0) {
    for (std::size_t j = 0; j < c; ++j) f(j, c, r);
  } else {
    for (std::size_t i = 0; i < r; ++i) f(i * c, std::size_t{1}, c);
  }
}

}  // namespace

template <typename T>
Var<T> softmax(Var<T> a, int axis) {
  const Tensor<T>& A = a.value();
  const std::size_t ax = resolve_axis(axis, A.rank());
  Tensor<T> Y(A.shape());
  for_each_lane(A.shape(), ax, [&](std::size_t off, std::size_t stride, std::size_t len) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, A[off + k * stride]);
    T z = 0;
    for (std::size_t k = 0; k < len; ++k) z += (Y[off + k * stride] = std::exp(A[off + k * stride] - mx));
    for (std::size_t k = 0; k < len; ++k) Y[off + k * stride] /= z;
  });
  const std::size_t ia = a.id;
  return a.tape->record("softmax", std::move(Y), [ia, ax](Tape<T>& t, std::size_t self) {
    const Tensor<T> dY = gout(t, self);
    const Tensor<T>& Y = val(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    for_each_lane(Y.shape(), ax, [&](std::size_t off, std::size_t stride, std::size_t len) {
      T dot = 0;
      for (std::size_t k = 0; k < len; ++k) dot += dY[off + k * stride] * Y[off + k * stride];
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t i = off + k * stride;
        dA[i] += Y[i] * (dY[i] - dot);
      }
    });
  });
}

template <typename T>
Var<T> log_softmax(Var<T> a, int axis) {
  const Tensor<T>& A = a.value();
  const std::size_t ax = resolve_axis(axis, A.rank());
  Tensor<T> Y(A.shape());
  for_each_lane(A.shape(), ax, [&](std::size_t off, std::size_t stride, std::size_t len) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, A[off + k * stride]);
    T z = 0;
    for (std::size_t k = 0; k < len; ++k) z += std::exp(A[off + k * stride] - mx);
    const T lse = mx + std::log(z);
    for (std::size_t k = 0; k < len; ++k) Y[off + k * stride] = A[off + k * stride] - lse;
  });
  const std::size_t ia = a.id;
  return a.tape->record("log_softmax", std::move(Y), [ia, ax](Tape<T>& t, std::size_t self) {
    const Tensor<T> dY = gout(t, self);
    const Tensor<T>& Y = val(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    for_each_lane(Y.shape(), ax, [&](std::size_t off, std::size_t stride, std::size_t len) {
      T total = 0;
      for (std::size_t k = 0; k < len; ++k) total += dY[off + k * stride];
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t i = off + k * stride;
        dA[i] += dY[i] - std::exp(Y[i]) * total;
      }
    });
  });
}

template <typename T>
Var<T> sum(Var<T> a) {
  T s = 0;
  for (T x : a.value().data()) s += x;
  const std::size_t ia = a.id;
  return a.tape->record("sum", Tensor<T>::scalar(s), [ia](Tape<T>& t, std::size_t self) {
    const T g = gout(t, self)[0];
    Tensor<T>& dA = t.grad_buffer(ia);
    for (auto& d : dA.data()) d += g;
  });
}

namespace {

template <typename T>
Var<T> reduce_axis(std::string_view op, Var<T> a, int axis, T factor) {
  const Tensor<T>& A = a.value();
  if (A.rank() != 2) shape_fail<T>(op, A.shape());
  const std::size_t ax = resolve_axis(axis, 2);
  const std::size_t out_len = ax == 0 ? A.shape()[1] : A.shape()[0];
  Tensor<T> Y(Shape{out_len});
  std::size_t lane = 0;
  for_each_lane(A.shape(), ax, [&](std::size_t off, std::size_t stride, std::size_t len) {
    T s = 0;
    for (std::size_t k = 0; k < len; ++k) s += A[off + k * stride];
    Y[lane++] = s * factor;
  });
  const std::size_t ia = a.id;
  return a.tape->record(op, std::move(Y), [ia, ax, factor](Tape<T>& t, std::size_t self) {
    const Tensor<T> dY = gout(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    std::size_t lane = 0;
    for_each_lane(dA.shape(), ax, [&](std::size_t off, std::size_t stride, std::size_t len) {
      const T g = dY[lane++] * factor;
      for (std::size_t k = 0; k < len; ++k) dA[off + k * stride] += g;
    });
  });
}

}  // namespace

template <typename T>
Var<T> sum(Var<T> a, int axis) {
  return reduce_axis<T>("sum", a, axis, T(1));
}

template <typename T>
Var<T> mean(Var<T> a) {
  const std::size_t n = a.value().size();
  if (n == 0) shape_fail<T>("mean", a.shape());
  return scale(sum(a), T(1) / static_cast<T>(n));
}

template <typename T>
Var<T> mean(Var<T> a, int axis) {
  const Tensor<T>& A = a.value();
  if (A.rank() != 2) shape_fail<T>("mean", A.shape());
  const std::size_t len = A.shape()[resolve_axis(axis, 2)];
  if (len == 0) shape_fail<T>("mean", A.shape());
  return reduce_axis<T>("mean", a, axis, T(1) / static_cast<T>(len));
}

template <typename T>
Var<T> max(Var<T> a, int axis) {
  const Tensor<T>& A = a.value();
  if (A.rank() != 2 || A.size() == 0) shape_fail<T>("max", A.shape());
  const std::size_t ax = resolve_axis(axis, 2);
  const std::size_t out_len = ax == 0 ? A.shape()[1] : A.shape()[0];
  Tensor<T> Y(Shape{out_len});
  std::vector<std::size_t> arg(out_len);
  std::size_t lane = 0;
  for_each_lane(A.shape(), ax, [&](std::size_t off, std::size_t stride, std::size_t len) {
    std::size_t best = off;
    for (std::size_t k = 1; k < len; ++k)
      if (A[off + k * stride] > A[best]) best = off + k * stride;
    Y[lane] = A[best];
    arg[lane++] = best;
  });
  for (std::size_t k : arg) a.tape->note_branch(k);
  const std::size_t ia = a.id;
  return a.tape->record("max", std::move(Y), [ia, arg](Tape<T>& t, std::size_t self) {
    const Tensor<T> dY = gout(t, self);
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t k = 0; k < arg.size(); ++k) dA[arg[k]] += dY[k];
  });
}

template <typename T>
Var<T> l2_norm(Var<T> a) {
  T s = 0;
  for (T x : a.value().data()) s += x * x;
  const T norm = std::sqrt(s);
  const std::size_t ia = a.id;
  return a.tape->record("l2_norm", Tensor<T>::scalar(norm), [ia](Tape<T>& t, std::size_t self) {
    const T g = gout(t, self)[0];
    const T norm = val(t, self)[0];
    if (norm == T(0)) return;
    const Tensor<T> X = val(t, ia);
    Tensor<T>& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < dA.size(); ++i) dA[i] += g * X[i] / norm;
  });
}

#define EMX_INSTANTIATE_OPS(T)                                          \
  template Var<T> matmul(Var<T>, Var<T>);                               \
  template Var<T> embedding_select(Var<T>, Var<T>);                     \
  template Var<T> add(Var<T>, Var<T>);                                  \
  template Var<T> sub(Var<T>, Var<T>);                                  \
  template Var<T> mul(Var<T>, Var<T>);                                  \
  template Var<T> scale(Var<T>, T);                                     \
  template Var<T> scale_by(Var<T>, Var<T>);                             \
  template Var<T> exp(Var<T>);                                          \
  template Var<T> leaky_relu(Var<T>, T);                                \
  template Var<T> concat(std::span<const Var<T>>);                      \
  template Var<T> stack_rows(std::span<const Var<T>>);                  \
  template Var<T> slice(Var<T>, std::size_t, std::size_t);              \
  template Var<T> row(Var<T>, std::size_t);                             \
  template Var<T> reshape(Var<T>, Shape);                               \
  template Var<T> pick(Var<T>, std::size_t);                            \
  template Var<T> repeat_cols(Var<T>, std::size_t);                     \
  template Var<T> softmax(Var<T>, int);                                 \
  template Var<T> log_softmax(Var<T>, int);                             \
  template Var<T> sum(Var<T>);                                          \
  template Var<T> sum(Var<T>, int);                                     \
  template Var<T> mean(Var<T>);                                         \
  template Var<T> mean(Var<T>, int);                                    \
  template Var<T> max(Var<T>, int);                                     \
  template Var<T> l2_norm(Var<T>);

EMX_INSTANTIATE_OPS(float)
EMX_INSTANTIATE_OPS(double)
#undef EMX_INSTANTIATE_OPS

}  // namespace ops

template class Tape<float>;
template class Tape<double>;
template struct Var<float>;
template struct Var<double>;

}  // namespace emx
