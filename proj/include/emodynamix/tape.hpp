// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emodynamix/tensor.hpp"

namespace emx {

template <typename T>
class Tape;

// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Reverse-mode tape. Single-threaded; one tape per forward pass.
//
// Parameter leaves alias the parameter's value and accumulate straight into
// Parameter::grad, so gradients from several tapes sum up across a batch.
template <typename T>
class Tape {
 public:
  explicit Tape(bool checked = true) : checked_(checked) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> param(Parameter<T>& p);

  const Tensor<T>& value(Var<T> v) const;
  // Adjoint of `v` after backward(); zeros if v is off the loss path.
  Tensor<T> grad(Var<T> v) const;

  // Seeds d(out)/d(out) = 1 and runs every recorded adjoint in reverse order.
  void backward(Var<T> out);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool checked() const noexcept { return checked_; }

  // Optional record of which side of every non-smooth point the forward pass
  // took (LeakyReLU sign, max argmax). Off by default.
  void record_branches(bool on) { record_branches_ = on; }
  bool recording_branches() const noexcept { return record_branches_; }
  void note_branch(std::size_t b) {
    if (record_branches_) branches_.push_back(b);
  }
  const std::vector<std::size_t>& branches() const noexcept { return branches_; }

  // Used by op implementations.
  using Backward = std::function<void(Tape&, std::size_t self)>;
  Var<T> record(std::string_view op, Tensor<T> value, Backward backward);
  Tensor<T>& grad_buffer(std::size_t id);

 private:
  struct Node {
    std::string_view op;
    Tensor<T> own;
    const Tensor<T>* alias = nullptr;
    Tensor<T> own_grad;
    Tensor<T>* grad_alias = nullptr;
    bool has_grad = false;
    Backward backward;
  };
  const Tensor<T>& node_value(const Node& n) const { return n.alias ? *n.alias : n.own; }

  bool checked_;
  bool record_branches_ = false;
  std::vector<std::size_t> branches_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_ids_;
};

namespace ops {

// Shapes: rank-2 x rank-2, rank-2 x rank-1 (matrix-vector), rank-1 x rank-2
// (vector-matrix, i.e. weighted row combination).
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
// weights (n) combine the n rows of matrix (n, d) into one d-vector.
template <typename T> Var<T> embedding_select(Var<T> matrix, Var<T> weights);
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
template <typename T> Var<T> scale(Var<T> a, T factor);
// a * s where s holds exactly one element.
template <typename T> Var<T> scale_by(Var<T> a, Var<T> s);
template <typename T> Var<T> exp(Var<T> a);
template <typename T> Var<T> leaky_relu(Var<T> a, T negative_slope = T(0.2));
// Concatenates rank-1 tensors.
template <typename T> Var<T> concat(std::span<const Var<T>> parts);
// Stacks equal-length rank-1 tensors into the rows of a matrix.
template <typename T> Var<T> stack_rows(std::span<const Var<T>> rows);
// Rank-1 range [begin, end).
template <typename T> Var<T> slice(Var<T> a, std::size_t begin, std::size_t end);
template <typename T> Var<T> row(Var<T> a, std::size_t r);
template <typename T> Var<T> reshape(Var<T> a, Shape shape);
// Element a[i] (flat index) as a scalar.
template <typename T> Var<T> pick(Var<T> a, std::size_t i);
// Each column of a rank-2 tensor repeated `times` times: (r, c) -> (r, c*times).
template <typename T> Var<T> repeat_cols(Var<T> a, std::size_t times);
// axis is ignored for rank-1 inputs.
template <typename T> Var<T> softmax(Var<T> a, int axis = -1);
template <typename T> Var<T> log_softmax(Var<T> a, int axis = -1);
template <typename T> Var<T> sum(Var<T> a);
template <typename T> Var<T> sum(Var<T> a, int axis);
template <typename T> Var<T> mean(Var<T> a);
template <typename T> Var<T> mean(Var<T> a, int axis);
template <typename T> Var<T> max(Var<T> a, int axis);
template <typename T> Var<T> l2_norm(Var<T> a);

}  // namespace ops

extern template class Tape<float>;
extern template class Tape<double>;
extern template struct Var<float>;
extern template struct Var<double>;

}  // namespace emx
