// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace emx {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Dense row-major tensor of rank 0 (scalar, shape {}), 1 or 2.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> data);

  static Tensor scalar(T v) { return Tensor(Shape{}, std::vector<T>{v}); }
  static Tensor vector(std::vector<T> v) {
    const std::size_t n = v.size();
    return Tensor(Shape{n}, std::move(v));
  }
  static Tensor vector(std::initializer_list<T> v) { return vector(std::vector<T>(v)); }
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<T> v) {
    return Tensor(Shape{rows, cols}, std::move(v));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rows() const noexcept { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const noexcept { return rank() == 0 ? 1 : shape_.back(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  void fill(T v);
  bool all_finite() const;

  bool operator==(const Tensor& o) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;  // same shape as value, zero-initialised

  Parameter(std::string n, Tensor<T> v);
  void zero_grad() { grad.fill(T(0)); }
};

// Ordered named parameter collection. Element addresses are stable across
// insertion, so tapes may hold pointers into it.
template <typename T>
class ParameterSet {
 public:
  Parameter<T>& add(std::string name, Tensor<T> value);

  Parameter<T>& operator[](const std::string& name);
  const Parameter<T>& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t numel() const;
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::vector<std::string> names() const;
  void zero_grad();
  // Copies values (not grads) from another set with identical names/shapes.
  void assign_values(const ParameterSet& other);

 private:
  std::deque<Parameter<T>> params_;
  std::map<std::string, std::size_t> index_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template struct Parameter<float>;
extern template struct Parameter<double>;
extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace emx
