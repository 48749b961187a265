// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "emodynamix/error.hpp"

namespace emx {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
  if (rank() > 2) throw ShapeError("tensor rank > 2 unsupported: " + shape_str(shape_));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (rank() > 2) throw ShapeError("tensor rank > 2 unsupported: " + shape_str(shape_));
  if (data_.size() != shape_numel(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_str(shape_));
  }
}

template <typename T>
void Tensor<T>::fill(T v) {
  std::fill(data_.begin(), data_.end(), v);
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T x) { return std::isfinite(x); });
}

template <typename T>
Parameter<T>::Parameter(std::string n, Tensor<T> v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape(), T(0)) {}

template <typename T>
Parameter<T>& ParameterSet<T>::add(std::string name, Tensor<T> value) {
  if (index_.count(name)) throw ValidationError("duplicate parameter name: " + name);
  index_.emplace(name, params_.size());
  return params_.emplace_back(std::move(name), std::move(value));
}

template <typename T>
Parameter<T>& ParameterSet<T>::operator[](const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("no parameter named " + name);
  return params_[it->second];
}

template <typename T>
const Parameter<T>& ParameterSet<T>::operator[](const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw LookupError("no parameter named " + name);
  return params_[it->second];
}

template <typename T>
std::size_t ParameterSet<T>::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
std::vector<std::string> ParameterSet<T>::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.name);
  return out;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void ParameterSet<T>::assign_values(const ParameterSet& other) {
  if (other.size() != size()) throw ValidationError("parameter set size mismatch");
  for (auto& p : params_) {
    const auto& src = other[p.name];
    if (src.value.shape() != p.value.shape()) {
      throw ShapeError("parameter " + p.name + " shape " + shape_str(src.value.shape()) + " vs " +
                       shape_str(p.value.shape()));
    }
    p.value = src.value;
  }
}

template class Tensor<float>;
template class Tensor<double>;
template struct Parameter<float>;
template struct Parameter<double>;
template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace emx
