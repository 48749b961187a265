// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emodynamix/tensor.hpp"

namespace emx {

enum class DType : std::uint32_t { f32 = 1, f64 = 2 };

std::string dtype_name(DType d);
DType parse_dtype(const std::string& s);

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::f32; }
template <>
constexpr DType dtype_of<double>() { return DType::f64; }

// Named-tensor container.
//
// Layout (all integers little-endian):
//   8 bytes  magic "EMXCKPT1"
//   u32      dtype (1 = f32, 2 = f64)
//   u64      metadata length, then metadata bytes (UTF-8 JSON text)
//   u64      tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
//               numel raw IEEE-754 little-endian values
// The manifest is the ordered list of tensor names.
struct CheckpointTensor {
  std::string name;
  Shape shape;
  std::vector<unsigned char> raw;  // numel * sizeof(dtype)
};

struct CheckpointFile {
  DType dtype = DType::f64;
  std::string metadata;
  std::vector<CheckpointTensor> tensors;

  std::vector<std::string> manifest() const;
};

template <typename T>
CheckpointFile to_checkpoint(const ParameterSet<T>& params, std::string metadata);

// Copies checkpoint values into `params`, matching by name. Every parameter
// must be present with identical shape; values are converted when the dtype
// differs.
template <typename T>
void load_into(const CheckpointFile& ckpt, ParameterSet<T>& params);

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ckpt);
CheckpointFile read_checkpoint(const std::filesystem::path& path);

extern template CheckpointFile to_checkpoint<float>(const ParameterSet<float>&, std::string);
extern template CheckpointFile to_checkpoint<double>(const ParameterSet<double>&, std::string);
extern template void load_into<float>(const CheckpointFile&, ParameterSet<float>&);
extern template void load_into<double>(const CheckpointFile&, ParameterSet<double>&);

}  // namespace emx
