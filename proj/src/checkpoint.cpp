// Copyright 2026 The EmoDynamiX Authors
// SPDX-License-Identifier: Apache-2.0

#include "emodynamix/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

#include "emodynamix/error.hpp"

namespace emx {
namespace {

constexpr char kMagic[8] = {'E', 'M', 'X', 'C', 'K', 'P', 'T', '1'};

std::size_t dtype_size(DType d) { return d == DType::f32 ? 4 : 8; }

template <typename U>
void put_le(std::ostream& os, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  os.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char buf[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(U))) throw ParseError("truncated checkpoint", 0);
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

std::string get_bytes(std::istream& is, std::uint64_t n) {
  std::string s(n, '\0');
  if (n && !is.read(s.data(), static_cast<std::streamsize>(n))) throw ParseError("truncated checkpoint", 0);
  return s;
}

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

template <typename T>
void encode(const std::vector<T>& values, std::vector<unsigned char>& raw) {
  raw.resize(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<Bits<T>>(values[i]);
    for (std::size_t b = 0; b < sizeof(T); ++b) raw[i * sizeof(T) + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
}

template <typename T>
T decode_one(const unsigned char* p) {
  Bits<T> bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<Bits<T>>(p[b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

}  // namespace

std::string dtype_name(DType d) { return d == DType::f32 ? "f32" : "f64"; }

DType parse_dtype(const std::string& s) {
  if (s == "f32" || s == "float32") return DType::f32;
  if (s == "f64" || s == "float64") return DType::f64;
  throw ConfigError("unknown dtype '" + s + "' (expected f32 or f64)");
}

std::vector<std::string> CheckpointFile::manifest() const {
  std::vector<std::string> out;
  for (const auto& t : tensors) out.push_back(t.name);
  return out;
}

template <typename T>
CheckpointFile to_checkpoint(const ParameterSet<T>& params, std::string metadata) {
  CheckpointFile ckpt;
  ckpt.dtype = dtype_of<T>();
  ckpt.metadata = std::move(metadata);
  for (const auto& p : params) {
    CheckpointTensor t;
    t.name = p.name;
    t.shape = p.value.shape();
    encode(p.value.storage(), t.raw);
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

template <typename T>
void load_into(const CheckpointFile& ckpt, ParameterSet<T>& params) {
  std::map<std::string, const CheckpointTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  const std::size_t width = dtype_size(ckpt.dtype);
  for (auto& p : params) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw LookupError("checkpoint has no tensor named " + p.name);
    const CheckpointTensor& t = *it->second;
    if (t.shape != p.value.shape()) {
      throw ShapeError("checkpoint tensor " + p.name + " has shape " + shape_str(t.shape) + ", model expects " +
                       shape_str(p.value.shape()));
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const unsigned char* src = t.raw.data() + i * width;
      p.value[i] = ckpt.dtype == DType::f32 ? static_cast<T>(decode_one<float>(src))
                                            : static_cast<T>(decode_one<double>(src));
    }
  }
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw LookupError("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.dtype));
  put_le<std::uint64_t>(os, ckpt.metadata.size());
  os.write(ckpt.metadata.data(), static_cast<std::streamsize>(ckpt.metadata.size()));
  put_le<std::uint64_t>(os, ckpt.tensors.size());
  for (const auto& t : ckpt.tensors) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_le<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.raw.data()), static_cast<std::streamsize>(t.raw.size()));
  }
  if (!os) throw Error("failed writing checkpoint " + path.string());
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LookupError("checkpoint not found: " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw ParseError("not a checkpoint file: " + path.string(), 0);
  }
  CheckpointFile ckpt;
  const auto dt = get_le<std::uint32_t>(is);
  if (dt != 1 && dt != 2) throw ParseError("unknown checkpoint dtype code " + std::to_string(dt), 0);
  ckpt.dtype = static_cast<DType>(dt);
  ckpt.metadata = get_bytes(is, get_le<std::uint64_t>(is));
  const auto count = get_le<std::uint64_t>(is);
  for (std::uint64_t k = 0; k < count; ++k) {
    CheckpointTensor t;
    t.name = get_bytes(is, get_le<std::uint32_t>(is));
    const auto rank = get_le<std::uint32_t>(is);
    if (rank > 2) throw ParseError("tensor " + t.name + " has unsupported rank " + std::to_string(rank), 0);
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(get_le<std::uint64_t>(is));
    const std::string raw = get_bytes(is, shape_numel(t.shape) * dtype_size(ckpt.dtype));
    t.raw.assign(raw.begin(), raw.end());
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

template CheckpointFile to_checkpoint<float>(const ParameterSet<float>&, std::string);
template CheckpointFile to_checkpoint<double>(const ParameterSet<double>&, std::string);
template void load_into<float>(const CheckpointFile&, ParameterSet<float>&);
template void load_into<double>(const CheckpointFile&, ParameterSet<double>&);

}  // namespace emx
