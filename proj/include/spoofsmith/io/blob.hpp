#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

/// On-disk tensor encoding:
///   "PADT" | u8 version (1) | u8 dtype (0 f32, 1 f64) | u8 rank | u8 0 |
///   rank x u64 LE dims | row-major LE elements
inline constexpr std::uint8_t kBlobVersion = 1;

template <typename T>
void append_tensor_blob(std::vector<std::uint8_t>& out, const Tensor<T>& tensor);

template <typename T>
std::vector<std::uint8_t> encode_tensor_blob(const Tensor<T>& tensor) {
  std::vector<std::uint8_t> out;
  append_tensor_blob(out, tensor);
  return out;
}

/// Decodes exactly one blob spanning all of `bytes`. Truncated or trailing
/// bytes raise CorruptionError; a different dtype raises ParseError.
template <typename T>
Tensor<T> decode_tensor_blob(std::span<const std::uint8_t> bytes);

/// dtype recorded in a blob header.
DType blob_dtype(std::span<const std::uint8_t> bytes);

template <typename T>
void save_tensor(const Tensor<T>& tensor, const std::filesystem::path& path);
template <typename T>
Tensor<T> load_tensor(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it into place.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace spoofsmith
