#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spoofsmith/models.hpp"
#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

/// Decoded 8-bit raster, interleaved channels (1 = gray, 3 = RGB).
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;
};

/// Reads an 8-bit gray or RGB PNG. 16-bit samples, palettes with alpha and
/// alpha channels are rejected with DecodeError.
RawImage read_png(const std::filesystem::path& path);
void write_png(const RawImage& image, const std::filesystem::path& path);

/// Bilinear resample (half-pixel centers) + channel conversion, then
/// p / 127.5 - 1. Result shape is [channels, height, width].
Tensor<float> raw_to_tensor(const RawImage& image, const ImageShape& target);
/// Inverse mapping: lround((clamp(v, -1, 1) + 1) * 127.5).
RawImage tensor_to_raw(const Tensor<float>& image);

Tensor<float> decode_image(const std::filesystem::path& path, const ImageShape& target);
/// `image` is [c, h, w] with c in {1, 3}.
void encode_image(const Tensor<float>& image, const std::filesystem::path& path);

}  // namespace spoofsmith
