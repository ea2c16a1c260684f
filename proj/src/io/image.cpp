#include "spoofsmith/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "spoofsmith/error.hpp"

namespace spoofsmith {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// PNG IHDR fields live at fixed offsets after the 8-byte signature.
void check_header(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
  static constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() < 33 || !std::equal(std::begin(kSignature), std::end(kSignature), bytes.begin())) {
    throw DecodeError(path.string() + ": not a PNG file");
  }
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA || color_type == PNG_COLOR_TYPE_RGB_ALPHA) {
    throw DecodeError(path.string() + ": alpha channels are not supported");
  }
  if (color_type != PNG_COLOR_TYPE_PALETTE && bit_depth != 8) {
    throw DecodeError(path.string() + ": unsupported bit depth " + std::to_string(bit_depth));
  }
}

float sample(const RawImage& img, std::size_t c, std::size_t y, std::size_t x) {
  return img.pixels[(y * img.width + x) * img.channels + c];
}

}  // namespace

RawImage read_png(const fs::path& path) {
  const auto bytes = slurp(path);
  check_header(bytes, path);

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DecodeError(path.string() + ": " + image.message);
  }
  if (image.format & PNG_FORMAT_FLAG_ALPHA) {
    png_image_free(&image);
    throw DecodeError(path.string() + ": alpha channels are not supported");
  }
  const bool color = image.format & PNG_FORMAT_FLAG_COLOR;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  RawImage out;
  out.width = image.width;
  out.height = image.height;
  out.channels = color ? 3 : 1;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError(path.string() + ": " + msg);
  }
  return out;
}

void write_png(const RawImage& raw, const fs::path& path) {
  if (raw.channels != 1 && raw.channels != 3) throw InvalidArgumentError("PNG output needs 1 or 3 channels");
  if (raw.pixels.size() != raw.width * raw.height * raw.channels) {
    throw InvalidArgumentError("pixel buffer does not match image dimensions");
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raw.width);
  image.height = static_cast<png_uint_32>(raw.height);
  image.format = raw.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raw.pixels.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + image.message);
  }
  std::vector<std::uint8_t> buffer(size);
  if (!png_image_write_to_memory(&image, buffer.data(), &size, 0, raw.pixels.data(), 0, nullptr)) {
    throw IoError(path.string() + ": " + image.message);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write image " + path.string());
  out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(size));
  if (!out) throw IoError("failed writing image " + path.string());
}

Tensor<float> raw_to_tensor(const RawImage& img, const ImageShape& target) {
  if (img.width == 0 || img.height == 0) throw DecodeError("empty image");
  if (target.channels != 1 && target.channels != 3) throw InvalidArgumentError("target channels must be 1 or 3");
  if (target.height == 0 || target.width == 0) throw InvalidArgumentError("target size must be positive");

  const std::size_t th = target.height, tw = target.width;
  std::vector<float> plane(img.channels * th * tw);
  const float sy = static_cast<float>(img.height) / static_cast<float>(th);
  const float sx = static_cast<float>(img.width) / static_cast<float>(tw);
  const bool native = th == img.height && tw == img.width;
  for (std::size_t y = 0; y < th; ++y) {
    const float fy = std::clamp((static_cast<float>(y) + 0.5f) * sy - 0.5f, 0.0f, static_cast<float>(img.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const float wy = fy - static_cast<float>(y0);
    for (std::size_t x = 0; x < tw; ++x) {
      const float fx = std::clamp((static_cast<float>(x) + 0.5f) * sx - 0.5f, 0.0f, static_cast<float>(img.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const float wx = fx - static_cast<float>(x0);
      for (std::size_t c = 0; c < img.channels; ++c) {
        float v;
        if (native) {
          v = sample(img, c, y, x);
        } else {
          const float top = sample(img, c, y0, x0) * (1 - wx) + sample(img, c, y0, x1) * wx;
          const float bottom = sample(img, c, y1, x0) * (1 - wx) + sample(img, c, y1, x1) * wx;
          v = top * (1 - wy) + bottom * wy;
        }
        plane[(c * th + y) * tw + x] = v;
      }
    }
  }

  auto out = Tensor<float>::zeros({target.channels, th, tw});
  auto od = out.mutable_data();
  const std::size_t hw = th * tw;
  for (std::size_t i = 0; i < hw; ++i) {
    for (std::size_t c = 0; c < target.channels; ++c) {
      float p;
      if (img.channels == target.channels) {
        p = plane[c * hw + i];
      } else if (img.channels == 1) {
        p = plane[i];
      } else {
        p = 0.299f * plane[i] + 0.587f * plane[hw + i] + 0.114f * plane[2 * hw + i];
      }
      od[c * hw + i] = p / 127.5f - 1.0f;
    }
  }
  return out;
}

RawImage tensor_to_raw(const Tensor<float>& image) {
  if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3)) {
    throw InvalidShapeError("image tensor must be [1|3, h, w], got " + to_string(image.shape()));
  }
  RawImage raw;
  raw.channels = image.dim(0);
  raw.height = image.dim(1);
  raw.width = image.dim(2);
  raw.pixels.resize(image.numel());
  const auto d = image.data();
  const std::size_t hw = raw.height * raw.width;
  for (std::size_t c = 0; c < raw.channels; ++c) {
    for (std::size_t i = 0; i < hw; ++i) {
      float v = d[c * hw + i];
      v = std::isnan(v) ? 0.0f : std::clamp(v, -1.0f, 1.0f);
      raw.pixels[i * raw.channels + c] = static_cast<std::uint8_t>(std::lround((v + 1.0f) * 127.5f));
    }
  }
  return raw;
}

Tensor<float> decode_image(const fs::path& path, const ImageShape& target) {
  return raw_to_tensor(read_png(path), target);
}

void encode_image(const Tensor<float>& image, const fs::path& path) { write_png(tensor_to_raw(image), path); }

}  // namespace spoofsmith
