#include "spoofsmith/train/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

#include "spoofsmith/error.hpp"

namespace spoofsmith {

namespace {

struct Geometry {
  std::size_t c, h, w;
};

Geometry geometry(const Tensor<float>& image) {
  if (image.rank() != 3) throw InvalidShapeError("augment expects [c, h, w], got " + to_string(image.shape()));
  return {image.dim(0), image.dim(1), image.dim(2)};
}

// Bilinear lookup with coordinates clamped to the border (replication).
float bilinear(const float* plane, std::size_t h, std::size_t w, double y, double x) {
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  const auto y0 = static_cast<std::size_t>(y);
  const auto x0 = static_cast<std::size_t>(x);
  const std::size_t y1 = std::min(y0 + 1, h - 1);
  const std::size_t x1 = std::min(x0 + 1, w - 1);
  const double wy = y - static_cast<double>(y0);
  const double wx = x - static_cast<double>(x0);
  const double top = plane[y0 * w + x0] * (1 - wx) + plane[y0 * w + x1] * wx;
  const double bottom = plane[y1 * w + x0] * (1 - wx) + plane[y1 * w + x1] * wx;
  return static_cast<float>(top * (1 - wy) + bottom * wy);
}

void clamp_unit(Tensor<float>& t) {
  for (float& v : t.mutable_data()) v = std::clamp(v, -1.0f, 1.0f);
}

}  // namespace

std::vector<AugmentOp> parse_augment_ops(std::span<const std::string> names) {
  std::vector<AugmentOp> ops;
  for (const auto& full : names) {
    const auto colon = full.find(':');
    const std::string name = full.substr(0, colon);
    AugmentOp op;
    if (name == "hflip") {
      op = {AugmentKind::HFlip, 0.5};
    } else if (name == "rotate") {
      op = {AugmentKind::Rotate, 1.0};
    } else if (name == "crop") {
      op = {AugmentKind::Crop, 1.0};
    } else if (name == "brightness") {
      op = {AugmentKind::Brightness, 1.0};
    } else {
      throw ConfigError("unknown augmentation op '" + full + "'");
    }
    if (colon != std::string::npos) {
      const std::string p = full.substr(colon + 1);
      double value = -1;
      auto [end, ec] = std::from_chars(p.data(), p.data() + p.size(), value);
      if (ec != std::errc() || end != p.data() + p.size() || !(value >= 0 && value <= 1)) {
        throw ConfigError("bad probability in augmentation op '" + full + "'");
      }
      op.probability = value;
    }
    ops.push_back(op);
  }
  return ops;
}

std::string to_string(const AugmentOp& op) {
  const char* names[] = {"hflip", "rotate", "crop", "brightness"};
  return std::string(names[static_cast<int>(op.kind)]) + ":" + std::to_string(op.probability);
}

Tensor<float> hflip(const Tensor<float>& image) {
  const auto [c, h, w] = geometry(image);
  auto out = Tensor<float>::zeros(image.shape());
  auto s = image.data();
  auto d = out.mutable_data();
  for (std::size_t row = 0; row < c * h; ++row) {
    for (std::size_t x = 0; x < w; ++x) d[row * w + x] = s[row * w + (w - 1 - x)];
  }
  return out;
}

Tensor<float> rotate(const Tensor<float>& image, double degrees) {
  const auto [c, h, w] = geometry(image);
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cy = (static_cast<double>(h) - 1) / 2, cx = (static_cast<double>(w) - 1) / 2;
  auto out = Tensor<float>::zeros(image.shape());
  auto s = image.data();
  auto d = out.mutable_data();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      // Inverse map: output pixel -> source location.
      const double ry = static_cast<double>(y) - cy, rx = static_cast<double>(x) - cx;
      const double sy = cy + cs * ry - sn * rx;
      const double sx = cx + sn * ry + cs * rx;
      for (std::size_t ch = 0; ch < c; ++ch) d[(ch * h + y) * w + x] = bilinear(s.data() + ch * h * w, h, w, sy, sx);
    }
  }
  return out;
}

Tensor<float> crop_resize(const Tensor<float>& image, double top, double left, double crop_h, double crop_w) {
  const auto [c, h, w] = geometry(image);
  auto out = Tensor<float>::zeros(image.shape());
  auto s = image.data();
  auto d = out.mutable_data();
  const double sy = crop_h / static_cast<double>(h), sx = crop_w / static_cast<double>(w);
  for (std::size_t y = 0; y < h; ++y) {
    const double fy = top + (static_cast<double>(y) + 0.5) * sy - 0.5;
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = left + (static_cast<double>(x) + 0.5) * sx - 0.5;
      for (std::size_t ch = 0; ch < c; ++ch) d[(ch * h + y) * w + x] = bilinear(s.data() + ch * h * w, h, w, fy, fx);
    }
  }
  return out;
}

Tensor<float> augment(const Tensor<float>& image, std::span<const AugmentOp> ops, Rng& stream) {
  const auto [c, h, w] = geometry(image);
  Tensor<float> out = image.detach();
  for (const auto& op : ops) {
    // Every op draws the same number of values whether or not it fires, so
    // later ops see a stable stream.
    const bool fire = stream.uniform() < op.probability;
    switch (op.kind) {
      case AugmentKind::HFlip:
        if (fire) out = hflip(out);
        break;
      case AugmentKind::Rotate: {
        const double deg = stream.uniform(-kMaxRotationDegrees, kMaxRotationDegrees);
        if (fire) out = rotate(out, deg);
        break;
      }
      case AugmentKind::Crop: {
        const double scale = stream.uniform(kMinCropScale, 1.0);
        const double u = stream.uniform(), v = stream.uniform();
        if (fire) {
          const double ch = scale * static_cast<double>(h), cw = scale * static_cast<double>(w);
          out = crop_resize(out, u * (static_cast<double>(h) - ch), v * (static_cast<double>(w) - cw), ch, cw);
        }
        break;
      }
      case AugmentKind::Brightness: {
        const auto shift = static_cast<float>(stream.uniform(-kMaxBrightnessShift, kMaxBrightnessShift));
        if (fire) {
          for (float& px : out.mutable_data()) px += shift;
        }
        break;
      }
    }
  }
  clamp_unit(out);
  return out;
}

Tensor<float> augment(const Tensor<float>& image, std::span<const std::string> ops, Rng& stream) {
  const auto parsed = parse_augment_ops(ops);
  return augment(image, std::span<const AugmentOp>(parsed), stream);
}

}  // namespace spoofsmith
