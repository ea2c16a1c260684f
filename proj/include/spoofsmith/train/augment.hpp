#pragma once

#include <span>
#include <string>
#include <vector>

#include "spoofsmith/rng.hpp"
#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

enum class AugmentKind { HFlip, Rotate, Crop, Brightness };

/// One entry of an augmentation pipeline. Names are "hflip", "rotate",
/// "crop" and "brightness", optionally suffixed with ":p" to set the
/// probability of applying the op (hflip defaults to 0.5, the rest to 1).
struct AugmentOp {
  AugmentKind kind = AugmentKind::HFlip;
  double probability = 1.0;
};

std::vector<AugmentOp> parse_augment_ops(std::span<const std::string> names);
std::string to_string(const AugmentOp& op);

inline constexpr double kMaxRotationDegrees = 10.0;
inline constexpr double kMinCropScale = 0.9;
inline constexpr double kMaxBrightnessShift = 0.1;

/// Applies `ops` in order to an image [c, h, w]. Output has the input's
/// shape and is clamped to [-1, 1].
Tensor<float> augment(const Tensor<float>& image, std::span<const AugmentOp> ops, Rng& stream);
Tensor<float> augment(const Tensor<float>& image, std::span<const std::string> ops, Rng& stream);

Tensor<float> hflip(const Tensor<float>& image);
/// Bilinear rotation about the image center with border replication.
Tensor<float> rotate(const Tensor<float>& image, double degrees);
/// Bilinear resample of the window [top, top + crop_h) x [left, left + crop_w)
/// back to full size.
Tensor<float> crop_resize(const Tensor<float>& image, double top, double left, double crop_h, double crop_w);

}  // namespace spoofsmith
