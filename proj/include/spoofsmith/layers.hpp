#pragma once

#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

template <typename T>
struct Conv2dParams {
  Tensor<T> weight;  // [out_ch, in_ch, kh, kw]
  Tensor<T> bias;    // [out_ch]; may be left undefined
  std::size_t stride = 1;
  std::size_t padding = 0;
};

enum class BnMode { Train, Eval };

template <typename T>
struct BatchNormState {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// floor((in + 2*padding - kernel) / stride) + 1, or InvalidShapeError when
/// the kernel does not fit.
std::size_t conv_output_dim(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

/// (in - 1) * stride - 2 * padding + kernel, or InvalidShapeError below 1.
std::size_t conv_transpose_output_dim(std::size_t in, std::size_t kernel, std::size_t stride,
                                      std::size_t padding);

/// Cross-correlation over [n,c,h,w] (no kernel flip), bias per output channel.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Conv2dParams<T>& params);

/// Adjoint of conv2d with respect to its input. `weight` is [in_ch, out_ch,
/// kh, kw]; `bias`, when defined, is [out_ch].
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, std::size_t stride,
                           std::size_t padding, const Tensor<T>& bias = {});

/// 2x2 window, stride 2. Ties route the gradient to the first element in
/// row-major window order.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input);

/// Per-channel normalization. Train mode uses batch statistics and updates
/// the running estimates (unbiased variance) in `state`.
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, BatchNormState<T>& state, BnMode mode);

/// [n,k] x [k,m] + bias[m]
template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

inline constexpr double kBceEps = 1e-7;

/// Mean binary cross-entropy. Predictions are clamped to [eps, 1-eps] before
/// the logarithm; the gradient is evaluated at the clamped value so saturated
/// predictions still receive a training signal.
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace spoofsmith
