#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamMoments {
  Tensor<T> m;
  Tensor<T> v;
};

template <typename T>
struct AdamState {
  std::map<std::string, AdamMoments<T>> moments;
  std::uint64_t step = 0;

  /// Zeroed moment buffers for every parameter.
  static AdamState for_params(const std::map<std::string, Tensor<T>>& params);
};

/// One bias-corrected Adam update of every parameter that has a gradient in
/// `grads`. The step counter advances once per call.
template <typename T>
void adam_step(std::map<std::string, Tensor<T>>& params, const GradientMap<T>& grads, AdamState<T>& state,
               const AdamConfig& config);

}  // namespace spoofsmith
