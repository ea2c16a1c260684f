#pragma once

#include <functional>
#include <span>
#include <vector>

#include "spoofsmith/rng.hpp"
#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

struct GradCheckOptions {
  double step = 1e-6;
  double tolerance = 1e-4;
  /// Relative error floor: |a - n| / max(|a|, |n|, floor).
  double floor = 1e-3;
  /// Coordinates checked per input; 0 checks all of them.
  std::size_t max_coords = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  bool passed = true;
};

using DifferentiableFn = std::function<Tensor<double>(std::span<const Tensor<double>>)>;

/// Compares reverse-mode gradients of L = sum(f(x) * R), R a fixed random
/// tensor, against central differences. Inputs flagged requires_grad are
/// checked; their storage is perturbed in place and restored.
GradCheckResult check_gradients(const DifferentiableFn& f, std::span<Tensor<double>> inputs, Rng& rng,
                                const GradCheckOptions& options = {});

}  // namespace spoofsmith
