#include "spoofsmith/verify/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spoofsmith/ops.hpp"

namespace spoofsmith {

namespace {

double weighted_sum(const Tensor<double>& out, const Tensor<double>& r) {
  const auto o = out.data();
  const auto w = r.data();
  double s = 0;
  for (std::size_t i = 0; i < o.size(); ++i) s += o[i] * w[i];
  return s;
}

}  // namespace

GradCheckResult check_gradients(const DifferentiableFn& f, std::span<Tensor<double>> inputs, Rng& rng,
                                const GradCheckOptions& options) {
  const auto probe = [&] {
    NoGradGuard guard;
    return f(inputs);
  }();
  auto r = Tensor<double>::zeros(probe.shape());
  for (double& v : r.mutable_data()) v = rng.uniform(-1.0, 1.0);

  const auto out = f(inputs);
  const auto grads = backward(sum(mul(out, r)));

  GradCheckResult result;
  for (auto& x : inputs) {
    if (!x.requires_grad()) continue;
    const auto* g = grads.find(x.id());
    std::vector<std::size_t> coords(x.numel());
    std::iota(coords.begin(), coords.end(), 0);
    if (options.max_coords != 0 && coords.size() > options.max_coords) {
      for (std::size_t i = 0; i < options.max_coords; ++i) {
        std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
      }
      coords.resize(options.max_coords);
    }
    auto data = x.mutable_data();
    for (std::size_t k : coords) {
      const double saved = data[k];
      double plus, minus;
      {
        NoGradGuard guard;
        data[k] = saved + options.step;
        plus = weighted_sum(f(inputs), r);
        data[k] = saved - options.step;
        minus = weighted_sum(f(inputs), r);
      }
      data[k] = saved;
      const double numeric = (plus - minus) / (2 * options.step);
      const double analytic = g ? g->data()[k] : 0.0;
      const double err =
          std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), options.floor});
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.coords_checked;
      if (!(err < options.tolerance)) result.passed = false;
    }
  }
  return result;
}

}  // namespace spoofsmith
