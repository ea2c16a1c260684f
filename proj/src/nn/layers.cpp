#include "spoofsmith/layers.hpp"

#include <algorithm>
#include <cmath>

#include "conv_kernels.hpp"
#include "spoofsmith/gemm.hpp"

namespace spoofsmith {

using kernels::ConvGeometry;

std::size_t conv_output_dim(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (kernel == 0 || stride == 0) throw InvalidShapeError("kernel and stride must be positive");
  if (in + 2 * padding < kernel) {
    throw InvalidShapeError("kernel " + std::to_string(kernel) + " larger than padded input " +
                            std::to_string(in + 2 * padding));
  }
  return (in + 2 * padding - kernel) / stride + 1;
}

std::size_t conv_transpose_output_dim(std::size_t in, std::size_t kernel, std::size_t stride,
                                      std::size_t padding) {
  if (kernel == 0 || stride == 0 || in == 0) throw InvalidShapeError("kernel, stride and input must be positive");
  const long out = static_cast<long>((in - 1) * stride + kernel) - 2 * static_cast<long>(padding);
  if (out < 1) throw InvalidShapeError("transposed convolution output dimension " + std::to_string(out) + " < 1");
  return static_cast<std::size_t>(out);
}

namespace {

void require_rank4(const char* op, const Shape& s) {
  if (s.size() != 4) throw InvalidShapeError(std::string(op) + ": expected [n,c,h,w], got " + to_string(s));
}

template <typename T>
void check_bias(const char* op, const Tensor<T>& bias, std::size_t channels) {
  if (bias.defined() && bias.shape() != Shape{channels}) {
    throw InvalidShapeError(std::string(op) + ": bias shape " + to_string(bias.shape()) + ", expected [" +
                            std::to_string(channels) + "]");
  }
}

template <typename T>
void add_channel_bias(T* out, const T* bias, std::size_t channels, std::size_t plane) {
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += bias[c];
}

template <typename T>
void accumulate_channel_sums(const T* g, std::size_t n, std::size_t channels, std::size_t plane, T* dst) {
  for (std::size_t c = 0; c < channels; ++c) {
    T acc = 0;
    for (std::size_t b = 0; b < n; ++b) {
      const T* p = g + (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    }
    dst[c] += acc;
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Conv2dParams<T>& params) {
  require_rank4("conv2d", input.shape());
  require_rank4("conv2d weight", params.weight.shape());
  const Tensor<T>& weight = params.weight;
  const std::size_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t cout = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != cin) {
    throw InvalidShapeError("conv2d: input has " + std::to_string(cin) + " channels, weight expects " +
                            std::to_string(weight.dim(1)));
  }
  check_bias("conv2d", params.bias, cout);
  const ConvGeometry geo{cin, h, w, kh, kw, params.stride, params.padding,
                         conv_output_dim(h, kh, params.stride, params.padding),
                         conv_output_dim(w, kw, params.stride, params.padding)};
  const std::size_t patch = geo.patch(), positions = geo.positions();
  const std::size_t in_image = cin * h * w, out_image = cout * positions;

  std::vector<T> out(n * out_image, T(0));
  const T* x = input.data().data();
  const T* wt = weight.data().data();
  const bool parallel = n > 1 && kernels::worker_count() > 1;
#pragma omp parallel num_threads(kernels::worker_count()) if (parallel)
  {
    std::vector<T> col(patch * positions);
#pragma omp for schedule(static)
    for (long long b = 0; b < static_cast<long long>(n); ++b) {
      kernels::im2col(geo, x + b * in_image, col.data());
      T* o = out.data() + b * out_image;
      kernels::gemm_accumulate(cout, positions, patch, wt, patch, col.data(), positions, o, positions);
      if (params.bias.defined()) add_channel_bias(o, params.bias.data().data(), cout, positions);
    }
  }

  std::vector<Tensor<T>> inputs{input, weight};
  if (params.bias.defined()) inputs.push_back(params.bias);
  const bool has_bias = params.bias.defined();
  return Tensor<T>::from_op(
      "conv2d", {n, cout, geo.out_h, geo.out_w}, std::move(out), std::move(inputs),
      [input, weight, geo, n, cout, has_bias](std::span<const T> g, const GradSink<T>& sink) {
        const std::size_t patch = geo.patch(), positions = geo.positions();
        const std::size_t in_image = geo.channels * geo.height * geo.width, out_image = cout * positions;
        if (T* dx = sink[0]) {
          std::vector<T> wt_t(patch * cout);
          kernels::transpose(cout, patch, weight.data().data(), wt_t.data());
          const bool parallel = n > 1 && kernels::worker_count() > 1;
#pragma omp parallel num_threads(kernels::worker_count()) if (parallel)
          {
            std::vector<T> dcol(patch * positions);
#pragma omp for schedule(static)
            for (long long b = 0; b < static_cast<long long>(n); ++b) {
              std::fill(dcol.begin(), dcol.end(), T(0));
              kernels::gemm_accumulate(patch, positions, cout, wt_t.data(), cout, g.data() + b * out_image,
                                       positions, dcol.data(), positions);
              kernels::col2im(geo, dcol.data(), dx + b * in_image);
            }
          }
        }
        if (T* dw = sink[1]) {
          std::vector<T> colt(positions * patch);
          for (std::size_t b = 0; b < n; ++b) {
            kernels::im2col_t(geo, input.data().data() + b * in_image, colt.data());
            kernels::gemm_accumulate(cout, patch, positions, g.data() + b * out_image, positions, colt.data(),
                                     patch, dw, patch);
          }
        }
        if (has_bias) {
          if (T* db = sink[2]) accumulate_channel_sums(g.data(), n, cout, positions, db);
        }
      });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, std::size_t stride,
                           std::size_t padding, const Tensor<T>& bias) {
  require_rank4("conv_transpose2d", input.shape());
  require_rank4("conv_transpose2d weight", weight.shape());
  const std::size_t n = input.dim(0), cin = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (weight.dim(0) != cin) {
    throw InvalidShapeError("conv_transpose2d: input has " + std::to_string(cin) + " channels, weight expects " +
                            std::to_string(weight.dim(0)));
  }
  const std::size_t cout = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
  check_bias("conv_transpose2d", bias, cout);
  const std::size_t oh = conv_transpose_output_dim(h, kh, stride, padding);
  const std::size_t ow = conv_transpose_output_dim(w, kw, stride, padding);
  // The equivalent forward convolution maps the [cout, oh, ow] output onto
  // the [cin, h, w] input grid.
  const ConvGeometry geo{cout, oh, ow, kh, kw, stride, padding, h, w};
  const std::size_t patch = geo.patch(), positions = geo.positions();
  const std::size_t in_image = cin * positions, out_image = cout * oh * ow;

  std::vector<T> wt_t(patch * cin);
  kernels::transpose(cin, patch, weight.data().data(), wt_t.data());
  std::vector<T> out(n * out_image, T(0));
  const T* x = input.data().data();
  const bool parallel = n > 1 && kernels::worker_count() > 1;
#pragma omp parallel num_threads(kernels::worker_count()) if (parallel)
  {
    std::vector<T> col(patch * positions);
#pragma omp for schedule(static)
    for (long long b = 0; b < static_cast<long long>(n); ++b) {
      std::fill(col.begin(), col.end(), T(0));
      kernels::gemm_accumulate(patch, positions, cin, wt_t.data(), cin, x + b * in_image, positions, col.data(),
                               positions);
      T* o = out.data() + b * out_image;
      kernels::col2im(geo, col.data(), o);
      if (bias.defined()) add_channel_bias(o, bias.data().data(), cout, oh * ow);
    }
  }

  std::vector<Tensor<T>> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return Tensor<T>::from_op(
      "conv_transpose2d", {n, cout, oh, ow}, std::move(out), std::move(inputs),
      [input, weight, geo, n, cin, has_bias](std::span<const T> g, const GradSink<T>& sink) {
        const std::size_t patch = geo.patch(), positions = geo.positions();
        const std::size_t cout = geo.channels, plane = geo.height * geo.width;
        const std::size_t in_image = cin * positions, out_image = cout * plane;
        if (T* dx = sink[0]) {
          const bool parallel = n > 1 && kernels::worker_count() > 1;
#pragma omp parallel num_threads(kernels::worker_count()) if (parallel)
          {
            std::vector<T> col(patch * positions);
#pragma omp for schedule(static)
            for (long long b = 0; b < static_cast<long long>(n); ++b) {
              kernels::im2col(geo, g.data() + b * out_image, col.data());
              kernels::gemm_accumulate(cin, positions, patch, weight.data().data(), patch, col.data(), positions,
                                       dx + b * in_image, positions);
            }
          }
        }
        if (T* dw = sink[1]) {
          std::vector<T> colt(positions * patch);
          for (std::size_t b = 0; b < n; ++b) {
            kernels::im2col_t(geo, g.data() + b * out_image, colt.data());
            kernels::gemm_accumulate(cin, patch, positions, input.data().data() + b * in_image, positions,
                                     colt.data(), patch, dw, patch);
          }
        }
        if (has_bias) {
          if (T* db = sink[2]) accumulate_channel_sums(g.data(), n, cout, plane, db);
        }
      });
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input) {
  require_rank4("maxpool2d", input.shape());
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw InvalidShapeError("maxpool2d: spatial dims must be even, got " + to_string(input.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  std::vector<T> out(n * c * oh * ow);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const T* x = input.data().data();
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t top = base + (2 * oy) * w + 2 * ox;
        const std::size_t window[4] = {top, top + 1, top + w, top + w + 1};
        std::size_t best = window[0];
        for (std::size_t i = 1; i < 4; ++i)
          if (x[window[i]] > x[best]) best = window[i];
        const std::size_t o = (plane * oh + oy) * ow + ox;
        out[o] = x[best];
        (*argmax)[o] = best;
      }
    }
  }
  return Tensor<T>::from_op("maxpool2d", {n, c, oh, ow}, std::move(out), {input},
                            [argmax](std::span<const T> g, const GradSink<T>& sink) {
                              if (T* dx = sink[0])
                                for (std::size_t o = 0; o < g.size(); ++o) dx[(*argmax)[o]] += g[o];
                            });
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& input, BatchNormState<T>& state, BnMode mode) {
  require_rank4("batchnorm2d", input.shape());
  const std::size_t n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  for (const Tensor<T>* t : {&state.gamma, &state.beta, &state.running_mean, &state.running_var}) {
    if (t->shape() != Shape{c}) {
      throw InvalidShapeError("batchnorm2d: state tensors must be [" + std::to_string(c) + "], got " +
                              to_string(t->shape()));
    }
  }
  if (!(state.eps > 0.0)) throw InvalidArgumentError("batchnorm2d: eps must be positive");
  const std::size_t count = n * plane;
  if (mode == BnMode::Train && count < 2) {
    throw DegenerateBatchError("batchnorm2d: train mode needs at least 2 values per channel, got " +
                               std::to_string(count));
  }

  const T* x = input.data().data();
  auto gamma = state.gamma.data();
  auto beta = state.beta.data();
  auto xhat = std::make_shared<std::vector<T>>(input.numel());
  auto inv_std = std::make_shared<std::vector<double>>(c);
  std::vector<T> out(input.numel());

  for (std::size_t ch = 0; ch < c; ++ch) {
    double mu, var;
    if (mode == BnMode::Train) {
      double s = 0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < plane; ++i) s += x[(b * c + ch) * plane + i];
      mu = s / static_cast<double>(count);
      double sq = 0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = x[(b * c + ch) * plane + i] - mu;
          sq += d * d;
        }
      var = sq / static_cast<double>(count);
      auto rm = state.running_mean.mutable_data();
      auto rv = state.running_var.mutable_data();
      const double m = state.momentum;
      rm[ch] = static_cast<T>((1.0 - m) * rm[ch] + m * mu);
      rv[ch] = static_cast<T>((1.0 - m) * rv[ch] + m * var * static_cast<double>(count) / static_cast<double>(count - 1));
    } else {
      mu = state.running_mean.data()[ch];
      var = state.running_var.data()[ch];
    }
    const double is = 1.0 / std::sqrt(var + state.eps);
    (*inv_std)[ch] = is;
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t i = 0; i < plane; ++i) {
        const std::size_t idx = (b * c + ch) * plane + i;
        const T xh = static_cast<T>((x[idx] - mu) * is);
        (*xhat)[idx] = xh;
        out[idx] = gamma[ch] * xh + beta[ch];
      }
    }
  }

  Tensor<T> gamma_t = state.gamma;
  return Tensor<T>::from_op(
      "batchnorm2d", input.shape(), std::move(out), {input, state.gamma, state.beta},
      [xhat, inv_std, gamma_t, n, c, plane, mode](std::span<const T> g, const GradSink<T>& sink) {
        auto gamma = gamma_t.data();
        const double count = static_cast<double>(n * plane);
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sum_g = 0, sum_gx = 0;
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < plane; ++i) {
              const std::size_t idx = (b * c + ch) * plane + i;
              sum_g += g[idx];
              sum_gx += static_cast<double>(g[idx]) * (*xhat)[idx];
            }
          if (T* dgamma = sink[1]) dgamma[ch] += static_cast<T>(sum_gx);
          if (T* dbeta = sink[2]) dbeta[ch] += static_cast<T>(sum_g);
          T* dx = sink[0];
          if (!dx) continue;
          const double gm = gamma[ch], is = (*inv_std)[ch];
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < plane; ++i) {
              const std::size_t idx = (b * c + ch) * plane + i;
              if (mode == BnMode::Train) {
                const double v = count * g[idx] - sum_g - (*xhat)[idx] * sum_gx;
                dx[idx] += static_cast<T>(gm * is * v / count);
              } else {
                dx[idx] += static_cast<T>(gm * is * g[idx]);
              }
            }
        }
      });
}

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.rank() != 2 || weight.rank() != 2 || input.dim(1) != weight.dim(0)) {
    throw InvalidShapeError("dense: cannot apply weight " + to_string(weight.shape()) + " to input " +
                            to_string(input.shape()));
  }
  const std::size_t n = input.dim(0), k = input.dim(1), m = weight.dim(1);
  if (bias.shape() != Shape{m}) {
    throw InvalidShapeError("dense: bias shape " + to_string(bias.shape()) + ", expected [" + std::to_string(m) + "]");
  }
  std::vector<T> out(n * m, T(0));
  kernels::gemm_accumulate(n, m, k, input.data().data(), k, weight.data().data(), m, out.data(), m);
  auto b = bias.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < m; ++j) out[r * m + j] += b[j];
  return Tensor<T>::from_op("dense", {n, m}, std::move(out), {input, weight, bias},
                            [input, weight, n, k, m](std::span<const T> g, const GradSink<T>& sink) {
                              if (T* dx = sink[0]) {
                                std::vector<T> wt(m * k);
                                kernels::transpose(k, m, weight.data().data(), wt.data());
                                kernels::gemm_accumulate(n, k, m, g.data(), m, wt.data(), k, dx, k);
                              }
                              if (T* dw = sink[1]) {
                                std::vector<T> xt(k * n);
                                kernels::transpose(n, k, input.data().data(), xt.data());
                                kernels::gemm_accumulate(k, m, n, xt.data(), n, g.data(), m, dw, m);
                              }
                              if (T* db = sink[2]) {
                                for (std::size_t j = 0; j < m; ++j) {
                                  T acc = 0;
                                  for (std::size_t r = 0; r < n; ++r) acc += g[r * m + j];
                                  db[j] += acc;
                                }
                              }
                            });
}

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw InvalidShapeError("bce_loss: prediction " + to_string(pred.shape()) + " vs target " +
                            to_string(target.shape()));
  }
  const std::size_t n = pred.numel();
  const double lo = kBceEps, hi = 1.0 - kBceEps;
  auto p = pred.data();
  auto t = target.data();
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = std::clamp(static_cast<double>(p[i]), lo, hi);
    total -= t[i] * std::log(pc) + (1.0 - t[i]) * std::log(1.0 - pc);
  }
  const T loss = static_cast<T>(total / static_cast<double>(n));
  return Tensor<T>::from_op("bce_loss", {1}, {loss}, {pred, target},
                            [pred, target, n, lo, hi](std::span<const T> g, const GradSink<T>& sink) {
                              auto p = pred.data();
                              auto t = target.data();
                              const double scale = static_cast<double>(g[0]) / static_cast<double>(n);
                              T* dp = sink[0];
                              T* dt = sink[1];
                              for (std::size_t i = 0; i < n; ++i) {
                                const double pc = std::clamp(static_cast<double>(p[i]), lo, hi);
                                if (dp) dp[i] += static_cast<T>(scale * (pc - t[i]) / (pc * (1.0 - pc)));
                                if (dt) dt[i] += static_cast<T>(-scale * (std::log(pc) - std::log(1.0 - pc)));
                              }
                            });
}

#define SPOOFSMITH_INSTANTIATE(T)                                                                         \
  template Tensor<T> conv2d(const Tensor<T>&, const Conv2dParams<T>&);                                    \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t,      \
                                      const Tensor<T>&);                                                  \
  template Tensor<T> maxpool2d(const Tensor<T>&);                                                         \
  template Tensor<T> batchnorm2d(const Tensor<T>&, BatchNormState<T>&, BnMode);                           \
  template Tensor<T> dense(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> bce_loss(const Tensor<T>&, const Tensor<T>&);

SPOOFSMITH_INSTANTIATE(float)
SPOOFSMITH_INSTANTIATE(double)

#undef SPOOFSMITH_INSTANTIATE

}  // namespace spoofsmith
