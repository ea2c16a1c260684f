#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "spoofsmith/layers.hpp"
#include "spoofsmith/ops.hpp"
#include "spoofsmith/verify/gradcheck.hpp"
#include "spoofsmith/verify/verify.hpp"

namespace spoofsmith {

namespace {

using T64 = Tensor<double>;

struct Case {
  DifferentiableFn fn;
  std::vector<T64> inputs;
  std::size_t max_coords = 0;
};

using CaseFactory = std::function<Case(Rng&, std::size_t)>;

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

T64 random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0, bool grad = true) {
  auto t = T64::zeros(shape);
  for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
  t.set_requires_grad(grad);
  return t;
}

Shape random_shape(Rng& rng) {
  Shape s(pick(rng, 1, 4));
  for (auto& d : s) d = pick(rng, 1, 4);
  return s;
}

Case elementwise_case(Rng& rng, std::size_t i) {
  static constexpr ElementwiseOp kOps[] = {ElementwiseOp::Add,       ElementwiseOp::Sub,  ElementwiseOp::Mul,
                                           ElementwiseOp::Relu,      ElementwiseOp::Tanh, ElementwiseOp::Sigmoid,
                                           ElementwiseOp::LeakyRelu};
  const std::size_t variant = i % 10;
  const Shape shape = random_shape(rng);
  if (variant < 7) {
    const ElementwiseOp op = kOps[variant];
    const bool binary = variant < 3;
    std::vector<T64> in{random_tensor(rng, shape)};
    if (binary) in.push_back(random_tensor(rng, rng.bernoulli(0.25) ? Shape{1} : shape));
    const double alpha = rng.uniform(0.05, 0.5);
    return {[op, alpha](std::span<const T64> x) { return elementwise(op, x, alpha); }, in};
  }
  const double s = rng.uniform(-2.0, 2.0);
  if (variant == 7) return {[s](std::span<const T64> x) { return add_scalar(x[0], s); }, {random_tensor(rng, shape)}};
  if (variant == 8) return {[s](std::span<const T64> x) { return mul_scalar(x[0], s); }, {random_tensor(rng, shape)}};
  // Reductions and reshapes composed with a nonlinearity.
  return {[](std::span<const T64> x) {
            const auto flat = reshape(tanh(x[0]), Shape{x[0].numel()});
            return add(mean(flat), mul(sum(flat), flat));
          },
          {random_tensor(rng, shape)}};
}

Case matmul_case(Rng& rng, std::size_t) {
  const std::size_t m = pick(rng, 1, 5), k = pick(rng, 1, 5), n = pick(rng, 1, 5);
  return {[](std::span<const T64> x) { return matmul(x[0], x[1]); },
          {random_tensor(rng, {m, k}), random_tensor(rng, {k, n})}};
}

Case dense_case(Rng& rng, std::size_t) {
  const std::size_t n = pick(rng, 1, 4), k = pick(rng, 1, 6), m = pick(rng, 1, 5);
  return {[](std::span<const T64> x) { return dense(x[0], x[1], x[2]); },
          {random_tensor(rng, {n, k}), random_tensor(rng, {k, m}), random_tensor(rng, {m})}};
}

Case conv2d_case(Rng& rng, std::size_t) {
  const std::size_t n = pick(rng, 1, 2), ci = pick(rng, 1, 3), co = pick(rng, 1, 3);
  const std::size_t k = pick(rng, 1, 3), stride = pick(rng, 1, 2), pad = pick(rng, 0, std::min<std::size_t>(1, k - 1));
  const std::size_t h = pick(rng, k, k + 4), w = pick(rng, k, k + 4);
  const bool bias = rng.bernoulli(0.5);
  std::vector<T64> in{random_tensor(rng, {n, ci, h, w}), random_tensor(rng, {co, ci, k, k})};
  if (bias) in.push_back(random_tensor(rng, {co}));
  return {[stride, pad](std::span<const T64> x) {
            return conv2d(x[0], Conv2dParams<double>{x[1], x.size() > 2 ? x[2] : T64{}, stride, pad});
          },
          in};
}

Case conv_transpose_case(Rng& rng, std::size_t) {
  const std::size_t n = pick(rng, 1, 2), ci = pick(rng, 1, 3), co = pick(rng, 1, 3);
  const std::size_t k = pick(rng, 1, 4), stride = pick(rng, 1, 2);
  std::size_t pad = pick(rng, 0, std::min<std::size_t>(1, k - 1));
  const std::size_t h = pick(rng, 1, 4), w = pick(rng, 1, 4);
  if ((std::min(h, w) - 1) * stride + k <= 2 * pad) pad = 0;
  const bool bias = rng.bernoulli(0.5);
  std::vector<T64> in{random_tensor(rng, {n, ci, h, w}), random_tensor(rng, {ci, co, k, k})};
  if (bias) in.push_back(random_tensor(rng, {co}));
  return {[stride, pad](std::span<const T64> x) {
            return conv_transpose2d(x[0], x[1], stride, pad, x.size() > 2 ? x[2] : T64{});
          },
          in};
}

Case maxpool_case(Rng& rng, std::size_t) {
  const std::size_t n = pick(rng, 1, 2), c = pick(rng, 1, 3), h = 2 * pick(rng, 1, 3), w = 2 * pick(rng, 1, 3);
  // Distinct values with gaps far wider than the difference step.
  auto x = T64::zeros({n, c, h, w});
  auto d = x.mutable_data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<double>(i) * 0.01 + rng.uniform(0.0, 0.001);
  for (std::size_t i = d.size(); i > 1; --i) std::swap(d[i - 1], d[rng.below(i)]);
  x.set_requires_grad(true);
  return {[](std::span<const T64> in) { return maxpool2d(in[0]); }, {x}};
}

Case batchnorm_case(Rng& rng, std::size_t i) {
  const bool train = i % 2 == 0;
  std::size_t n = pick(rng, 1, 3), c = pick(rng, 1, 3), h = pick(rng, 1, 3), w = pick(rng, 1, 3);
  if (n * h * w < 2) n = 2;
  std::vector<T64> in{random_tensor(rng, {n, c, h, w}, -2.0, 2.0), random_tensor(rng, {c}, 0.5, 1.5),
                      random_tensor(rng, {c})};
  const auto mean = random_tensor(rng, {c}, -0.5, 0.5, false);
  const auto var = random_tensor(rng, {c}, 0.5, 2.0, false);
  return {[train, mean, var](std::span<const T64> x) {
            BatchNormState<double> st{x[1], x[2], mean.detach(), var.detach()};
            return batchnorm2d(x[0], st, train ? BnMode::Train : BnMode::Eval);
          },
          in};
}

Case bce_case(Rng& rng, std::size_t i) {
  const std::size_t n = pick(rng, 1, 8);
  auto pred = random_tensor(rng, {n, 1}, 0.05, 0.95);
  auto target = random_tensor(rng, {n, 1}, 0.0, 1.0);
  if (i % 2 == 0) {
    for (double& t : target.mutable_data()) t = t < 0.5 ? 0.0 : 1.0;
  }
  return {[](std::span<const T64> x) { return bce_loss(x[0], x[1]); }, {pred, target}};
}

// conv-relu-pool x2, flatten, dense-relu, dense-sigmoid, BCE on 3x16x16.
Case classifier_case(Rng& rng, std::size_t) {
  const double s1 = 1.0 / std::sqrt(27.0), s2 = 1.0 / std::sqrt(36.0);
  std::vector<T64> in{random_tensor(rng, {2, 3, 16, 16}),
                      random_tensor(rng, {4, 3, 3, 3}, -s1, s1),
                      random_tensor(rng, {4}, -0.1, 0.1),
                      random_tensor(rng, {4, 4, 3, 3}, -s2, s2),
                      random_tensor(rng, {4}, -0.1, 0.1),
                      random_tensor(rng, {64, 8}, -0.125, 0.125),
                      random_tensor(rng, {8}, -0.1, 0.1),
                      random_tensor(rng, {8, 1}, -0.35, 0.35),
                      random_tensor(rng, {1}, -0.1, 0.1)};
  auto target = T64::zeros({2, 1});
  target.mutable_data()[0] = 1.0;
  return {[target](std::span<const T64> x) {
            auto h = maxpool2d(relu(conv2d(x[0], Conv2dParams<double>{x[1], x[2], 1, 1})));
            h = maxpool2d(relu(conv2d(h, Conv2dParams<double>{x[3], x[4], 1, 1})));
            h = relu(dense(flatten(h), x[5], x[6]));
            return bce_loss(sigmoid(dense(h, x[7], x[8])), target);
          },
          in, 64};
}

CheckResult run_op(const std::string& name, const CaseFactory& factory, const VerifyOptions& options,
                   std::uint64_t tag) {
  const auto start = std::chrono::steady_clock::now();
  const Rng root = Rng(options.seed).split(tag);
  std::size_t passed = 0;
  double worst = 0.0;
  std::size_t coords = 0;
  for (std::size_t i = 0; i < options.gradient_cases; ++i) {
    Rng rng = root.split(i);
    Case c = factory(rng, i);
    GradCheckOptions go;
    go.max_coords = c.max_coords;
    const auto r = check_gradients(c.fn, c.inputs, rng, go);
    passed += r.passed;
    worst = std::max(worst, r.max_rel_error);
    coords += r.coords_checked;
  }
  CheckResult res;
  res.suite = "gradient";
  res.name = name;
  res.passed = passed == options.gradient_cases;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu/%zu cases, %zu coords, max rel err %.3g", passed, options.gradient_cases, coords,
                worst);
  res.detail = buf;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace

std::vector<CheckResult> run_gradient_suite(const VerifyOptions& options) {
  const std::pair<const char*, CaseFactory> ops[] = {
      {"elementwise", elementwise_case}, {"matmul", matmul_case},
      {"dense", dense_case},             {"conv2d", conv2d_case},
      {"conv_transpose2d", conv_transpose_case}, {"maxpool2d", maxpool_case},
      {"batchnorm2d", batchnorm_case},   {"bce_loss", bce_case},
      {"classifier_3x16x16", classifier_case},
  };
  std::vector<CheckResult> out;
  std::uint64_t tag = 0;
  for (const auto& [name, factory] : ops) out.push_back(run_op(name, factory, options, ++tag));
  return out;
}

}  // namespace spoofsmith
