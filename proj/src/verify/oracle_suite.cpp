#include <chrono>
#include <cmath>
#include <cstdio>

#include "spoofsmith/eval.hpp"
#include "spoofsmith/layers.hpp"
#include "spoofsmith/ops.hpp"
#include "spoofsmith/optim.hpp"
#include "spoofsmith/rng.hpp"
#include "spoofsmith/verify/oracles.hpp"
#include "spoofsmith/verify/verify.hpp"

namespace spoofsmith {

namespace {

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

template <typename T>
Tensor<T> random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  auto t = Tensor<T>::zeros(shape);
  for (T& v : t.mutable_data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename Fn>
CheckResult timed(const char* name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.suite = "oracle";
  r.name = name;
  fn(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string describe(const char* fmt, double a, double b = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

struct ConvConfig {
  std::size_t n, ci, co, k, stride, pad, h, w;
};

ConvConfig random_conv(Rng& rng, bool exact_transpose) {
  ConvConfig c{};
  c.n = pick(rng, 1, 3);
  c.ci = pick(rng, 1, 8);
  c.co = pick(rng, 1, 20);
  c.k = pick(rng, 1, 5);
  c.stride = pick(rng, 1, 3);
  c.pad = pick(rng, 0, c.k - 1);
  c.h = pick(rng, c.k, c.k + 12);
  c.w = pick(rng, c.k, c.k + 12);
  if (exact_transpose) {
    // Grow the input until every row/column is covered by a window, so the
    // transposed output has the input's size.
    while ((c.h + 2 * c.pad - c.k) % c.stride != 0) ++c.h;
    while ((c.w + 2 * c.pad - c.k) % c.stride != 0) ++c.w;
  }
  return c;
}

}  // namespace

std::vector<CheckResult> run_oracle_suite(const VerifyOptions& options) {
  std::vector<CheckResult> out;
  const Rng root = Rng(options.seed).split(0x0a);

  out.push_back(timed("conv2d_vs_naive_loops_f32_exact", [&](CheckResult& r) {
    std::size_t mismatches = 0, cases = 100;
    for (std::size_t i = 0; i < cases; ++i) {
      Rng rng = root.split(100 + i);
      const auto c = random_conv(rng, false);
      const auto x = random_tensor<float>(rng, {c.n, c.ci, c.h, c.w});
      const auto w = random_tensor<float>(rng, {c.co, c.ci, c.k, c.k});
      const auto b = rng.bernoulli(0.5) ? random_tensor<float>(rng, {c.co}) : Tensor<float>{};
      const auto fast = conv2d(x, Conv2dParams<float>{w, b, c.stride, c.pad});
      const auto ref = oracle::naive_conv2d(x, w, b, c.stride, c.pad);
      if (fast.shape() != ref.shape()) {
        ++mismatches;
        continue;
      }
      for (std::size_t j = 0; j < ref.numel(); ++j) mismatches += fast.data()[j] != ref.data()[j];
    }
    r.passed = mismatches == 0;
    r.detail = std::to_string(cases) + " configs, " + std::to_string(mismatches) + " differing elements";
  }));

  out.push_back(timed("conv_transpose2d_vs_conv2d_adjoint", [&](CheckResult& r) {
    double worst = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      Rng rng = root.split(200 + i);
      const auto c = random_conv(rng, true);
      auto x = random_tensor<float>(rng, {c.n, c.ci, c.h, c.w});
      x.set_requires_grad(true);
      const auto w = random_tensor<float>(rng, {c.co, c.ci, c.k, c.k});
      const auto y = conv2d(x, Conv2dParams<float>{w, {}, c.stride, c.pad});
      const auto probe = random_tensor<float>(rng, y.shape());
      const auto grads = backward(sum(mul(y, probe)));
      const auto adjoint = grads.at(x);
      const auto transposed = conv_transpose2d(probe, w, c.stride, c.pad);
      if (transposed.shape() != adjoint.shape()) {
        worst = INFINITY;
        break;
      }
      for (std::size_t j = 0; j < adjoint.numel(); ++j) {
        worst = std::max(worst, static_cast<double>(std::fabs(adjoint.data()[j] - transposed.data()[j])));
      }
    }
    r.passed = worst < 1e-5;
    r.detail = describe("100 configs, max abs diff %.3g (tol 1e-5)", worst);
  }));

  out.push_back(timed("batchnorm_vs_two_pass_statistics", [&](CheckResult& r) {
    double worst = 0;
    for (std::size_t i = 0; i < 100; ++i) {
      Rng rng = root.split(300 + i);
      const std::size_t n = pick(rng, 2, 6), c = pick(rng, 1, 6), h = pick(rng, 1, 8), w = pick(rng, 1, 8);
      const double offset = rng.uniform(-5, 5), scale = rng.uniform(0.1, 4);
      const auto x = random_tensor<double>(rng, {n, c, h, w}, offset - scale, offset + scale);
      BatchNormState<double> st{random_tensor<double>(rng, {c}, 0.5, 1.5), random_tensor<double>(rng, {c}),
                                Tensor<double>::zeros({c}), Tensor<double>::full({c}, 1.0)};
      const auto y = batchnorm2d(x, st, BnMode::Train);
      const auto stats = oracle::two_pass_stats(x);
      const std::size_t hw = h * w, count = n * hw;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
          for (std::size_t p = 0; p < hw; ++p) {
            const std::size_t at = (b * c + ch) * hw + p;
            const double ref = (x.data()[at] - stats.mean[ch]) / std::sqrt(stats.var[ch] + st.eps) * st.gamma.data()[ch] +
                               st.beta.data()[ch];
            worst = std::max(worst, std::fabs(ref - y.data()[at]));
          }
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double unbiased = stats.var[ch] * static_cast<double>(count) / static_cast<double>(count - 1);
        worst = std::max(worst, std::fabs(st.running_mean.data()[ch] - 0.1 * stats.mean[ch]));
        worst = std::max(worst, std::fabs(st.running_var.data()[ch] - (0.9 + 0.1 * unbiased)));
      }
    }
    r.passed = worst < 1e-6;
    r.detail = describe("100 batches, max abs diff %.3g (tol 1e-6)", worst);
  }));

  out.push_back(timed("auc_vs_mann_whitney", [&](CheckResult& r) {
    double worst = 0;
    std::size_t roc_mismatch = 0;
    for (std::size_t i = 0; i < options.auc_sets; ++i) {
      Rng rng = root.split(400 + i);
      const std::size_t n = pick(rng, 2, 64);
      const bool quantize = rng.bernoulli(0.5);
      ScoredSet set(n);
      for (std::size_t j = 0; j < n; ++j) {
        double s = rng.uniform();
        if (quantize) s = std::floor(s * 8) / 8;
        set[j] = {s, rng.bernoulli(0.5) ? Label::BonaFide : Label::Attack};
      }
      set[0].label = Label::BonaFide;
      set[1].label = Label::Attack;
      const auto roc = roc_curve(set);
      worst = std::max(worst, std::fabs(auc(roc) - oracle::mann_whitney_auc(set)));
      roc_mismatch += roc != oracle::brute_force_roc(set);
    }
    r.passed = worst < 1e-9 && roc_mismatch == 0;
    r.detail = describe("%.0f sets, max |auc - U| %.3g (tol 1e-9)", static_cast<double>(options.auc_sets), worst) +
               ", " + std::to_string(roc_mismatch) + " ROC mismatches vs threshold enumeration";
  }));

  out.push_back(timed("adam_vs_scalar_reference_f64", [&](CheckResult& r) {
    double worst = 0;
    for (int trial = 0; trial < 4; ++trial) {
      Rng rng = root.split(500 + static_cast<std::uint64_t>(trial));
      const AdamConfig cfg{rng.uniform(1e-3, 0.2), rng.uniform(0.3, 0.95), rng.uniform(0.9, 0.9999), 1e-8};
      const double p0 = rng.uniform(-3, 3);
      std::map<std::string, Tensor<double>> params{{"p", Tensor<double>::scalar(p0)}};
      auto state = AdamState<double>::for_params(params);
      const auto ref = oracle::scalar_adam_on_square(p0, 10, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps);
      for (int t = 0; t < 10; ++t) {
        GradientMap<double> g;
        g.insert(params.at("p").id(), Tensor<double>::scalar(2 * params.at("p").item()));
        adam_step(params, g, state, cfg);
        worst = std::max(worst, std::fabs(params.at("p").item() - ref[static_cast<std::size_t>(t)]));
      }
    }
    r.passed = worst < 1e-10;
    r.detail = describe("4 trajectories x 10 steps, max abs diff %.3g (tol 1e-10)", worst);
  }));

  return out;
}

}  // namespace spoofsmith
