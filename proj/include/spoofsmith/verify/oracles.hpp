#pragma once

// Straightforward reference implementations used to cross-check the fast
// paths. Nothing here is tuned; clarity wins.

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdint>
#include <span>
#include <vector>

#include "spoofsmith/eval.hpp"
#include "spoofsmith/tensor.hpp"

namespace spoofsmith::oracle {

/// Nested-loop cross-correlation. Accumulates over (ci, ky, kx) in that order
/// starting from zero, then adds the bias.
template <typename T>
Tensor<T> naive_conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, std::size_t stride,
                       std::size_t padding) {
  const std::size_t n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const std::size_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
  const std::size_t ow = (wd + 2 * padding - kw) / stride + 1;
  auto out = Tensor<T>::zeros({n, co, oh, ow});
  auto o = out.mutable_data();
  const auto xd = x.data();
  const auto wdat = w.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t c = 0; c < co; ++c)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          T acc = 0;
          for (std::size_t i = 0; i < ci; ++i)
            for (std::size_t ky = 0; ky < kh; ++ky)
              for (std::size_t kx = 0; kx < kw; ++kx) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(padding);
                const auto ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(padding);
                const T v = (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(h) ||
                             ix >= static_cast<std::ptrdiff_t>(wd))
                                ? T(0)
                                : xd[((b * ci + i) * h + static_cast<std::size_t>(iy)) * wd + static_cast<std::size_t>(ix)];
                acc += wdat[((c * ci + i) * kh + ky) * kw + kx] * v;
              }
          if (bias.defined()) acc += bias.data()[c];
          o[((b * co + c) * oh + oy) * ow + ox] = acc;
        }
  return out;
}

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> var;  // biased
};

/// Two-pass per-channel mean and (biased) variance of an [n, c, h, w] tensor.
template <typename T>
ChannelStats two_pass_stats(const Tensor<T>& x) {
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const auto d = x.data();
  ChannelStats s{std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
  const double count = static_cast<double>(n * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t i = 0; i < hw; ++i) sum += d[(b * c + ch) * hw + i];
    s.mean[ch] = sum / count;
    double sq = 0;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t i = 0; i < hw; ++i) {
        const double dev = d[(b * c + ch) * hw + i] - s.mean[ch];
        sq += dev * dev;
      }
    s.var[ch] = sq / count;
  }
  return s;
}

/// Probability that a random bona-fide score outranks a random attack score,
/// ties counted as one half. O(n^2).
inline double mann_whitney_auc(const ScoredSet& set) {
  double wins = 0;
  std::size_t pairs = 0;
  for (const auto& p : set) {
    if (p.label != Label::BonaFide) continue;
    for (const auto& q : set) {
      if (q.label != Label::Attack) continue;
      ++pairs;
      if (p.score > q.score) {
        wins += 1;
      } else if (p.score == q.score) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

/// ROC by enumerating every candidate threshold (each distinct score plus
/// +inf) and counting from scratch. O(n^2).
inline std::vector<RocPoint> brute_force_roc(const ScoredSet& set) {
  std::vector<double> thresholds{INFINITY};
  for (const auto& s : set) thresholds.push_back(s.score);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double pos = 0, neg = 0;
  for (const auto& s : set) (s.label == Label::BonaFide ? pos : neg) += 1;
  std::vector<RocPoint> out;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (const auto& s : set) {
      if (s.score >= t) (s.label == Label::BonaFide ? tp : fp) += 1;
    }
    out.push_back({fp / neg, tp / pos});
  }
  return out;
}

/// Scalar Adam on f(p) = p^2 (gradient 2p), returning p after each step.
inline std::vector<double> scalar_adam_on_square(double p, int steps, double lr, double beta1, double beta2,
                                                 double eps) {
  std::vector<double> trajectory;
  double m = 0, v = 0;
  for (int t = 1; t <= steps; ++t) {
    const double g = 2 * p;
    m = beta1 * m + (1 - beta1) * g;
    v = beta2 * v + (1 - beta2) * g * g;
    const double m_hat = m / (1 - std::pow(beta1, t));
    const double v_hat = v / (1 - std::pow(beta2, t));
    p -= lr * m_hat / (std::sqrt(v_hat) + eps);
    trajectory.push_back(p);
  }
  return trajectory;
}

}  // namespace spoofsmith::oracle
