#include "spoofsmith/ops.hpp"

#include <cmath>

#include "spoofsmith/gemm.hpp"

namespace spoofsmith {

namespace {

enum class Broadcast { None, Left, Right };

template <typename T>
Broadcast binary_layout(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() == b.shape()) return Broadcast::None;
  if (b.numel() == 1) return Broadcast::Right;
  if (a.numel() == 1) return Broadcast::Left;
  throw InvalidShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                          to_string(b.shape()));
}

// Reduces a full-size gradient into a broadcast scalar operand, or adds it
// elementwise into an equal-shaped one.
template <typename T>
void accumulate_into(T* dst, bool scalar, std::span<const T> g, T sign = T(1)) {
  if (!dst) return;
  if (scalar) {
    T total = 0;
    for (T v : g) total += v;
    dst[0] += sign * total;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += sign * g[i];
  }
}

template <typename T, typename F>
Tensor<T> binary(const char* op, const Tensor<T>& a, const Tensor<T>& b, F f, BackwardFn<T> bwd) {
  const Broadcast layout = binary_layout(op, a, b);
  const Tensor<T>& big = layout == Broadcast::Left ? b : a;
  std::vector<T> out(big.numel());
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T av = layout == Broadcast::Left ? ad[0] : ad[i];
    const T bv = layout == Broadcast::Right ? bd[0] : bd[i];
    out[i] = f(av, bv);
  }
  return Tensor<T>::from_op(op, big.shape(), std::move(out), {a, b}, std::move(bwd));
}

template <typename T, typename F, typename G>
Tensor<T> unary(const char* op, const Tensor<T>& x, F f, G dfdx_from_out) {
  auto xd = x.data();
  std::vector<T> out(xd.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xd[i]);
  // The backward closure reads input and output values through the saved
  // input tensor and a copy of the output.
  auto saved = std::make_shared<std::vector<T>>(out);
  Tensor<T> in = x;
  return Tensor<T>::from_op(op, x.shape(), std::move(out), {x},
                            [in, saved, dfdx_from_out](std::span<const T> g, const GradSink<T>& sink) {
                              T* dx = sink[0];
                              if (!dx) return;
                              auto xv = in.data();
                              const auto& yv = *saved;
                              for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * dfdx_from_out(xv[i], yv[i]);
                            });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const bool sa = a.numel() == 1 && a.shape() != b.shape();
  const bool sb = b.numel() == 1 && a.shape() != b.shape();
  return binary<T>("add", a, b, [](T x, T y) { return x + y; },
                   [sa, sb](std::span<const T> g, const GradSink<T>& sink) {
                     accumulate_into<T>(sink[0], sa, g);
                     accumulate_into<T>(sink[1], sb, g);
                   });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  const bool sa = a.numel() == 1 && a.shape() != b.shape();
  const bool sb = b.numel() == 1 && a.shape() != b.shape();
  return binary<T>("sub", a, b, [](T x, T y) { return x - y; },
                   [sa, sb](std::span<const T> g, const GradSink<T>& sink) {
                     accumulate_into<T>(sink[0], sa, g);
                     accumulate_into<T>(sink[1], sb, g, T(-1));
                   });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const bool sa = a.numel() == 1 && a.shape() != b.shape();
  const bool sb = b.numel() == 1 && a.shape() != b.shape();
  return binary<T>("mul", a, b, [](T x, T y) { return x * y; },
                   [a, b, sa, sb](std::span<const T> g, const GradSink<T>& sink) {
                     auto ad = a.data();
                     auto bd = b.data();
                     const std::size_t n = g.size();
                     if (T* da = sink[0]) {
                       if (sa) {
                         T acc = 0;
                         for (std::size_t i = 0; i < n; ++i) acc += g[i] * bd[i];
                         da[0] += acc;
                       } else {
                         for (std::size_t i = 0; i < n; ++i) da[i] += g[i] * (sb ? bd[0] : bd[i]);
                       }
                     }
                     if (T* db = sink[1]) {
                       if (sb) {
                         T acc = 0;
                         for (std::size_t i = 0; i < n; ++i) acc += g[i] * ad[i];
                         db[0] += acc;
                       } else {
                         for (std::size_t i = 0; i < n; ++i) db[i] += g[i] * (sa ? ad[0] : ad[i]);
                       }
                     }
                   });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  return unary<T>("add_scalar", a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  return unary<T>("mul_scalar", a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary<T>("relu", x, [](T v) { return v > T(0) ? v : T(0); },
                  [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T alpha) {
  return unary<T>("leaky_relu", x, [alpha](T v) { return v > T(0) ? v : alpha * v; },
                  [alpha](T v, T) { return v > T(0) ? T(1) : alpha; });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary<T>("tanh", x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary<T>("sigmoid", x,
                  [](T v) {
                    if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
                    const T e = std::exp(v);
                    return e / (T(1) + e);
                  },
                  [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> elementwise(ElementwiseOp op, std::span<const Tensor<T>> inputs, T alpha) {
  const bool is_binary = op == ElementwiseOp::Add || op == ElementwiseOp::Sub || op == ElementwiseOp::Mul;
  const std::size_t want = is_binary ? 2 : 1;
  if (inputs.size() != want) {
    throw InvalidArgumentError("elementwise op expects " + std::to_string(want) + " inputs, got " +
                               std::to_string(inputs.size()));
  }
  switch (op) {
    case ElementwiseOp::Add: return add(inputs[0], inputs[1]);
    case ElementwiseOp::Sub: return sub(inputs[0], inputs[1]);
    case ElementwiseOp::Mul: return mul(inputs[0], inputs[1]);
    case ElementwiseOp::Relu: return relu(inputs[0]);
    case ElementwiseOp::LeakyRelu: return leaky_relu(inputs[0], alpha);
    case ElementwiseOp::Tanh: return tanh(inputs[0]);
    case ElementwiseOp::Sigmoid: return sigmoid(inputs[0]);
  }
  throw InvalidArgumentError("unknown elementwise op");
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw InvalidShapeError("matmul: cannot multiply " + to_string(a.shape()) + " by " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(m * n, T(0));
  kernels::gemm_accumulate(m, n, k, a.data().data(), k, b.data().data(), n, out.data(), n);
  return Tensor<T>::from_op("matmul", {m, n}, std::move(out), {a, b},
                            [a, b, m, k, n](std::span<const T> g, const GradSink<T>& sink) {
                              if (T* da = sink[0]) {
                                // dA = dC * B^T
                                std::vector<T> bt(n * k);
                                kernels::transpose(k, n, b.data().data(), bt.data());
                                kernels::gemm_accumulate(m, k, n, g.data(), n, bt.data(), k, da, k);
                              }
                              if (T* db = sink[1]) {
                                // dB = A^T * dC
                                std::vector<T> at(k * m);
                                kernels::transpose(m, k, a.data().data(), at.data());
                                kernels::gemm_accumulate(k, n, m, at.data(), m, g.data(), n, db, n);
                              }
                            });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = 0;
  for (T v : x.data()) total += v;
  const std::size_t n = x.numel();
  return Tensor<T>::from_op("sum", {1}, {total}, {x}, [n](std::span<const T> g, const GradSink<T>& sink) {
    if (T* dx = sink[0])
      for (std::size_t i = 0; i < n; ++i) dx[i] += g[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  const T n = static_cast<T>(x.numel());
  return mul_scalar(sum(x), T(1) / n);
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape) {
  if (checked_numel(shape) != x.numel()) {
    throw InvalidShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
  }
  std::vector<T> out(x.data().begin(), x.data().end());
  return Tensor<T>::from_op("reshape", shape, std::move(out), {x},
                            [](std::span<const T> g, const GradSink<T>& sink) {
                              if (T* dx = sink[0])
                                for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
                            });
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& x) {
  if (x.rank() < 2) throw InvalidShapeError("flatten needs a batch dimension, got " + to_string(x.shape()));
  return reshape(x, {x.dim(0), x.numel() / x.dim(0)});
}

#define SPOOFSMITH_INSTANTIATE(T)                                                         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                     \
  template Tensor<T> mul_scalar(const Tensor<T>&, T);                                     \
  template Tensor<T> relu(const Tensor<T>&);                                              \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                     \
  template Tensor<T> tanh(const Tensor<T>&);                                              \
  template Tensor<T> sigmoid(const Tensor<T>&);                                           \
  template Tensor<T> elementwise(ElementwiseOp, std::span<const Tensor<T>>, T);           \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> sum(const Tensor<T>&);                                               \
  template Tensor<T> mean(const Tensor<T>&);                                              \
  template Tensor<T> reshape(const Tensor<T>&, const Shape&);                             \
  template Tensor<T> flatten(const Tensor<T>&);

SPOOFSMITH_INSTANTIATE(float)
SPOOFSMITH_INSTANTIATE(double)

#undef SPOOFSMITH_INSTANTIATE

}  // namespace spoofsmith
