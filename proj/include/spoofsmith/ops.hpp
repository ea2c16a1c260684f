#pragma once

#include <span>

#include "spoofsmith/tensor.hpp"

namespace spoofsmith {

enum class ElementwiseOp { Add, Sub, Mul, Relu, LeakyRelu, Tanh, Sigmoid };

// Binary ops require equal shapes; a single-element operand is broadcast.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T alpha);
template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

/// Dispatches on `op`; unary ops take one input, binary ops two. `alpha` is
/// only read by LeakyRelu.
template <typename T>
Tensor<T> elementwise(ElementwiseOp op, std::span<const Tensor<T>> inputs, T alpha = T(0.2));

/// [m,k] x [k,n] -> [m,n], each output reduced sequentially over k.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape);

/// [n, ...] -> [n, prod(...)]
template <typename T>
Tensor<T> flatten(const Tensor<T>& x);

}  // namespace spoofsmith
