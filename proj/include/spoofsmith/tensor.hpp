#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spoofsmith/error.hpp"

namespace spoofsmith {

using Shape = std::vector<std::size_t>;

/// Product of dims; throws InvalidShapeError if any dim is zero or the shape
/// is empty.
std::size_t checked_numel(const Shape& shape);
std::string to_string(const Shape& shape);

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

template <typename T>
constexpr DType dtype_of();
template <>
constexpr DType dtype_of<float>() { return DType::F32; }
template <>
constexpr DType dtype_of<double>() { return DType::F64; }

struct Constant {
  double value = 0.0;
};
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};
struct Normal {
  double mean = 0.0;
  double stddev = 1.0;
};
using Fill = std::variant<Constant, Uniform, Normal>;

template <typename T>
class Tensor;

/// Hands a backward function the gradient buffers of its inputs. A null
/// pointer means the input does not take part in differentiation.
template <typename T>
class GradSink {
 public:
  explicit GradSink(std::vector<T*> buffers) : buffers_(std::move(buffers)) {}
  T* operator[](std::size_t input) const { return buffers_[input]; }

 private:
  std::vector<T*> buffers_;
};

template <typename T>
using BackwardFn = std::function<void(std::span<const T> grad_out, const GradSink<T>& sink)>;

template <typename T>
struct Node {
  const char* op = "";
  std::vector<Tensor<T>> inputs;
  BackwardFn<T> backward;
};

namespace detail {

std::uint64_t next_tensor_id();

template <typename T>
struct Storage {
  Shape shape;
  std::vector<T> data;
  bool requires_grad = false;
  std::shared_ptr<Node<T>> node;
  std::uint64_t id = next_tensor_id();
};

}  // namespace detail

/// Graph recording is enabled per thread unless suppressed by NoGradGuard.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Shared handle to an n-dimensional row-major buffer. Copies alias the same
/// storage; use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  Tensor(Shape shape, std::vector<T> data) : s_(std::make_shared<detail::Storage<T>>()) {
    const std::size_t n = checked_numel(shape);
    if (data.size() != n) {
      throw InvalidShapeError("tensor data has " + std::to_string(data.size()) +
                              " elements, shape " + to_string(shape) + " needs " +
                              std::to_string(n));
    }
    s_->shape = std::move(shape);
    s_->data = std::move(data);
  }

  static Tensor create(const Shape& shape, const Fill& fill, std::uint64_t seed = 0);

  static Tensor zeros(const Shape& shape) { return full(shape, T(0)); }
  static Tensor full(const Shape& shape, T value) {
    return Tensor(shape, std::vector<T>(checked_numel(shape), value));
  }
  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  [[nodiscard]] bool defined() const { return s_ != nullptr; }
  [[nodiscard]] const Shape& shape() const { return s_->shape; }
  [[nodiscard]] std::size_t rank() const { return s_->shape.size(); }
  [[nodiscard]] std::size_t dim(std::size_t i) const { return s_->shape.at(i); }
  [[nodiscard]] std::size_t numel() const { return s_->data.size(); }
  [[nodiscard]] std::span<const T> data() const { return s_->data; }

  /// Raw write access, reserved for initializers and optimizers.
  [[nodiscard]] std::span<T> mutable_data() { return s_->data; }

  [[nodiscard]] T item() const {
    if (numel() != 1) throw InvalidArgumentError("item() on tensor of shape " + to_string(shape()));
    return s_->data[0];
  }
  [[nodiscard]] T operator[](std::size_t flat) const { return s_->data[flat]; }

  [[nodiscard]] bool requires_grad() const { return s_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    s_->requires_grad = on;
    return *this;
  }

  [[nodiscard]] const std::shared_ptr<Node<T>>& node() const { return s_->node; }
  [[nodiscard]] std::uint64_t id() const { return s_->id; }
  [[nodiscard]] bool is_leaf() const { return s_->node == nullptr; }
  [[nodiscard]] bool same_as(const Tensor& other) const { return s_ == other.s_; }

  /// Same values, no graph linkage, requires_grad false.
  [[nodiscard]] Tensor detach() const { return Tensor(s_->shape, s_->data); }
  [[nodiscard]] Tensor clone() const {
    Tensor out(s_->shape, s_->data);
    out.s_->requires_grad = s_->requires_grad;
    return out;
  }

  /// Builds an operation result, linking it into the graph when recording is
  /// on and some input requires a gradient.
  static Tensor from_op(const char* op, Shape shape, std::vector<T> data,
                        std::vector<Tensor> inputs, BackwardFn<T> backward) {
    Tensor out(std::move(shape), std::move(data));
    if (!grad_enabled()) return out;
    bool any = false;
    for (const auto& in : inputs) any = any || in.requires_grad();
    if (!any) return out;
    out.s_->requires_grad = true;
    out.s_->node = std::make_shared<Node<T>>(Node<T>{op, std::move(inputs), std::move(backward)});
    return out;
  }

 private:
  std::shared_ptr<detail::Storage<T>> s_;
};

/// Gradients of a scalar loss keyed by leaf tensor id.
template <typename T>
class GradientMap {
 public:
  [[nodiscard]] bool contains(const Tensor<T>& t) const { return grads_.count(t.id()) != 0; }
  [[nodiscard]] const Tensor<T>& at(const Tensor<T>& t) const;
  [[nodiscard]] const Tensor<T>* find(std::uint64_t id) const {
    auto it = grads_.find(id);
    return it == grads_.end() ? nullptr : &it->second;
  }
  [[nodiscard]] std::size_t size() const { return grads_.size(); }
  [[nodiscard]] bool empty() const { return grads_.empty(); }
  [[nodiscard]] auto begin() const { return grads_.begin(); }
  [[nodiscard]] auto end() const { return grads_.end(); }

  void insert(std::uint64_t id, Tensor<T> grad) { grads_.insert_or_assign(id, std::move(grad)); }

 private:
  std::map<std::uint64_t, Tensor<T>> grads_;
};

/// Reverse-mode sweep from a single-element loss. Returns gradients for every
/// leaf that requires one; multiple uses of a tensor accumulate.
template <typename T>
GradientMap<T> backward(const Tensor<T>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace spoofsmith
