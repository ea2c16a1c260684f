#include "spoofsmith/tensor.hpp"

#include <atomic>
#include <unordered_map>
#include <unordered_set>

#include "spoofsmith/rng.hpp"

namespace spoofsmith {

std::size_t checked_numel(const Shape& shape) {
  if (shape.empty()) throw InvalidShapeError("shape must have at least one dimension");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw InvalidShapeError("zero dimension in shape " + to_string(shape));
    n *= d;
  }
  return n;
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace detail {

std::uint64_t next_tensor_id() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

}  // namespace detail

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T> Tensor<T>::create(const Shape& shape, const Fill& fill, std::uint64_t seed) {
  std::vector<T> data(checked_numel(shape));
  Rng rng(seed);
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        for (auto& v : data) {
          if constexpr (std::is_same_v<F, Constant>) {
            v = static_cast<T>(f.value);
          } else if constexpr (std::is_same_v<F, Uniform>) {
            v = static_cast<T>(rng.uniform(f.lo, f.hi));
          } else {
            v = static_cast<T>(rng.normal(f.mean, f.stddev));
          }
        }
      },
      fill);
  return Tensor(shape, std::move(data));
}

template <typename T>
const Tensor<T>& GradientMap<T>::at(const Tensor<T>& t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) throw InvalidArgumentError("no gradient recorded for tensor");
  return it->second;
}

template <typename T>
GradientMap<T> backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw InvalidArgumentError("backward() needs a single-element loss, got shape " +
                               (loss.defined() ? to_string(loss.shape()) : std::string("<null>")));
  }
  GradientMap<T> result;
  if (!loss.requires_grad()) return result;

  // Iterative post-order DFS; each tensor is emitted once.
  std::vector<Tensor<T>> order;
  std::unordered_set<std::uint64_t> visited;
  std::vector<std::pair<Tensor<T>, std::size_t>> stack;
  stack.emplace_back(loss, 0);
  visited.insert(loss.id());
  while (!stack.empty()) {
    auto& [t, next] = stack.back();
    const auto& node = t.node();
    if (node && next < node->inputs.size()) {
      const Tensor<T>& in = node->inputs[next++];
      if (in.requires_grad() && visited.insert(in.id()).second) stack.emplace_back(in, 0);
      continue;
    }
    order.push_back(t);
    stack.pop_back();
  }

  std::unordered_map<std::uint64_t, std::vector<T>> grads;
  grads[loss.id()] = std::vector<T>(1, T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Tensor<T>& t = *it;
    auto found = grads.find(t.id());
    if (found == grads.end()) continue;
    if (t.is_leaf()) {
      result.insert(t.id(), Tensor<T>(t.shape(), std::move(found->second)));
      grads.erase(found);
      continue;
    }
    std::vector<T> grad_out = std::move(found->second);
    grads.erase(found);
    const Node<T>& node = *t.node();
    std::vector<T*> buffers;
    buffers.reserve(node.inputs.size());
    for (const auto& in : node.inputs) {
      if (!in.requires_grad()) {
        buffers.push_back(nullptr);
        continue;
      }
      auto& buf = grads[in.id()];
      if (buf.empty()) buf.assign(in.numel(), T(0));
      buffers.push_back(buf.data());
    }
    node.backward(grad_out, GradSink<T>(std::move(buffers)));
  }
  return result;
}

template class Tensor<float>;
template class Tensor<double>;
template class GradientMap<float>;
template class GradientMap<double>;
template GradientMap<float> backward(const Tensor<float>&);
template GradientMap<double> backward(const Tensor<double>&);

}  // namespace spoofsmith
