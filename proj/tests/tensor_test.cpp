#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "spoofsmith/gemm.hpp"
#include "spoofsmith/ops.hpp"
#include "spoofsmith/rng.hpp"
#include "spoofsmith/tensor.hpp"
#include "spoofsmith/verify/gradcheck.hpp"

namespace spoofsmith {
namespace {

template <typename T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() && std::memcmp(a.data().data(), b.data().data(), a.numel() * sizeof(T)) == 0;
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, SplitStreamsDifferAndDoNotAdvanceParent) {
  Rng root(1);
  const auto before = root.state();
  Rng c1 = root.split(1), c2 = root.split(2);
  EXPECT_EQ(root.state(), before);
  EXPECT_NE(c1.next_u64(), c2.next_u64());
}

TEST(Rng, ResumesFromState) {
  Rng a(9);
  for (int i = 0; i < 5; ++i) a.next_u64();
  Rng b(a.state());
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, BelowStaysInRange) {
  Rng r(3);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(r.below(7), 7u);
}

TEST(Rng, NormalHasUnitMoments) {
  Rng r(5);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(TensorCreate, ConstantFills) {
  const auto z = Tensor<float>::create({2, 2}, Constant{0.0});
  for (float v : z.data()) EXPECT_EQ(v, 0.0f);
  const auto ones = Tensor<double>::create({3}, Constant{1.0});
  EXPECT_EQ(std::vector<double>(ones.data().begin(), ones.data().end()), (std::vector<double>{1, 1, 1}));
  EXPECT_FALSE(ones.requires_grad());
}

TEST(TensorCreate, SeededFillIsReproducible) {
  const auto a = Tensor<float>::create({4, 4}, Normal{0.0, 0.02}, 7);
  const auto b = Tensor<float>::create({4, 4}, Normal{0.0, 0.02}, 7);
  const auto c = Tensor<float>::create({4, 4}, Normal{0.0, 0.02}, 8);
  EXPECT_TRUE(bitwise_equal(a, b));
  EXPECT_FALSE(bitwise_equal(a, c));
}

TEST(TensorCreate, UniformRespectsBounds) {
  const auto u = Tensor<double>::create({1000}, Uniform{-2.0, 3.0}, 1);
  for (double v : u.data()) {
    EXPECT_GE(v, -2.0);
    EXPECT_LT(v, 3.0);
  }
}

TEST(TensorCreate, ZeroDimIsInvalidShape) {
  EXPECT_THROW(Tensor<float>::create({2, 0}, Constant{0.0}), InvalidShapeError);
  EXPECT_THROW(Tensor<float>::create({}, Constant{0.0}), InvalidShapeError);
}

TEST(Elementwise, ClosedFormValues) {
  const auto zero = Tensor<double>::scalar(0.0);
  EXPECT_EQ(sigmoid(zero).item(), 0.5);
  EXPECT_EQ(tanh(zero).item(), 0.0);
  EXPECT_EQ(relu(Tensor<double>::scalar(-3.0)).item(), 0.0);
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor<double>::scalar(-2.0), 0.2).item(), -0.4);
}

TEST(Elementwise, SigmoidStaysFiniteForLargeInputs) {
  const auto s = sigmoid(Tensor<float>({2}, {-1000.0f, 1000.0f}));
  EXPECT_EQ(s.data()[0], 0.0f);
  EXPECT_EQ(s.data()[1], 1.0f);
}

TEST(Elementwise, ShapeMismatchIsRejected) {
  const auto a = Tensor<float>::zeros({2, 3});
  const auto b = Tensor<float>::zeros({3, 2});
  EXPECT_THROW(add(a, b), InvalidShapeError);
  EXPECT_THROW(mul(a, Tensor<float>::zeros({6})), InvalidShapeError);
}

TEST(Elementwise, SingleElementOperandBroadcasts) {
  const auto a = Tensor<float>({3}, {1, 2, 3});
  const auto r = mul(a, Tensor<float>::scalar(2.0f));
  EXPECT_EQ(std::vector<float>(r.data().begin(), r.data().end()), (std::vector<float>{2, 4, 6}));
}

TEST(Elementwise, DispatchMatchesNamedOps) {
  const auto x = Tensor<double>::create({5}, Uniform{-1, 1}, 2);
  const Tensor<double> in[] = {x};
  EXPECT_TRUE(bitwise_equal(elementwise<double>(ElementwiseOp::Tanh, in), tanh(x)));
  EXPECT_TRUE(bitwise_equal(elementwise<double>(ElementwiseOp::LeakyRelu, in, 0.1), leaky_relu(x, 0.1)));
}

TEST(Matmul, IdentityAndHandArithmetic) {
  const auto eye = Tensor<double>({2, 2}, {1, 0, 0, 1});
  const auto a = Tensor<double>({2, 2}, {1.5, -2, 3, 4.25});
  EXPECT_TRUE(bitwise_equal(matmul(eye, a), a));
  const auto r = matmul(Tensor<double>({2, 2}, {1, 2, 3, 4}), Tensor<double>({2, 1}, {5, 6}));
  EXPECT_EQ(r.shape(), (Shape{2, 1}));
  EXPECT_EQ(r.data()[0], 17);
  EXPECT_EQ(r.data()[1], 39);
}

TEST(Matmul, InnerDimensionMismatch) {
  EXPECT_THROW(matmul(Tensor<float>::zeros({2, 3}), Tensor<float>::zeros({2, 3})), InvalidShapeError);
}

template <typename T>
std::vector<T> triple_loop(const Tensor<T>& a, const Tensor<T>& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> c(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      T acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a.data()[i * k + p] * b.data()[p * n + j];
      c[i * n + j] = acc;
    }
  return c;
}

TEST(Matmul, MatchesTripleLoopExactly) {
  const auto a = Tensor<float>::create({8, 8}, Uniform{-1, 1}, 11);
  const auto b = Tensor<float>::create({8, 8}, Uniform{-1, 1}, 12);
  const auto r = matmul(a, b);
  EXPECT_EQ(std::vector<float>(r.data().begin(), r.data().end()), triple_loop(a, b));
}

TEST(Gemm, LargeShapesMatchTripleLoopAndIgnoreWorkerCount) {
  const std::pair<std::size_t, std::size_t> shapes[] = {{37, 300}, {128, 16}, {5, 1000}, {70, 129}};
  for (auto [m, n] : shapes) {
    const std::size_t k = 97;
    const auto a = Tensor<float>::create({m, k}, Uniform{-1, 1}, m);
    const auto b = Tensor<float>::create({k, n}, Uniform{-1, 1}, n);
    const auto ref = triple_loop(a, b);
    const int saved = kernels::worker_count();
    for (int workers : {1, 3}) {
      kernels::set_worker_count(workers);
      const auto r = matmul(a, b);
      EXPECT_EQ(std::vector<float>(r.data().begin(), r.data().end()), ref) << m << "x" << n << " workers " << workers;
    }
    kernels::set_worker_count(saved);
  }
}

TEST(Backward, SquareGradient) {
  auto x = Tensor<double>({1}, {3.0});
  x.set_requires_grad(true);
  const auto g = backward(sum(mul(x, x)));
  EXPECT_EQ(g.at(x).item(), 6.0);
}

TEST(Backward, ConstantLossGivesEmptyMap) {
  const auto c = Tensor<double>({3}, {1, 2, 3});
  EXPECT_TRUE(backward(sum(c)).empty());
}

TEST(Backward, NonScalarLossIsRejected) {
  auto x = Tensor<double>::zeros({2});
  x.set_requires_grad(true);
  EXPECT_THROW(backward(add_scalar(x, 1.0)), InvalidArgumentError);
}

TEST(Backward, ReusedTensorAccumulates) {
  auto x = Tensor<double>({1}, {0.7});
  x.set_requires_grad(true);
  EXPECT_EQ(backward(add(x, x)).at(x).item(), 2.0);
}

TEST(Backward, DiamondGraphVisitsEachNodeOnce) {
  auto x = Tensor<double>({1}, {0.5});
  x.set_requires_grad(true);
  const auto t = tanh(x);
  const auto loss = sum(mul(t, t));  // d/dx tanh^2 = 2 tanh (1 - tanh^2)
  const double th = std::tanh(0.5);
  EXPECT_NEAR(backward(loss).at(x).item(), 2 * th * (1 - th * th), 1e-15);
}

TEST(Backward, NoGradGuardRecordsNothing) {
  auto x = Tensor<double>({1}, {2.0});
  x.set_requires_grad(true);
  Tensor<double> y;
  {
    NoGradGuard guard;
    y = mul(x, x);
  }
  EXPECT_TRUE(y.is_leaf());
  EXPECT_TRUE(backward(sum(y)).empty());
}

TEST(Backward, SigmoidOfProductMatchesFiniteDifference) {
  Rng rng(21);
  auto w = Tensor<double>::create({4, 3}, Uniform{-1, 1}, 1);
  auto x = Tensor<double>::create({3, 2}, Uniform{-1, 1}, 2);
  w.set_requires_grad(true);
  x.set_requires_grad(true);
  std::vector<Tensor<double>> inputs{w, x};
  const auto r = check_gradients([](std::span<const Tensor<double>> in) { return sum(sigmoid(matmul(in[0], in[1]))); },
                                 inputs, rng);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  EXPECT_EQ(r.coords_checked, 18u);
}

TEST(Backward, ReshapeAndMeanGradients) {
  auto x = Tensor<double>::create({2, 3}, Uniform{-1, 1}, 4);
  x.set_requires_grad(true);
  const auto g = backward(mean(reshape(x, {3, 2})));
  for (double v : g.at(x).data()) EXPECT_DOUBLE_EQ(v, 1.0 / 6.0);
  EXPECT_THROW(reshape(x, {4, 2}), InvalidShapeError);
}

TEST(Tensor, DetachAndCloseAreDeepCopies) {
  auto x = Tensor<float>({2}, {1, 2});
  x.set_requires_grad(true);
  auto d = x.detach();
  d.mutable_data()[0] = 5;
  EXPECT_EQ(x.data()[0], 1);
  EXPECT_FALSE(d.requires_grad());
  EXPECT_NE(d.id(), x.id());
  auto alias = x;
  EXPECT_TRUE(alias.same_as(x));
}

}  // namespace
}  // namespace spoofsmith
