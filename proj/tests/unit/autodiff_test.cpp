#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hhpnet/autodiff.hpp"
#include "oracles.hpp"

using namespace hhpnet::ad;

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> d(0.0, scale);
  for (double& v : t.data()) v = d(rng);
  return t;
}

// Keeps values away from the leaky-relu kink so finite differences are clean.
Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
  Tensor t = random_tensor(std::move(shape), rng);
  for (double& v : t.data()) v = v >= 0 ? v + 0.1 : v - 0.1;
  return t;
}

// Random projection to a scalar so every output coordinate matters.
Var project(Graph& g, Var v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tensor w = random_tensor(g.value(v).shape(), rng);
  return g.sum(g.mul(v, g.input(std::move(w))));
}

}  // namespace

TEST(Tensor, ShapeMismatchThrows) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(Tensor({2, 3}).reshaped({4}), ShapeError);
  EXPECT_EQ(Tensor({2, 3}).reshaped({3, 2}).shape(), (Shape{3, 2}));
}

TEST(Dense, IdentityWeightsPassInputThrough) {
  Graph g;
  const Var x = g.input(Tensor::vector({1.5, -2, 3}));
  const Var w = g.input(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const Var b = g.input(Tensor::vector({0, 0, 0}));
  EXPECT_EQ(g.value(g.dense(x, w, b)), Tensor::vector({1.5, -2, 3}));
}

TEST(Dense, SumOfInputs) {
  Graph g;
  const Var y = g.dense(g.input(Tensor::vector({2, 3})), g.input(Tensor::matrix(2, 1, {1, 1})), g.input(Tensor::vector({0})));
  EXPECT_EQ(g.value(y), Tensor::vector({5}));
}

TEST(Dense, BatchedMatchesOracle) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({7, 13}, rng), w = random_tensor({13, 11}, rng), b = random_tensor({11}, rng);
  Graph g;
  const Tensor& y = g.value(g.dense(g.input(x), g.input(w), g.input(b)));
  ASSERT_EQ(y.shape(), (Shape{7, 11}));
  for (std::size_t r = 0; r < 7; ++r) {
    std::vector<double> row(x.row(r).begin(), x.row(r).end());
    const auto expect = oracle::affine(row, w, b);
    for (std::size_t j = 0; j < 11; ++j) EXPECT_NEAR(y.at(r, j), expect[j], 1e-13);
  }
}

TEST(Dense, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  Parameter x("x", random_tensor({5, 9}, rng)), w("w", random_tensor({9, 6}, rng)), b("b", random_tensor({6}, rng));
  std::vector<Parameter*> ps{&x, &w, &b};
  const double err = grad_check([&](Graph& g) { return project(g, g.dense(g.param(x), g.param(w), g.param(b)), 3); }, ps);
  EXPECT_LT(err, 1e-6);
}

TEST(Dense, ShapeErrors) {
  Graph g;
  EXPECT_THROW(g.dense(g.input(Tensor({2, 3})), g.input(Tensor({4, 2})), g.input(Tensor({2}))), ShapeError);
  EXPECT_THROW(g.dense(g.input(Tensor({2, 3})), g.input(Tensor({3, 2})), g.input(Tensor({3}))), ShapeError);
}

TEST(Conv1d, UnitKernelIsIdentity) {
  Graph g;
  const Tensor x = Tensor::matrix(1, 5, {1, -2, 3, 0.5, 4});
  const Var y = g.conv1d(g.input(x), g.input(Tensor::matrix(1, 1, {1})), g.input(Tensor::vector({0})));
  EXPECT_EQ(g.value(y).shape(), (Shape{1, 5, 1}));
  EXPECT_EQ(g.value(y).data().size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(g.value(y)[i], x[i]);
}

TEST(Conv1d, FiveFiltersOnFivePoints) {
  std::mt19937_64 rng(3);
  Graph g;
  const Var y = g.conv1d(g.input(random_tensor({1, 5}, rng)), g.input(random_tensor({5, 1}, rng)), g.input(random_tensor({5}, rng)));
  EXPECT_EQ(g.value(y).shape(), (Shape{1, 5, 5}));
}

TEST(Conv1d, WideKernelMatchesOracle) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({1, 5}, rng), f = random_tensor({2, 3}, rng), b = random_tensor({2}, rng);
  Graph g;
  const Tensor& y = g.value(g.conv1d(g.input(x), g.input(f), g.input(b)));
  const auto expect = oracle::conv_stream({x[0], x[1], x[2], x[3], x[4]}, f, b);
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(y[i], expect[i], 1e-14);
}

TEST(Conv1d, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (std::size_t k : {1u, 3u, 5u}) {
    Parameter x("x", random_tensor({3, 5}, rng)), f("f", random_tensor({4, k}, rng)), b("b", random_tensor({4}, rng));
    std::vector<Parameter*> ps{&x, &f, &b};
    const double err = grad_check([&](Graph& g) { return project(g, g.conv1d(g.param(x), g.param(f), g.param(b)), 6); }, ps);
    EXPECT_LT(err, 1e-6) << "k=" << k;
  }
}

TEST(Conv1d, RejectsEvenOrOversizedKernels) {
  Graph g;
  const Var x = g.input(Tensor({1, 5}));
  EXPECT_THROW(g.conv1d(x, g.input(Tensor({1, 2})), g.input(Tensor({1}))), ShapeError);
  EXPECT_THROW(g.conv1d(x, g.input(Tensor({1, 7})), g.input(Tensor({1}))), ShapeError);
}

TEST(LeakyRelu, ValuesAndGradients) {
  Graph g;
  const Var x = g.input(Tensor::vector({2.0, 0.0, -1.0}));
  const Var y = g.leaky_relu(x, 0.01);
  EXPECT_EQ(g.value(y), Tensor::vector({2.0, 0.0, -0.01}));
  g.backward(g.sum(y));
  EXPECT_DOUBLE_EQ(g.grad(x)[0], 1.0);
  EXPECT_DOUBLE_EQ(g.grad(x)[2], 0.01);

  std::mt19937_64 rng(6);
  Parameter p("p", away_from_zero({4, 6}, rng));
  std::vector<Parameter*> ps{&p};
  EXPECT_LT(grad_check([&](Graph& h) { return project(h, h.leaky_relu(h.param(p), 0.01), 7); }, ps), 1e-6);
  EXPECT_THROW(g.leaky_relu(x, 0.0), std::invalid_argument);
}

TEST(Sigmoid, ValuesMonotoneAndDerivative) {
  Graph g;
  const Var x = g.input(Tensor::vector({0.0, 1.0, 5.0, 20.0, 800.0, -800.0}));
  const Var y = g.sigmoid(x);
  const Tensor v = g.value(y);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_LT(v[1], v[2]);
  EXPECT_LT(v[2], v[3]);
  EXPECT_LE(v[3], 1.0);
  EXPECT_EQ(v[4], 1.0);
  EXPECT_EQ(v[5], 0.0);
  g.backward(g.sum(y));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g.grad(x)[i], v[i] * (1 - v[i]), 1e-15);

  // Against an independent central difference.
  const std::vector<double> at{-2.0, 0.3, 1.7};
  const auto numeric = oracle::numeric_gradient(
      [](const std::vector<double>& z) {
        double s = 0;
        for (double t : z) s += oracle::logistic(t);
        return s;
      },
      at);
  Graph h;
  const Var z = h.input(Tensor({3}, at));
  h.backward(h.sum(h.sigmoid(z)));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(h.grad(z)[i], numeric[i], 1e-9);
}

TEST(Elementwise, MulByOnesIsIdentity) {
  std::mt19937_64 rng(7);
  const Tensor a = random_tensor({3, 4}, rng);
  Graph g;
  EXPECT_EQ(g.value(g.mul(g.input(a), g.input(Tensor({3, 4}, 1.0)))), a);
}

TEST(Elementwise, MulGradientReachesBothOperands) {
  std::mt19937_64 rng(8);
  Parameter a("a", random_tensor({2, 5}, rng)), b("b", random_tensor({2, 5}, rng));
  std::vector<Parameter*> ps{&a, &b};
  EXPECT_LT(grad_check([&](Graph& g) { return project(g, g.mul(g.param(a), g.param(b)), 9); }, ps), 1e-6);

  Graph g;
  const Var va = g.param(a), vb = g.param(b);
  a.zero_grad();
  b.zero_grad();
  g.backward(g.sum(g.mul(va, vb)));
  EXPECT_EQ(a.grad, b.value);
  EXPECT_EQ(b.grad, a.value);
}

TEST(Elementwise, SquaringThroughAliasedMul) {
  Parameter a("a", Tensor::vector({3.0, -2.0}));
  Graph g;
  const Var v = g.param(a);
  a.zero_grad();
  g.backward(g.sum(g.mul(v, v)));
  EXPECT_EQ(a.grad, Tensor::vector({6.0, -4.0}));
}

TEST(Elementwise, SmoothOpsGradCheck) {
  std::mt19937_64 rng(9);
  Parameter a("a", random_tensor({3, 4}, rng, 0.5)), b("b", random_tensor({3, 4}, rng, 0.5));
  std::vector<Parameter*> ps{&a, &b};
  const double err = grad_check(
      [&](Graph& g) {
        const Var x = g.param(a), y = g.param(b);
        const Var e = g.add(g.exp(x), g.scale(g.square(y), -0.7));
        return project(g, g.add_scalar(g.sub(e, g.mul(x, y)), 2.0), 10);
      },
      ps);
  EXPECT_LT(err, 1e-6);
}

TEST(Concat, LengthsAddAndGradientsSplit) {
  std::mt19937_64 rng(11);
  Graph g;
  EXPECT_EQ(g.value(g.concat(g.input(Tensor({25})), g.input(Tensor({25})))).shape(), (Shape{50}));
  EXPECT_EQ(g.value(g.concat(g.input(Tensor({4, 25})), g.input(Tensor({4, 5, 5})))).shape(), (Shape{4, 50}));
  Parameter a("a", random_tensor({2, 3}, rng)), b("b", random_tensor({2, 4}, rng));
  std::vector<Parameter*> ps{&a, &b};
  EXPECT_LT(grad_check([&](Graph& h) { return project(h, h.concat(h.param(a), h.param(b)), 12); }, ps), 1e-6);
  EXPECT_THROW(g.concat(g.input(Tensor({2, 3})), g.input(Tensor({3, 3}))), ShapeError);
}

TEST(Flatten, KeepsBatchAxis) {
  Graph g;
  EXPECT_EQ(g.value(g.flatten(g.input(Tensor({4, 5, 5})))).shape(), (Shape{4, 25}));
}

TEST(SliceCols, SelectsAndScattersGradient) {
  Graph g;
  const Var x = g.input(Tensor::matrix(2, 4, {1, 2, 3, 4, 5, 6, 7, 8}));
  const Var s = g.slice_cols(x, 1, 3);
  EXPECT_EQ(g.value(s), Tensor::matrix(2, 2, {2, 3, 6, 7}));
  g.backward(g.sum(s));
  EXPECT_EQ(g.grad(x), Tensor::matrix(2, 4, {0, 1, 1, 0, 0, 1, 1, 0}));
  EXPECT_THROW(g.slice_cols(x, 3, 5), ShapeError);
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLogK) {
  Graph g;
  const Var ce = g.softmax_cross_entropy(g.input(Tensor({2, 66}, 3.0)), {0, 65});
  EXPECT_NEAR(g.value(ce)[0], std::log(66.0), 1e-12);
  EXPECT_NEAR(g.value(ce)[1], 4.1897, 5e-5);
}

TEST(SoftmaxCrossEntropy, GradientAndStability) {
  std::mt19937_64 rng(13);
  Parameter z("z", random_tensor({3, 7}, rng, 3.0));
  std::vector<Parameter*> ps{&z};
  EXPECT_LT(grad_check([&](Graph& g) { return g.sum(g.softmax_cross_entropy(g.param(z), {0, 3, 6})); }, ps,
                       {.epsilon = 1e-5, .floor = 1e-3}),  // probabilities near e^-9 are below FD resolution
            1e-6);
  Graph g;
  const Var ce = g.softmax_cross_entropy(g.input(Tensor::matrix(1, 3, {1000, 0, -1000})), {0});
  EXPECT_NEAR(g.value(ce)[0], 0.0, 1e-12);
  EXPECT_THROW(g.softmax_cross_entropy(g.input(Tensor({1, 3})), {3}), std::invalid_argument);
}

TEST(GradCheck, QuadraticIsExact) {
  Parameter p("p", Tensor::vector({0.3, -1.2, 2.5}));
  std::vector<Parameter*> ps{&p};
  EXPECT_LT(grad_check([&](Graph& g) { return g.sum(g.square(g.param(p))); }, ps), 1e-8);
}

TEST(GradCheck, ConstantFunctionHasZeroGradient) {
  Parameter p("p", Tensor::vector({0.3, -1.2}));
  std::vector<Parameter*> ps{&p};
  const double err = grad_check([&](Graph& g) {
    g.param(p);
    return g.sum(g.input(Tensor::vector({4.0, 5.0})));
  }, ps);
  EXPECT_EQ(err, 0.0);
  for (double v : p.grad.data()) EXPECT_EQ(v, 0.0);
}

TEST(GradCheck, DetectsAWrongGradient) {
  // |x| has a kink at 0: a central difference straddling it disagrees with
  // either one-sided derivative, so grad_check must report a large error.
  Parameter p("p", Tensor::vector({0.0}));
  std::vector<Parameter*> ps{&p};
  const double err = grad_check([&](Graph& g) { return g.sum(g.leaky_relu(g.param(p), 0.5)); }, ps);
  EXPECT_GT(err, 0.1);
}

TEST(GradCheck, RejectsBadArguments) {
  Parameter p("p", Tensor::vector({1.0, 2.0}));
  std::vector<Parameter*> ps{&p};
  EXPECT_THROW(grad_check([&](Graph& g) { return g.sum(g.param(p)); }, ps, {.epsilon = 0.0}), std::invalid_argument);
  EXPECT_THROW(grad_check([&](Graph& g) { return g.param(p); }, ps), ShapeError);
}

TEST(Backward, LinearInTheOutput) {
  std::mt19937_64 rng(14);
  Parameter a("a", random_tensor({3, 3}, rng));
  auto grads_of = [&](int which) {
    Graph g;
    const Var x = g.param(a);
    const Var f1 = g.sum(g.exp(x));
    const Var f2 = g.sum(g.square(g.sigmoid(x)));
    a.zero_grad();
    g.backward(which == 0 ? f1 : which == 1 ? f2 : g.add(f1, f2));
    return a.grad;
  };
  const Tensor g1 = grads_of(0), g2 = grads_of(1), g12 = grads_of(2);
  for (std::size_t i = 0; i < g12.size(); ++i) EXPECT_NEAR(g12[i], g1[i] + g2[i], 1e-13);
}

TEST(Backward, RequiresScalarOutput) {
  Graph g;
  EXPECT_THROW(g.backward(g.input(Tensor({2}))), ShapeError);
}

TEST(GraphForward, Deterministic) {
  std::mt19937_64 rng(15);
  const Tensor x = random_tensor({8, 10}, rng), w = random_tensor({10, 12}, rng), b = random_tensor({12}, rng);
  Graph g1, g2;
  const Tensor y1 = g1.value(g1.sigmoid(g1.dense(g1.input(x), g1.input(w), g1.input(b))));
  const Tensor y2 = g2.value(g2.sigmoid(g2.dense(g2.input(x), g2.input(w), g2.input(b))));
  EXPECT_EQ(y1, y2);
}
