#include <doctest.h>

#include <cmath>

#include "fakenews/errors.hpp"
#include "fakenews/layers.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace fakenews;
using fakenews::testing::max_abs_diff;
using fakenews::testing::random_tensor;

TEST_CASE("embedding lookup") {
  Rng rng(1);
  ParameterStore store;
  Tensor m = random_tensor({5, 300}, rng);
  EmbeddingLayer layer = EmbeddingLayer::create(store, "embedding", m, false);
  Graph g;
  const std::vector<int> pads = {0, 0, 0};
  Var z = layer(g, pads);
  CHECK(z.shape() == Shape{3, 300});
  for (double v : z.value().data()) CHECK(v == 0.0);

  const std::vector<int> one = {3};
  Var row = layer(g, one);
  for (std::size_t c = 0; c < 300; ++c) CHECK(row.value()[c] == m.at(3, c));

  const std::vector<int> bad = {5};
  CHECK_THROWS_AS(layer(g, bad), IndexError);
}

TEST_CASE("trainable embedding gradient touches only looked-up rows") {
  Rng rng(2);
  ParameterStore store;
  EmbeddingLayer layer = EmbeddingLayer::create(store, "embedding", random_tensor({6, 3}, rng), true);
  const std::vector<int> ids = {2, 4, 2};
  const Tensor w = random_tensor({3, 3}, rng);
  auto params = store.named_trainable();
  auto report = finite_diff_check([&](Graph& g) { return dot(layer(g, ids), w); }, params, 1e-3, 1e-4);
  CHECK_MESSAGE(report.passed, report.describe());
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double gv = layer.matrix->grad()[r * 3 + c];
      if (r == 2) {
        CHECK(gv == doctest::Approx(w.at(0, c) + w.at(2, c)));
      } else if (r == 4) {
        CHECK(gv == doctest::Approx(w.at(1, c)));
      } else {
        CHECK(gv == 0.0);
      }
    }
  }
}

TEST_CASE("frozen embedding receives no gradient") {
  Rng rng(3);
  ParameterStore store;
  EmbeddingLayer layer = EmbeddingLayer::create(store, "embedding", random_tensor({4, 2}, rng), false);
  CHECK(store.trainable().empty());
  Graph g;
  const std::vector<int> ids = {1, 2};
  g.backward(sum(layer(g, ids)));
  CHECK_FALSE(layer.matrix->has_grad());
}

TEST_CASE("conv1d hand cases") {
  Rng rng(4);
  ParameterStore store;
  SUBCASE("one-hot window-1 kernel selects a column") {
    const std::size_t m = 4, j = 2;
    Conv1DLayer conv = Conv1DLayer::create(store, "conv", 1, m, 1, Activation::identity, rng);
    std::fill(conv.kernels->data().begin(), conv.kernels->data().end(), 0.0);
    (*conv.kernels)[j] = 1.0;
    Tensor x = random_tensor({5, m}, rng);
    Graph g;
    Var y = conv(g, g.constant(x));
    REQUIRE(y.shape() == Shape{5, 1});
    for (std::size_t t = 0; t < 5; ++t) CHECK(y.value()[t] == x.at(t, j));
  }
  SUBCASE("all ones") {
    Conv1DLayer conv = Conv1DLayer::create(store, "conv", 2, 2, 1, Activation::identity, rng);
    std::fill(conv.kernels->data().begin(), conv.kernels->data().end(), 1.0);
    Graph g;
    Var y = conv(g, g.constant(Tensor({3, 2}, 1.0)));
    CHECK(y.value() == Tensor::matrix(2, 1, {4, 4}));
  }
  SUBCASE("input shorter than the window") {
    Conv1DLayer conv = Conv1DLayer::create(store, "conv", 3, 2, 1, Activation::identity, rng);
    Graph g;
    CHECK_THROWS_AS(conv(g, g.constant(Tensor({2, 2}, 1.0))), DimensionError);
  }
}

TEST_CASE("conv1d matches the nested-loop oracle on all small shapes") {
  Rng rng(5);
  std::size_t cases = 0;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::size_t len = n; len <= 10; ++len) {
      for (std::size_t m = 1; m <= 5; ++m) {
        for (std::size_t f = 1; f <= 4; ++f) {
          Tensor x = random_tensor({len, m}, rng), k = random_tensor({f, n, m}, rng), b = random_tensor({f}, rng);
          Graph g;
          Var y = conv1d(g.constant(x), g.constant(k), g.constant(b));
          const auto expected = oracle::conv1d(x.values(), len, m, k.values(), f, n, b.values());
          REQUIRE(y.value().size() == expected.size());
          CHECK(max_abs_diff(y.value().data(), expected) <= 1e-12);
          ++cases;
        }
      }
    }
  }
  CHECK(cases == (10 + 9 + 8) * 5 * 4);
}

TEST_CASE("padding rows contribute nothing to a zero-bias convolution") {
  Rng rng(6);
  ParameterStore store;
  EmbeddingLayer emb = EmbeddingLayer::create(store, "embedding", random_tensor({5, 3}, rng), false);
  Conv1DLayer conv = Conv1DLayer::create(store, "conv", 2, 3, 4, Activation::identity, rng);
  const std::vector<int> ids = {3, 1, 0, 0, 0};
  Graph g;
  Var y = conv(g, emb(g, ids));
  for (std::size_t t = 2; t < 4; ++t) {
    for (std::size_t f = 0; f < 4; ++f) CHECK(y.value().at(t, f) == 0.0);
  }
}

TEST_CASE("max-pool") {
  Graph g;
  CHECK(maxpool1d_global(g.constant(Tensor::matrix(2, 2, {1, 5, 3, 2}))).value() == Tensor::vector({3, 5}));

  Tensor x({4, 3}, 7.0);
  x.set_requires_grad(true);
  x.zero_grad();
  Graph g2;
  g2.backward(sum(maxpool1d_global(g2.parameter(x))));
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t f = 0; f < 3; ++f) CHECK(x.grad()[t * 3 + f] == (t == 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("max-pool matches a brute-force scan, including ties") {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t steps = 1 + rng.below(10), features = 1 + rng.below(5);
    Tensor x({steps, features});
    // Small integer values force frequent ties.
    for (double& v : x.data()) v = static_cast<double>(rng.below(4));
    x.set_requires_grad(true);
    x.zero_grad();
    Graph g;
    Var y = maxpool1d_global(g.parameter(x));
    const auto expected = oracle::maxpool(x.values(), steps, features);
    CHECK(y.value().values() == expected.values);
    g.backward(sum(y));
    for (std::size_t f = 0; f < features; ++f) {
      for (std::size_t t = 0; t < steps; ++t) {
        CHECK(x.grad()[t * features + f] == (t == expected.argmax[f] ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("bilstm with zero parameters outputs zeros") {
  Rng rng(8);
  ParameterStore store;
  BiLstmLayer layer = BiLstmLayer::create(store, "bilstm", 4, 3, rng);
  for (std::size_t i = 0; i < store.size(); ++i) {
    std::fill(store.tensor(i).data().begin(), store.tensor(i).data().end(), 0.0);
  }
  Graph g;
  Var y = layer(g, g.constant(random_tensor({5, 4}, rng)));
  CHECK(y.shape() == Shape{6});
  for (double v : y.value().data()) CHECK(v == 0.0);
}

TEST_CASE("bilstm initialization") {
  Rng rng(9);
  ParameterStore store;
  BiLstmLayer layer = BiLstmLayer::create(store, "bilstm", 4, 3, rng);
  for (const LstmParams* p : {&layer.forward, &layer.backward}) {
    for (double v : p->input_weight->data()) CHECK(std::abs(v) <= 0.05);
    for (double v : p->recurrent_weight->data()) CHECK(std::abs(v) <= 0.05);
    for (std::size_t i = 0; i < 12; ++i) CHECK((*p->bias)[i] == ((i >= 3 && i < 6) ? 1.0 : 0.0));
  }
}

TEST_CASE("bilstm on a single step sees the same token in both directions") {
  Rng rng(10);
  ParameterStore store;
  BiLstmLayer layer = BiLstmLayer::create(store, "bilstm", 3, 4, rng);
  // Identical parameters in both directions.
  std::copy(layer.forward.input_weight->data().begin(), layer.forward.input_weight->data().end(),
            layer.backward.input_weight->data().begin());
  std::copy(layer.forward.recurrent_weight->data().begin(), layer.forward.recurrent_weight->data().end(),
            layer.backward.recurrent_weight->data().begin());
  Graph g;
  Var y = layer(g, g.constant(random_tensor({1, 3}, rng)));
  for (std::size_t i = 0; i < 4; ++i) CHECK(y.value()[i] == y.value()[4 + i]);
}

TEST_CASE("bilstm width for the statement branch") {
  Rng rng(11);
  ParameterStore store;
  BiLstmLayer layer = BiLstmLayer::create(store, "bilstm", 300, 50, rng);
  Graph g;
  CHECK(layer(g, g.constant(random_tensor({50, 300}, rng))).shape() == Shape{100});
}

TEST_CASE("reversing the input and swapping directions swaps the halves") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 1 + rng.below(6), d = 1 + rng.below(4), h = 1 + rng.below(4);
    ParameterStore store;
    BiLstmLayer layer = BiLstmLayer::create(store, "bilstm", d, h, rng);
    for (std::size_t i = 0; i < store.size(); ++i) fill_uniform(store.tensor(i), 0.8, rng);
    BiLstmLayer swapped{layer.backward, layer.forward};
    Tensor x = random_tensor({len, d}, rng);
    Tensor reversed({len, d});
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t c = 0; c < d; ++c) reversed.at(t, c) = x.at(len - 1 - t, c);
    }
    Graph g;
    const Tensor& a = layer(g, g.constant(x)).value();
    const Tensor& b = swapped(g, g.constant(reversed)).value();
    for (std::size_t i = 0; i < h; ++i) {
      CHECK(std::abs(a[i] - b[h + i]) <= 1e-15);
      CHECK(std::abs(a[h + i] - b[i]) <= 1e-15);
    }
  }
}

TEST_CASE("bilstm gradients over all gate weights") {
  Rng rng(13);
  ParameterStore store;
  BiLstmLayer layer = BiLstmLayer::create(store, "bilstm", 3, 4, rng);
  for (std::size_t i = 0; i < store.size(); ++i) fill_uniform(store.tensor(i), 0.5, rng);
  const Tensor x = random_tensor({4, 3}, rng);
  auto params = store.named_trainable();
  auto report = finite_diff_check([&](Graph& g) { return sum(layer(g, g.constant(x))); }, params, 1e-3, 1e-4);
  CHECK_MESSAGE(report.passed, report.describe());
  CHECK(report.checked == store.element_count(true));
}

TEST_CASE("reshape_to_map and flatten") {
  Graph g;
  Var v = g.constant(Tensor::vector({1, 2, 3}));
  Var m = reshape_to_map(v);
  CHECK(m.value() == Tensor::matrix(3, 1, {1, 2, 3}));
  CHECK(flatten(m).value() == v.value());

  Tensor x = Tensor::vector({0.5, -0.25, 2.0});
  x.set_requires_grad(true);
  x.zero_grad();
  const Tensor w = Tensor::matrix(3, 1, {3, 4, 5});
  Graph g2;
  g2.backward(dot(reshape_to_map(g2.parameter(x)), w));
  CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{3, 4, 5});
}

TEST_CASE("dense and conv initialization bounds") {
  Rng rng(14);
  ParameterStore store;
  DenseLayer dense = DenseLayer::create(store, "dense", 10, 6, Activation::relu, rng);
  const double dense_limit = std::sqrt(6.0 / 16.0);
  for (double v : dense.weight->data()) CHECK(std::abs(v) <= dense_limit);
  for (double v : dense.bias->data()) CHECK(v == 0.0);
  Conv1DLayer conv = Conv1DLayer::create(store, "conv", 3, 5, 8, Activation::relu, rng);
  const double conv_limit = std::sqrt(6.0 / (15.0 + 24.0));
  for (double v : conv.kernels->data()) CHECK(std::abs(v) <= conv_limit);
  CHECK_THROWS_AS(store.add("dense.weight", {1}), ContractError);
}

TEST_CASE("every layer passes the finite-difference check") {
  Rng rng(15);
  ParameterStore store;
  Tensor& x = store.add("x", {6, 3});
  fill_uniform(x, 1.0, rng);
  Conv1DLayer conv = Conv1DLayer::create(store, "conv", 2, 3, 4, Activation::relu, rng);
  BiLstmLayer lstm = BiLstmLayer::create(store, "bilstm", 3, 2, rng);
  DenseLayer dense = DenseLayer::create(store, "dense", 8, 6, Activation::softmax, rng);
  for (std::size_t i = 1; i < store.size(); ++i) fill_uniform(store.tensor(i), 0.7, rng);
  const Tensor w = random_tensor({6}, rng);
  auto params = store.named_trainable();
  auto report = finite_diff_check(
      [&](Graph& g) {
        Var in = g.parameter(x);
        Var pooled = maxpool1d_global(conv(g, in));
        Var joined = concat({pooled, lstm(g, in)}, 0);
        return dot(dense(g, joined), w);
      },
      params, 1e-3, 1e-4);
  CHECK_MESSAGE(report.passed, report.describe());
}
