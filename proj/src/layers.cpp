#include "fakenews/layers.hpp"

#include <algorithm>
#include <cmath>

#include "fakenews/errors.hpp"

namespace fakenews {

Var activate(Var x, Activation activation) {
  switch (activation) {
    case Activation::relu:
      return relu(x);
    case Activation::softmax:
      return softmax(x);
    case Activation::identity:
      break;
  }
  return x;
}

// ---------------------------------------------------------------------------

Tensor& ParameterStore::add(std::string name, Shape shape, bool requires_grad) {
  if (contains(name)) throw ContractError("duplicate parameter name: " + name);
  auto tensor = std::make_unique<Tensor>(std::move(shape));
  tensor->set_requires_grad(requires_grad);
  entries_.emplace_back(std::move(name), std::move(tensor));
  return *entries_.back().second;
}

Tensor& ParameterStore::get(const std::string& name) {
  for (auto& [n, t] : entries_) {
    if (n == name) return *t;
  }
  throw IndexError("no parameter named " + name);
}

const Tensor& ParameterStore::get(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

bool ParameterStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

std::size_t ParameterStore::element_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) {
    if (!trainable_only || t->requires_grad()) n += t->size();
  }
  return n;
}

std::vector<Tensor*> ParameterStore::trainable() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : entries_) {
    if (t->requires_grad()) out.push_back(t.get());
  }
  return out;
}

std::vector<NamedTensor> ParameterStore::named_trainable() {
  std::vector<NamedTensor> out;
  for (auto& [name, t] : entries_) {
    if (t->requires_grad()) out.push_back({name, t.get()});
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : entries_) {
    if (t->requires_grad()) t->zero_grad();
  }
}

void fill_uniform(Tensor& t, double limit, Rng& rng) {
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
}

void fill_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  fill_uniform(t, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

// ---------------------------------------------------------------------------

DenseLayer DenseLayer::create(ParameterStore& store, const std::string& name, std::size_t in,
                              std::size_t out, Activation activation, Rng& rng) {
  DenseLayer layer;
  layer.weight = &store.add(name + ".weight", {in, out});
  layer.bias = &store.add(name + ".bias", {out});
  layer.activation = activation;
  fill_glorot(*layer.weight, in, out, rng);
  return layer;
}

Var DenseLayer::pre_activation(Graph& g, Var x) const {
  return linear(x, g.parameter(*weight), g.parameter(*bias));
}

Var DenseLayer::operator()(Graph& g, Var x) const {
  return activate(pre_activation(g, x), activation);
}

Conv1DLayer Conv1DLayer::create(ParameterStore& store, const std::string& name, std::size_t window,
                                std::size_t width, std::size_t filters, Activation activation,
                                Rng& rng) {
  if (window == 0) throw ContractError(name + ": convolution window must be at least 1");
  Conv1DLayer layer;
  layer.kernels = &store.add(name + ".kernels", {filters, window, width});
  layer.bias = &store.add(name + ".bias", {filters});
  layer.activation = activation;
  fill_glorot(*layer.kernels, window * width, window * filters, rng);
  return layer;
}

Var Conv1DLayer::operator()(Graph& g, Var input) const {
  return activate(conv1d(input, g.parameter(*kernels), g.parameter(*bias)), activation);
}

namespace {

constexpr double kRecurrentInitLimit = 0.05;
constexpr double kForgetBias = 1.0;

LstmParams create_direction(ParameterStore& store, const std::string& name, std::size_t in,
                            std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.input_weight = &store.add(name + ".input_weight", {in, 4 * hidden});
  p.recurrent_weight = &store.add(name + ".recurrent_weight", {hidden, 4 * hidden});
  p.bias = &store.add(name + ".bias", {4 * hidden});
  fill_uniform(*p.input_weight, kRecurrentInitLimit, rng);
  fill_uniform(*p.recurrent_weight, kRecurrentInitLimit, rng);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) (*p.bias)[j] = kForgetBias;
  return p;
}

Var run_direction(Graph& g, Var input, const LstmParams& p, bool reverse) {
  return lstm(input, g.parameter(*p.input_weight), g.parameter(*p.recurrent_weight),
              g.parameter(*p.bias), reverse);
}

}  // namespace

BiLstmLayer BiLstmLayer::create(ParameterStore& store, const std::string& name,
                                std::size_t input_width, std::size_t hidden, Rng& rng) {
  BiLstmLayer layer;
  layer.forward = create_direction(store, name + ".fwd", input_width, hidden, rng);
  layer.backward = create_direction(store, name + ".bwd", input_width, hidden, rng);
  return layer;
}

Var BiLstmLayer::operator()(Graph& g, Var input) const {
  Var fwd = run_direction(g, input, forward, false);
  Var bwd = run_direction(g, input, backward, true);
  return concat({fwd, bwd}, 0);
}

EmbeddingLayer EmbeddingLayer::create(ParameterStore& store, const std::string& name,
                                      Tensor matrix, bool trainable) {
  if (matrix.rank() != 2) throw DimensionError(name + ": embedding matrix must be rank 2");
  EmbeddingLayer layer;
  layer.matrix = &store.add(name, matrix.shape(), trainable);
  std::copy(matrix.data().begin(), matrix.data().end(), layer.matrix->data().begin());
  layer.trainable = trainable;
  layer.clamp_padding();
  return layer;
}

Var EmbeddingLayer::operator()(Graph& g, std::span<const int> ids) const {
  return embedding_lookup(g.parameter(*matrix), ids);
}

void EmbeddingLayer::clamp_padding() const {
  std::fill_n(matrix->data().begin(), width(), 0.0);
}

// ---------------------------------------------------------------------------

Var reshape_to_map(Var vector) {
  if (vector.value().rank() != 1) {
    throw DimensionError("reshape_to_map expects a vector, got " + shape_string(vector.shape()));
  }
  return reshape(vector, {vector.value().size(), 1});
}

Var flatten(Var x) { return reshape(x, {x.value().size()}); }

Var maxpool1d_global(Var input) {
  if (input.value().rank() == 2 && input.value().dim(0) == 0) {
    throw ContractError("maxpool over an empty time axis");
  }
  return maxpool_global(input);
}

}  // namespace fakenews
