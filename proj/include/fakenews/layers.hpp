#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fakenews/autodiff.hpp"
#include "fakenews/gradcheck.hpp"
#include "fakenews/rng.hpp"

namespace fakenews {

enum class Activation { identity, relu, softmax };

Var activate(Var x, Activation activation);

/// Owns every parameter tensor of a model under a unique name. Tensor
/// addresses are stable for the lifetime of the store.
class ParameterStore {
 public:
  Tensor& add(std::string name, Shape shape, bool requires_grad = true);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  const std::string& name(std::size_t i) const { return entries_[i].first; }
  Tensor& tensor(std::size_t i) { return *entries_[i].second; }
  const Tensor& tensor(std::size_t i) const { return *entries_[i].second; }

  std::size_t element_count(bool trainable_only = false) const;
  std::vector<Tensor*> trainable();
  std::vector<NamedTensor> named_trainable();
  void zero_grad();

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Tensor>>> entries_;
};

void fill_uniform(Tensor& t, double limit, Rng& rng);
/// Uniform in +/- sqrt(6 / (fan_in + fan_out)).
void fill_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct DenseLayer {
  Tensor* weight = nullptr;  // [in x out]
  Tensor* bias = nullptr;    // [out]
  Activation activation = Activation::identity;

  static DenseLayer create(ParameterStore& store, const std::string& name, std::size_t in,
                           std::size_t out, Activation activation, Rng& rng);

  std::size_t in() const { return weight->dim(0); }
  std::size_t out() const { return weight->dim(1); }
  /// Affine map only, before the activation.
  Var pre_activation(Graph& g, Var x) const;
  Var operator()(Graph& g, Var x) const;
};

struct Conv1DLayer {
  Tensor* kernels = nullptr;  // [filters x window x width]
  Tensor* bias = nullptr;     // [filters]
  Activation activation = Activation::relu;

  static Conv1DLayer create(ParameterStore& store, const std::string& name, std::size_t window,
                            std::size_t width, std::size_t filters, Activation activation, Rng& rng);

  std::size_t filters() const { return kernels->dim(0); }
  std::size_t window() const { return kernels->dim(1); }
  std::size_t width() const { return kernels->dim(2); }
  /// [L x width] -> [(L - window + 1) x filters]
  Var operator()(Graph& g, Var input) const;
};

struct LstmParams {
  Tensor* input_weight = nullptr;      // [d x 4h]
  Tensor* recurrent_weight = nullptr;  // [h x 4h]
  Tensor* bias = nullptr;              // [4h], gate blocks (input, forget, candidate, output)
};

struct BiLstmLayer {
  LstmParams forward;
  LstmParams backward;

  static BiLstmLayer create(ParameterStore& store, const std::string& name, std::size_t input_width,
                            std::size_t hidden, Rng& rng);

  std::size_t hidden() const { return forward.recurrent_weight->dim(0); }
  /// [L x d] -> [2h]: final forward state followed by final backward state.
  Var operator()(Graph& g, Var input) const;
};

struct EmbeddingLayer {
  Tensor* matrix = nullptr;  // [vocab x width]; row 0 is padding
  bool trainable = false;

  static EmbeddingLayer create(ParameterStore& store, const std::string& name, Tensor matrix,
                               bool trainable);

  std::size_t vocab_size() const { return matrix->dim(0); }
  std::size_t width() const { return matrix->dim(1); }
  /// [L] ids -> [L x width]
  Var operator()(Graph& g, std::span<const int> ids) const;
  /// Keeps the padding row at zero after an optimizer step.
  void clamp_padding() const;
};

/// [k] -> [k x 1], a length-k sequence of scalar features.
Var reshape_to_map(Var vector);
Var flatten(Var x);
Var maxpool1d_global(Var input);

}  // namespace fakenews
