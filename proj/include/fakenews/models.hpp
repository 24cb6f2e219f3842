#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fakenews/autodiff.hpp"
#include "fakenews/layers.hpp"
#include "fakenews/liar_data.hpp"
#include "fakenews/rng.hpp"

namespace fakenews {

enum class Architecture { bilstm, cnn, combined };

std::string_view architecture_name(Architecture arch);
/// Throws ContractError for anything but "bilstm", "cnn" or "combined".
Architecture parse_architecture(std::string_view tag);

enum class Attribute { statement, type, job, context, speaker, party, state };
inline constexpr std::size_t kNumAttributes = 7;
std::string_view attribute_name(Attribute a);

/// Attribute pairs whose branch vectors are merged, in order.
inline constexpr std::array<std::pair<Attribute, Attribute>, 10> kRelations = {{
    {Attribute::statement, Attribute::type},
    {Attribute::statement, Attribute::context},
    {Attribute::speaker, Attribute::party},
    {Attribute::party, Attribute::job},
    {Attribute::type, Attribute::context},
    {Attribute::statement, Attribute::state},
    {Attribute::statement, Attribute::party},
    {Attribute::state, Attribute::party},
    {Attribute::context, Attribute::party},
    {Attribute::context, Attribute::speaker},
}};

struct ConvSpec {
  std::size_t window = 1;
  std::size_t filters = 1;
  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct Hyperparameters {
  std::size_t vocab_size = 0;  // taken from the embedding matrix at build time
  std::size_t embedding_dim = 300;
  bool train_embeddings = false;
  EncodingLengths lengths;
  std::size_t lstm_hidden = 50;
  std::size_t lstm_dense = 128;
  std::size_t branch_dense = 64;
  std::size_t merge_width = 64;
  ConvSpec statement_conv{3, 128};
  ConvSpec text_conv{2, 32};     // type, job, context
  ConvSpec profile_conv{1, 32};  // speaker, party, state: length-1 inputs
  ConvSpec credit_conv{2, 32};   // counts and special feature as length-5 maps
  std::uint64_t seed = 42;

  /// Throws ContractError when a convolution window exceeds its input length.
  void validate(Architecture arch) const;

  /// Small configuration for exhaustive gradient checks.
  static Hyperparameters downscaled();

  std::string to_json() const;
  static Hyperparameters from_json(const std::string& text);

  friend bool operator==(const Hyperparameters& a, const Hyperparameters& b);
};

/// Per-attribute encoder. Stages run in this order, each only if present:
/// Bi-LSTM and its dense layer, convolution with global max-pool, final dense.
struct Branch {
  std::optional<BiLstmLayer> bilstm;
  std::optional<DenseLayer> recurrent_dense;
  std::optional<Conv1DLayer> conv;
  std::optional<DenseLayer> dense;

  Var encode(Graph& g, Var input) const;
  std::size_t output_width() const;
};

/// Handles into one forward pass, for probing the wiring.
struct ForwardTrace {
  std::array<Var, kNumAttributes> branches;
  Var counts_branch;
  Var special_branch;
  std::array<Var, kRelations.size()> relation_pre_activation;
  std::array<Var, kRelations.size()> relations;
  Var probs;
};

class ModelGraph {
 public:
  ModelGraph(Architecture arch, Hyperparameters hyper, const Tensor& embedding_matrix);
  ModelGraph(ModelGraph&&) = default;
  ModelGraph& operator=(ModelGraph&&) = default;
  ModelGraph(const ModelGraph&) = delete;
  ModelGraph& operator=(const ModelGraph&) = delete;

  Architecture architecture() const { return arch_; }
  const Hyperparameters& hyper() const { return hyper_; }
  ParameterStore& parameters() { return *params_; }
  const ParameterStore& parameters() const { return *params_; }
  const EmbeddingLayer& embedding() const { return embedding_; }
  const Branch& branch(Attribute a) const { return branches_[static_cast<std::size_t>(a)]; }
  std::size_t relation_count() const { return relations_.size(); }
  const DenseLayer& relation(std::size_t i) const { return relations_.at(i); }
  const DenseLayer& head() const { return head_; }

  /// Throws DimensionError / IndexError naming the offending input slot.
  void check_example(const EncodedExample& ex) const;

  /// Six-way probability vector. Reads parameters only, so concurrent calls
  /// on distinct graphs are safe.
  Var forward(Graph& g, const EncodedExample& ex, ForwardTrace* trace = nullptr) const;

  /// Restores invariants after an optimizer update (zero padding row).
  void after_step() const;

  /// Deep copy with identical parameter values.
  ModelGraph clone() const;

 private:
  Architecture arch_;
  Hyperparameters hyper_;
  std::unique_ptr<ParameterStore> params_;
  EmbeddingLayer embedding_;
  std::array<Branch, kNumAttributes> branches_;
  Branch counts_;
  Branch special_;
  std::vector<DenseLayer> relations_;
  DenseLayer head_;
};

ModelGraph build_bilstm_model(const Hyperparameters& hyper, const Tensor& embedding_matrix);
ModelGraph build_cnn_model(const Hyperparameters& hyper, const Tensor& embedding_matrix);
ModelGraph build_combined_model(const Hyperparameters& hyper, const Tensor& embedding_matrix);
ModelGraph build_model(Architecture arch, const Hyperparameters& hyper, const Tensor& embedding_matrix);

struct Prediction {
  std::array<double, kNumClasses> probs{};
  int label = 0;
};

/// Argmax with the lowest index winning exact ties.
int argmax_label(std::span<const double> probs);

Prediction predict(const ModelGraph& model, const EncodedExample& ex);
/// Fans examples out over up to `threads` workers; results are in input order.
std::vector<Prediction> predict_batch(const ModelGraph& model, std::span<const EncodedExample> examples,
                                      std::size_t threads = 1);

/// Random embedding matrix with a zero padding row.
Tensor random_embedding_matrix(std::size_t vocab, std::size_t dim, Rng& rng);
/// Random example matching the input slots of `hyper`, with post-padding.
EncodedExample random_example(const Hyperparameters& hyper, Rng& rng);

}  // namespace fakenews
