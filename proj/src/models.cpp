#include "fakenews/models.hpp"

#include <algorithm>
#include <thread>

#include <json.hpp>

#include "fakenews/errors.hpp"

namespace fakenews {

std::string_view architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::bilstm:
      return "bilstm";
    case Architecture::cnn:
      return "cnn";
    case Architecture::combined:
      return "combined";
  }
  return "?";
}

Architecture parse_architecture(std::string_view tag) {
  if (tag == "bilstm") return Architecture::bilstm;
  if (tag == "cnn") return Architecture::cnn;
  if (tag == "combined") return Architecture::combined;
  throw ContractError("unknown model tag '" + std::string(tag) + "' (expected bilstm, cnn or combined)");
}

std::string_view attribute_name(Attribute a) {
  static constexpr std::array<std::string_view, kNumAttributes> names = {
      "statement", "type", "job", "context", "speaker", "party", "state"};
  return names[static_cast<std::size_t>(a)];
}

// ---------------------------------------------------------------------------
// Hyperparameters

namespace {

bool is_text(Attribute a) {
  return a == Attribute::statement || a == Attribute::type || a == Attribute::job ||
         a == Attribute::context;
}

std::size_t text_length(const EncodingLengths& l, Attribute a) {
  switch (a) {
    case Attribute::statement:
      return l.statement;
    case Attribute::type:
      return l.type;
    case Attribute::job:
      return l.job;
    case Attribute::context:
      return l.context;
    default:
      return 1;
  }
}

const ConvSpec& conv_for(const Hyperparameters& h, Attribute a) {
  if (a == Attribute::statement) return h.statement_conv;
  if (is_text(a)) return h.text_conv;
  return h.profile_conv;
}

void require_fits(const ConvSpec& spec, std::size_t length, const std::string& where) {
  if (spec.window == 0 || spec.filters == 0) {
    throw ContractError(where + ": convolution window and filter count must be positive");
  }
  if (spec.window > length) {
    throw ContractError(where + ": convolution window " + std::to_string(spec.window) +
                        " exceeds input length " + std::to_string(length));
  }
}

nlohmann::json conv_json(const ConvSpec& c) { return {{"window", c.window}, {"filters", c.filters}}; }
ConvSpec conv_from(const nlohmann::json& j) {
  return {j.at("window").get<std::size_t>(), j.at("filters").get<std::size_t>()};
}

}  // namespace

void Hyperparameters::validate(Architecture arch) const {
  if (embedding_dim == 0 || lstm_hidden == 0 || lstm_dense == 0 || branch_dense == 0 ||
      merge_width == 0) {
    throw ContractError("layer widths must be positive");
  }
  if (lengths.statement == 0 || lengths.type == 0 || lengths.job == 0 || lengths.context == 0) {
    throw ContractError("sequence lengths must be positive");
  }
  if (arch == Architecture::bilstm) return;
  for (Attribute a : {Attribute::statement, Attribute::type, Attribute::job, Attribute::context}) {
    const std::size_t len = arch == Architecture::combined ? lstm_dense : text_length(lengths, a);
    require_fits(conv_for(*this, a), len, std::string(attribute_name(a)) + " branch");
  }
  require_fits(profile_conv, 1, "speaker/party/state branches");
  require_fits(credit_conv, kNumCredit, "credit branches");
}

Hyperparameters Hyperparameters::downscaled() {
  Hyperparameters h;
  h.vocab_size = 0;
  h.embedding_dim = 4;
  h.lengths = {6, 3, 4, 5};
  h.lstm_hidden = 3;
  h.lstm_dense = 4;
  h.branch_dense = 4;
  h.merge_width = 4;
  h.statement_conv = {3, 2};
  h.text_conv = {2, 2};
  h.profile_conv = {1, 2};
  h.credit_conv = {2, 2};
  return h;
}

std::string Hyperparameters::to_json() const {
  nlohmann::ordered_json j;
  j["vocab_size"] = vocab_size;
  j["embedding_dim"] = embedding_dim;
  j["train_embeddings"] = train_embeddings;
  j["lengths"] = {{"statement", lengths.statement},
                  {"type", lengths.type},
                  {"job", lengths.job},
                  {"context", lengths.context}};
  j["lstm_hidden"] = lstm_hidden;
  j["lstm_dense"] = lstm_dense;
  j["branch_dense"] = branch_dense;
  j["merge_width"] = merge_width;
  j["statement_conv"] = conv_json(statement_conv);
  j["text_conv"] = conv_json(text_conv);
  j["profile_conv"] = conv_json(profile_conv);
  j["credit_conv"] = conv_json(credit_conv);
  j["seed"] = seed;
  return j.dump();
}

Hyperparameters Hyperparameters::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Hyperparameters h;
  h.vocab_size = j.at("vocab_size");
  h.embedding_dim = j.at("embedding_dim");
  h.train_embeddings = j.at("train_embeddings");
  const auto& l = j.at("lengths");
  h.lengths = {l.at("statement"), l.at("type"), l.at("job"), l.at("context")};
  h.lstm_hidden = j.at("lstm_hidden");
  h.lstm_dense = j.at("lstm_dense");
  h.branch_dense = j.at("branch_dense");
  h.merge_width = j.at("merge_width");
  h.statement_conv = conv_from(j.at("statement_conv"));
  h.text_conv = conv_from(j.at("text_conv"));
  h.profile_conv = conv_from(j.at("profile_conv"));
  h.credit_conv = conv_from(j.at("credit_conv"));
  h.seed = j.at("seed");
  return h;
}

bool operator==(const Hyperparameters& a, const Hyperparameters& b) {
  return a.to_json() == b.to_json();
}

// ---------------------------------------------------------------------------
// Branch

Var Branch::encode(Graph& g, Var input) const {
  Var x = input;
  if (bilstm) {
    x = (*recurrent_dense)(g, (*bilstm)(g, x));
  }
  if (conv) {
    if (x.value().rank() == 1) x = reshape_to_map(x);
    x = maxpool1d_global((*conv)(g, x));
  }
  if (dense) {
    if (x.value().rank() != 1) x = flatten(x);
    x = (*dense)(g, x);
  }
  return x;
}

std::size_t Branch::output_width() const {
  if (dense) return dense->out();
  if (conv) return conv->filters();
  return recurrent_dense->out();
}

// ---------------------------------------------------------------------------
// ModelGraph

ModelGraph::ModelGraph(Architecture arch, Hyperparameters hyper, const Tensor& embedding_matrix)
    : arch_(arch), hyper_(std::move(hyper)), params_(std::make_unique<ParameterStore>()) {
  if (embedding_matrix.rank() != 2) throw DimensionError("embedding matrix must be rank 2");
  hyper_.vocab_size = embedding_matrix.dim(0);
  if (embedding_matrix.dim(1) != hyper_.embedding_dim) {
    throw DimensionError("embedding matrix width " + std::to_string(embedding_matrix.dim(1)) +
                         " does not match embedding_dim " + std::to_string(hyper_.embedding_dim));
  }
  hyper_.validate(arch_);
  Rng rng(hyper_.seed);
  ParameterStore& store = *params_;
  embedding_ = EmbeddingLayer::create(store, "embedding", embedding_matrix, hyper_.train_embeddings);

  const std::size_t dim = hyper_.embedding_dim;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    const auto a = static_cast<Attribute>(i);
    const std::string name(attribute_name(a));
    Branch& b = branches_[i];
    const ConvSpec& spec = conv_for(hyper_, a);
    if (is_text(a)) {
      if (arch_ != Architecture::cnn) {
        b.bilstm = BiLstmLayer::create(store, name + ".bilstm", dim, hyper_.lstm_hidden, rng);
        b.recurrent_dense = DenseLayer::create(store, name + ".lstm_dense", 2 * hyper_.lstm_hidden,
                                               hyper_.lstm_dense, Activation::relu, rng);
      }
      if (arch_ == Architecture::cnn) {
        b.conv = Conv1DLayer::create(store, name + ".conv", spec.window, dim, spec.filters,
                                     Activation::relu, rng);
      } else if (arch_ == Architecture::combined) {
        b.conv = Conv1DLayer::create(store, name + ".conv", spec.window, 1, spec.filters,
                                     Activation::relu, rng);
      }
      if (b.conv) {
        b.dense = DenseLayer::create(store, name + ".dense", spec.filters, hyper_.branch_dense,
                                     Activation::relu, rng);
      }
    } else if (arch_ == Architecture::bilstm) {
      b.dense = DenseLayer::create(store, name + ".dense", dim, hyper_.lstm_dense, Activation::relu, rng);
    } else {
      b.conv = Conv1DLayer::create(store, name + ".conv", spec.window, dim, spec.filters,
                                   Activation::relu, rng);
      b.dense = DenseLayer::create(store, name + ".dense", spec.filters, hyper_.branch_dense,
                                   Activation::relu, rng);
    }
  }

  auto credit_branch = [&](const std::string& name) {
    Branch b;
    if (arch_ == Architecture::bilstm) {
      b.dense = DenseLayer::create(store, name + ".dense", kNumCredit, hyper_.lstm_dense,
                                   Activation::relu, rng);
    } else {
      const ConvSpec& spec = hyper_.credit_conv;
      b.conv = Conv1DLayer::create(store, name + ".conv", spec.window, 1, spec.filters,
                                   Activation::relu, rng);
      b.dense = DenseLayer::create(store, name + ".dense", spec.filters, hyper_.branch_dense,
                                   Activation::relu, rng);
    }
    return b;
  };
  counts_ = credit_branch("counts");
  special_ = credit_branch("special");

  std::size_t head_in = counts_.output_width() + special_.output_width();
  for (std::size_t r = 0; r < kRelations.size(); ++r) {
    const auto [a, b] = kRelations[r];
    const std::size_t in = branch(a).output_width() + branch(b).output_width();
    relations_.push_back(DenseLayer::create(store, "relation" + std::to_string(r) + "." +
                                                       std::string(attribute_name(a)) + "_" +
                                                       std::string(attribute_name(b)),
                                            in, hyper_.merge_width, Activation::relu, rng));
    head_in += hyper_.merge_width;
  }
  head_ = DenseLayer::create(store, "head", head_in, kNumClasses, Activation::softmax, rng);
}

void ModelGraph::check_example(const EncodedExample& ex) const {
  auto check_seq = [&](const std::vector<int>& ids, std::size_t expected, const char* slot) {
    if (ids.size() != expected) {
      throw DimensionError(std::string("input slot ") + slot + ": expected length " +
                           std::to_string(expected) + ", got " + std::to_string(ids.size()));
    }
    for (int id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= hyper_.vocab_size) {
        throw IndexError(std::string("input slot ") + slot + ": token id " + std::to_string(id) +
                         " outside vocabulary of " + std::to_string(hyper_.vocab_size));
      }
    }
  };
  check_seq(ex.statement_ids, hyper_.lengths.statement, "statement_ids");
  check_seq(ex.type_ids, hyper_.lengths.type, "type_ids");
  check_seq(ex.job_ids, hyper_.lengths.job, "job_ids");
  check_seq(ex.context_ids, hyper_.lengths.context, "context_ids");
  check_seq({ex.speaker_id}, 1, "speaker_id");
  check_seq({ex.party_id}, 1, "party_id");
  check_seq({ex.state_id}, 1, "state_id");
  if (ex.label_index < 0 || static_cast<std::size_t>(ex.label_index) >= kNumClasses) {
    throw IndexError("input slot label_index: " + std::to_string(ex.label_index) + " outside [0, 6)");
  }
}

Var ModelGraph::forward(Graph& g, const EncodedExample& ex, ForwardTrace* trace) const {
  check_example(ex);
  std::array<Var, kNumAttributes> encoded;
  auto ids_for = [&](Attribute a) -> std::vector<int> {
    switch (a) {
      case Attribute::statement:
        return ex.statement_ids;
      case Attribute::type:
        return ex.type_ids;
      case Attribute::job:
        return ex.job_ids;
      case Attribute::context:
        return ex.context_ids;
      case Attribute::speaker:
        return {ex.speaker_id};
      case Attribute::party:
        return {ex.party_id};
      case Attribute::state:
        return {ex.state_id};
    }
    return {};
  };
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    const auto ids = ids_for(static_cast<Attribute>(i));
    encoded[i] = branches_[i].encode(g, embedding_(g, ids));
  }
  Var counts = counts_.encode(g, g.constant(Tensor({kNumCredit}, {ex.counts.begin(), ex.counts.end()})));
  Var special = special_.encode(
      g, g.constant(Tensor({kNumCredit}, {ex.special_feature.begin(), ex.special_feature.end()})));

  std::vector<Var> merged;
  merged.reserve(kRelations.size() + 2);
  for (std::size_t r = 0; r < kRelations.size(); ++r) {
    const auto [a, b] = kRelations[r];
    Var pair = concat({encoded[static_cast<std::size_t>(a)], encoded[static_cast<std::size_t>(b)]}, 0);
    Var pre = relations_[r].pre_activation(g, pair);
    Var rel = activate(pre, relations_[r].activation);
    merged.push_back(rel);
    if (trace) {
      trace->relation_pre_activation[r] = pre;
      trace->relations[r] = rel;
    }
  }
  merged.push_back(counts);
  merged.push_back(special);
  Var probs = head_(g, concat(merged, 0));
  if (trace) {
    trace->branches = encoded;
    trace->counts_branch = counts;
    trace->special_branch = special;
    trace->probs = probs;
  }
  return probs;
}

void ModelGraph::after_step() const {
  if (embedding_.trainable) embedding_.clamp_padding();
}

ModelGraph ModelGraph::clone() const {
  ModelGraph copy(arch_, hyper_, *embedding_.matrix);
  for (std::size_t i = 0; i < params_->size(); ++i) {
    auto src = params_->tensor(i).data();
    auto dst = copy.params_->tensor(i).data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return copy;
}

ModelGraph build_bilstm_model(const Hyperparameters& hyper, const Tensor& embedding_matrix) {
  return ModelGraph(Architecture::bilstm, hyper, embedding_matrix);
}

ModelGraph build_cnn_model(const Hyperparameters& hyper, const Tensor& embedding_matrix) {
  return ModelGraph(Architecture::cnn, hyper, embedding_matrix);
}

ModelGraph build_combined_model(const Hyperparameters& hyper, const Tensor& embedding_matrix) {
  return ModelGraph(Architecture::combined, hyper, embedding_matrix);
}

ModelGraph build_model(Architecture arch, const Hyperparameters& hyper, const Tensor& embedding_matrix) {
  return ModelGraph(arch, hyper, embedding_matrix);
}

// ---------------------------------------------------------------------------
// Prediction

int argmax_label(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<int>(best);
}

Prediction predict(const ModelGraph& model, const EncodedExample& ex) {
  Graph g;
  Var probs = model.forward(g, ex);
  Prediction p;
  std::copy(probs.value().data().begin(), probs.value().data().end(), p.probs.begin());
  p.label = argmax_label(p.probs);
  return p;
}

std::vector<Prediction> predict_batch(const ModelGraph& model, std::span<const EncodedExample> examples,
                                      std::size_t threads) {
  std::vector<Prediction> out(examples.size());
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(examples.size(), 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < examples.size(); ++i) out[i] = predict(model, examples[i]);
    return out;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < examples.size(); i += threads) out[i] = predict(model, examples[i]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Tensor random_embedding_matrix(std::size_t vocab, std::size_t dim, Rng& rng) {
  Tensor m({vocab, dim});
  for (std::size_t i = dim; i < m.size(); ++i) m[i] = rng.uniform(-0.5, 0.5);
  return m;
}

EncodedExample random_example(const Hyperparameters& hyper, Rng& rng) {
  const auto vocab = static_cast<std::uint64_t>(hyper.vocab_size);
  if (vocab < 2) throw ContractError("random_example needs a vocabulary of at least 2");
  auto sequence = [&](std::size_t len) {
    std::vector<int> ids(len, Vocab::kPadId);
    const std::size_t real = 1 + rng.below(len);
    for (std::size_t i = 0; i < real; ++i) ids[i] = static_cast<int>(1 + rng.below(vocab - 1));
    return ids;
  };
  EncodedExample ex;
  ex.statement_ids = sequence(hyper.lengths.statement);
  ex.type_ids = sequence(hyper.lengths.type);
  ex.job_ids = sequence(hyper.lengths.job);
  ex.context_ids = sequence(hyper.lengths.context);
  ex.speaker_id = static_cast<int>(rng.below(vocab));
  ex.party_id = static_cast<int>(rng.below(vocab));
  ex.state_id = static_cast<int>(rng.below(vocab));
  std::array<int, kNumCredit> counts{};
  for (std::size_t i = 0; i < kNumCredit; ++i) {
    counts[i] = static_cast<int>(rng.below(8));
    ex.counts[i] = counts[i];
  }
  ex.special_feature = credit_special_feature(counts);
  ex.label_index = static_cast<int>(rng.below(kNumClasses));
  return ex;
}

}  // namespace fakenews
