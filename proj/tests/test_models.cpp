#include <doctest.h>

#include <chrono>
#include <cmath>
#include <sstream>

#include "fakenews/checkpoint.hpp"
#include "fakenews/errors.hpp"
#include "fakenews/gradcheck.hpp"
#include "fakenews/models.hpp"
#include "fakenews/optim.hpp"

using namespace fakenews;

namespace {

std::size_t dense_count(std::size_t in, std::size_t out) { return in * out + out; }
std::size_t conv_count(std::size_t window, std::size_t width, std::size_t filters) {
  return filters * window * width + filters;
}
std::size_t bilstm_count(std::size_t d, std::size_t h) { return 2 * (4 * h * d + 4 * h * h + 4 * h); }

Tensor small_embeddings(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  return random_embedding_matrix(vocab, dim, rng);
}

EncodedExample padding_example(const Hyperparameters& h) {
  EncodedExample ex;
  ex.statement_ids.assign(h.lengths.statement, 0);
  ex.type_ids.assign(h.lengths.type, 0);
  ex.job_ids.assign(h.lengths.job, 0);
  ex.context_ids.assign(h.lengths.context, 0);
  return ex;
}

constexpr std::array<Architecture, 3> kArchs = {Architecture::bilstm, Architecture::cnn, Architecture::combined};

}  // namespace

TEST_CASE("architecture tags") {
  CHECK(parse_architecture("combined") == Architecture::combined);
  CHECK(architecture_name(parse_architecture("bilstm")) == "bilstm");
  CHECK_THROWS_AS(parse_architecture("rnn"), ContractError);
}

TEST_CASE("bilstm model: statement width and parameter count") {
  const std::size_t vocab = 30, d = 300;
  Hyperparameters h;
  const ModelGraph m = build_bilstm_model(h, small_embeddings(vocab, d, 1));
  CHECK(m.branch(Attribute::statement).bilstm->hidden() * 2 == 100);
  Graph g;
  ForwardTrace trace;
  m.forward(g, padding_example(m.hyper()), &trace);
  CHECK(trace.branches[0].shape() == Shape{128});

  const std::size_t text = bilstm_count(d, 50) + dense_count(100, 128);
  const std::size_t profile = dense_count(d, 128);
  const std::size_t credit = dense_count(5, 128);
  const std::size_t relations = 10 * dense_count(256, 64);
  const std::size_t head = dense_count(640 + 256, 6);
  CHECK(m.parameters().element_count() == vocab * d + 4 * text + 3 * profile + 2 * credit + relations + head);
  CHECK(m.parameters().element_count(true) == m.parameters().element_count() - vocab * d);
}

TEST_CASE("cnn model: conv lengths, pooled widths and parameter count") {
  const std::size_t vocab = 20, d = 300;
  Hyperparameters h;
  const ModelGraph m = build_cnn_model(h, small_embeddings(vocab, d, 2));
  Graph g;
  Var conv = (*m.branch(Attribute::statement).conv)(g, m.embedding()(g, padding_example(h).statement_ids));
  CHECK(conv.shape() == Shape{50 - 3 + 1, 128});
  CHECK(maxpool1d_global(conv).shape() == Shape{128});

  const std::size_t statement = conv_count(3, d, 128) + dense_count(128, 64);
  const std::size_t text = conv_count(2, d, 32) + dense_count(32, 64);
  const std::size_t profile = conv_count(1, d, 32) + dense_count(32, 64);
  const std::size_t credit = conv_count(2, 1, 32) + dense_count(32, 64);
  const std::size_t relations = 10 * dense_count(128, 64);
  const std::size_t head = dense_count(640 + 128, 6);
  CHECK(m.parameters().element_count() ==
        vocab * d + statement + 3 * text + 3 * profile + 2 * credit + relations + head);
}

TEST_CASE("combined model: ten relations and parameter count") {
  const std::size_t vocab = 20, d = 300;
  Hyperparameters h;
  const ModelGraph m = build_combined_model(h, small_embeddings(vocab, d, 3));
  CHECK(m.relation_count() == 10);
  const std::size_t statement = bilstm_count(d, 50) + dense_count(100, 128) + conv_count(3, 1, 128) +
                                dense_count(128, 64);
  const std::size_t text = bilstm_count(d, 50) + dense_count(100, 128) + conv_count(2, 1, 32) + dense_count(32, 64);
  const std::size_t profile = conv_count(1, d, 32) + dense_count(32, 64);
  const std::size_t credit = conv_count(2, 1, 32) + dense_count(32, 64);
  const std::size_t relations = 10 * dense_count(128, 64);
  const std::size_t head = dense_count(640 + 128, 6);
  CHECK(m.parameters().element_count() ==
        vocab * d + statement + 3 * text + 3 * profile + 2 * credit + relations + head);
}

TEST_CASE("relations follow the declared attribute pairs") {
  Hyperparameters h = Hyperparameters::downscaled();
  const ModelGraph m = build_combined_model(h, small_embeddings(6, h.embedding_dim, 4));
  for (std::size_t r = 0; r < kRelations.size(); ++r) {
    const auto [a, b] = kRelations[r];
    CHECK(m.relation(r).in() == m.branch(a).output_width() + m.branch(b).output_width());
    const std::string name = "relation" + std::to_string(r) + "." + std::string(attribute_name(a)) + "_" +
                             std::string(attribute_name(b)) + ".weight";
    CHECK(m.parameters().contains(name));
  }
  // Every attribute feeds at least one relation.
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    bool used = false;
    for (const auto& [a, b] : kRelations) used = used || a == Attribute(i) || b == Attribute(i);
    CHECK(used);
  }
}

TEST_CASE("all-padding input yields a valid probability vector") {
  for (Architecture arch : kArchs) {
    Hyperparameters h;
    const ModelGraph m = build_model(arch, h, small_embeddings(10, 300, 5));
    const Prediction p = predict(m, padding_example(h));
    double total = 0.0;
    for (double v : p.probs) {
      CHECK(std::isfinite(v));
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("zeroed relation inputs give a zero pre-activation") {
  for (Architecture arch : kArchs) {
    Hyperparameters h = Hyperparameters::downscaled();
    const ModelGraph m = build_model(arch, h, small_embeddings(8, h.embedding_dim, 6));
    Rng rng(7);
    EncodedExample ex = random_example(m.hyper(), rng);
    // Relation 0 merges statement and type; make both all padding.
    std::fill(ex.statement_ids.begin(), ex.statement_ids.end(), 0);
    std::fill(ex.type_ids.begin(), ex.type_ids.end(), 0);
    ex.context_ids[0] = 3;
    Graph g;
    ForwardTrace trace;
    m.forward(g, ex, &trace);
    for (double v : trace.branches[0].value().data()) CHECK(v == 0.0);
    for (double v : trace.relation_pre_activation[0].value().data()) CHECK(v == 0.0);
    // Relation 4 (type, context) still sees the context branch.
    double magnitude = 0.0;
    for (double v : trace.relation_pre_activation[4].value().data()) magnitude += std::abs(v);
    CHECK(magnitude > 0.0);
  }
}

TEST_CASE("forward is deterministic and the output sums to one") {
  for (Architecture arch : kArchs) {
    Hyperparameters h = Hyperparameters::downscaled();
    const ModelGraph a = build_model(arch, h, small_embeddings(9, h.embedding_dim, 8));
    const ModelGraph b = build_model(arch, h, small_embeddings(9, h.embedding_dim, 8));
    Rng rng(9);
    for (int i = 0; i < 50; ++i) {
      const EncodedExample ex = random_example(a.hyper(), rng);
      const Prediction pa = predict(a, ex), pb = predict(b, ex);
      CHECK(pa.probs == pb.probs);
      double total = 0.0;
      for (double v : pa.probs) total += v;
      CHECK(std::abs(total - 1.0) <= 1e-12);
      CHECK(pa.label == argmax_label(pa.probs));
    }
  }
}

TEST_CASE("batch prediction equals per-example prediction") {
  Hyperparameters h = Hyperparameters::downscaled();
  const ModelGraph m = build_combined_model(h, small_embeddings(9, h.embedding_dim, 10));
  Rng rng(11);
  std::vector<EncodedExample> examples;
  for (int i = 0; i < 37; ++i) examples.push_back(random_example(m.hyper(), rng));
  const auto batch = predict_batch(m, examples, 4);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Prediction single = predict(m, examples[i]);
    CHECK(batch[i].probs == single.probs);
    CHECK(batch[i].label == single.label);
  }
}

TEST_CASE("argmax ties go to the lowest index") {
  const std::array<double, 6> probs = {0.1, 0.3, 0.3, 0.1, 0.1, 0.1};
  CHECK(argmax_label(probs) == 1);
}

TEST_CASE("malformed inputs name the slot") {
  Hyperparameters h = Hyperparameters::downscaled();
  const ModelGraph m = build_cnn_model(h, small_embeddings(5, h.embedding_dim, 12));
  EncodedExample ex = padding_example(m.hyper());
  ex.job_ids.pop_back();
  CHECK_THROWS_WITH_AS(predict(m, ex), doctest::Contains("job_ids"), DimensionError);
  ex = padding_example(m.hyper());
  ex.party_id = 5;
  CHECK_THROWS_WITH_AS(predict(m, ex), doctest::Contains("party_id"), IndexError);
}

TEST_CASE("convolution windows longer than their inputs are rejected") {
  Hyperparameters h = Hyperparameters::downscaled();
  h.text_conv.window = 4;  // type length is 3
  CHECK_THROWS_AS(build_cnn_model(h, small_embeddings(5, h.embedding_dim, 13)), ContractError);
  h = Hyperparameters::downscaled();
  h.profile_conv.window = 2;
  CHECK_THROWS_AS(build_cnn_model(h, small_embeddings(5, h.embedding_dim, 13)), ContractError);
}

TEST_CASE("hyperparameters round-trip through JSON") {
  Hyperparameters h = Hyperparameters::downscaled();
  h.seed = 99;
  h.train_embeddings = true;
  CHECK(Hyperparameters::from_json(h.to_json()) == h);
}

TEST_CASE("downscaled models pass a full finite-difference check") {
  for (Architecture arch : kArchs) {
    Hyperparameters h = Hyperparameters::downscaled();
    h.train_embeddings = true;
    ModelGraph m = build_model(arch, h, small_embeddings(7, h.embedding_dim, 14));
    Rng rng(15);
    for (std::size_t i = 0; i < m.parameters().size(); ++i) {
      if (m.parameters().name(i).ends_with("bias")) fill_uniform(m.parameters().tensor(i), 0.2, rng);
    }
    const EncodedExample ex = random_example(m.hyper(), rng);
    auto params = m.parameters().named_trainable();
    auto report = finite_diff_check([&](Graph& g) { return categorical_crossentropy(m.forward(g, ex), 2); }, params,
                                    1e-3, 1e-4);
    CHECK_MESSAGE(report.passed, architecture_name(arch) << ": " << report.describe());
    CHECK(report.checked + report.skipped_at_kinks == m.parameters().element_count(true));
  }
}

TEST_CASE("clone copies every parameter") {
  Hyperparameters h = Hyperparameters::downscaled();
  ModelGraph m = build_bilstm_model(h, small_embeddings(6, h.embedding_dim, 16));
  (*m.head().bias)[3] = 0.75;
  const ModelGraph c = m.clone();
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    CHECK(c.parameters().name(i) == m.parameters().name(i));
    CHECK(c.parameters().tensor(i) == m.parameters().tensor(i));
  }
}

TEST_CASE("checkpoint round trip is exact and byte-stable") {
  for (Architecture arch : kArchs) {
    Hyperparameters h = Hyperparameters::downscaled();
    h.seed = 5;
    ModelGraph m = build_model(arch, h, small_embeddings(6, h.embedding_dim, 17));
    (*m.head().bias)[1] = 1.0 / 3.0;
    std::ostringstream first;
    save_checkpoint(first, m, 0xfeedULL);
    std::istringstream in(first.str());
    LoadedCheckpoint loaded = load_checkpoint(in, 0xfeedULL);
    CHECK(loaded.vocab_hash == 0xfeedULL);
    CHECK(loaded.model.architecture() == arch);
    CHECK(loaded.model.hyper() == m.hyper());
    for (std::size_t i = 0; i < m.parameters().size(); ++i) {
      CHECK(loaded.model.parameters().tensor(i) == m.parameters().tensor(i));
    }
    std::ostringstream second;
    save_checkpoint(second, loaded.model, loaded.vocab_hash);
    CHECK(first.str() == second.str());
  }
}

TEST_CASE("checkpoint rejects a stale vocabulary and damaged files") {
  Hyperparameters h = Hyperparameters::downscaled();
  const ModelGraph m = build_cnn_model(h, small_embeddings(6, h.embedding_dim, 18));
  std::ostringstream out;
  save_checkpoint(out, m, 1);
  std::istringstream stale(out.str());
  CHECK_THROWS_WITH_AS(load_checkpoint(stale, 2), doctest::Contains("stale"), CheckpointError);
  const std::string text = out.str();
  std::istringstream cut(text.substr(0, text.size() - 20));
  CHECK_THROWS_AS(load_checkpoint(cut), CheckpointError);
  std::istringstream junk("not a checkpoint\n");
  CHECK_THROWS_AS(load_checkpoint(junk), CheckpointError);
}

TEST_CASE("evaluating a test-split-sized batch stays within budget") {
  Hyperparameters h;
  const ModelGraph m = build_combined_model(h, small_embeddings(200, 300, 19));
  h.vocab_size = 200;
  Rng rng(20);
  std::vector<EncodedExample> examples;
  for (int i = 0; i < 1266; ++i) examples.push_back(random_example(m.hyper(), rng));
  const auto start = std::chrono::steady_clock::now();
  predict_batch(m, examples, 2);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("1266 combined-model predictions in " << seconds << " s");
  CHECK(seconds < 60.0);
}
