#include "fakenews/verify.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <memory>

#include "fakenews/gradcheck.hpp"
#include "fakenews/layers.hpp"
#include "fakenews/models.hpp"
#include "fakenews/optim.hpp"

namespace fakenews {

namespace {

// A case builds its parameters into `store` and returns the loss closure.
using CaseBuilder = std::function<std::function<Var(Graph&)>(ParameterStore& store, Rng& rng)>;

struct GradientCase {
  std::string name;
  CaseBuilder build;
};

Tensor& random_input(ParameterStore& store, const std::string& name, Shape shape, Rng& rng) {
  Tensor& t = store.add(name, std::move(shape));
  fill_uniform(t, 1.0, rng);
  return t;
}

Tensor random_weights(const Shape& shape, Rng& rng) {
  Tensor w(shape);
  for (double& v : w.data()) v = rng.uniform(-1.0, 1.0);
  return w;
}

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

std::vector<GradientCase> layer_cases() {
  std::vector<GradientCase> cases;
  cases.push_back({"dense relu", [](ParameterStore& store, Rng& rng) {
    const std::size_t in = between(rng, 1, 6), out = between(rng, 1, 6);
    Tensor* x = &random_input(store, "x", {in}, rng);
    DenseLayer layer = DenseLayer::create(store, "dense", in, out, Activation::relu, rng);
    fill_uniform(*layer.bias, 0.5, rng);
    auto w = std::make_shared<Tensor>(random_weights({out}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) { return dot(layer(g, g.parameter(*x)), *w); });
  }});
  cases.push_back({"dense softmax cross-entropy", [](ParameterStore& store, Rng& rng) {
    const std::size_t in = between(rng, 1, 6);
    Tensor* x = &random_input(store, "x", {in}, rng);
    DenseLayer layer = DenseLayer::create(store, "dense", in, kNumClasses, Activation::softmax, rng);
    fill_uniform(*layer.bias, 0.5, rng);
    const int label = static_cast<int>(rng.below(kNumClasses));
    return std::function<Var(Graph&)>(
        [=](Graph& g) { return categorical_crossentropy(layer(g, g.parameter(*x)), label); });
  }});
  cases.push_back({"dense over rows", [](ParameterStore& store, Rng& rng) {
    const std::size_t rows = between(rng, 1, 4), in = between(rng, 1, 5), out = between(rng, 1, 5);
    Tensor* x = &random_input(store, "x", {rows, in}, rng);
    DenseLayer layer = DenseLayer::create(store, "dense", in, out, Activation::identity, rng);
    auto w = std::make_shared<Tensor>(random_weights({rows, out}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) { return dot(layer(g, g.parameter(*x)), *w); });
  }});
  cases.push_back({"conv1d", [](ParameterStore& store, Rng& rng) {
    const std::size_t window = between(rng, 1, 3), len = window + rng.below(4);
    const std::size_t width = between(rng, 1, 4), filters = between(rng, 1, 3);
    Tensor* x = &random_input(store, "x", {len, width}, rng);
    Conv1DLayer conv = Conv1DLayer::create(store, "conv", window, width, filters, Activation::identity, rng);
    fill_uniform(*conv.bias, 0.5, rng);
    auto w = std::make_shared<Tensor>(random_weights({len - window + 1, filters}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) { return dot(conv(g, g.parameter(*x)), *w); });
  }});
  cases.push_back({"conv1d relu max-pool", [](ParameterStore& store, Rng& rng) {
    const std::size_t window = between(rng, 1, 3), len = window + rng.below(5);
    const std::size_t width = between(rng, 1, 4), filters = between(rng, 1, 4);
    Tensor* x = &random_input(store, "x", {len, width}, rng);
    Conv1DLayer conv = Conv1DLayer::create(store, "conv", window, width, filters, Activation::relu, rng);
    fill_uniform(*conv.bias, 0.5, rng);
    auto w = std::make_shared<Tensor>(random_weights({filters}, rng));
    return std::function<Var(Graph&)>(
        [=](Graph& g) { return dot(maxpool1d_global(conv(g, g.parameter(*x))), *w); });
  }});
  cases.push_back({"max-pool", [](ParameterStore& store, Rng& rng) {
    const std::size_t len = between(rng, 1, 6), features = between(rng, 1, 4);
    Tensor* x = &random_input(store, "x", {len, features}, rng);
    auto w = std::make_shared<Tensor>(random_weights({features}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) { return dot(maxpool1d_global(g.parameter(*x)), *w); });
  }});
  cases.push_back({"lstm", [](ParameterStore& store, Rng& rng) {
    const std::size_t len = between(rng, 1, 5), d = between(rng, 1, 4), h = between(rng, 1, 3);
    Tensor* x = &random_input(store, "x", {len, d}, rng);
    Tensor* wx = &random_input(store, "input_weight", {d, 4 * h}, rng);
    Tensor* wh = &random_input(store, "recurrent_weight", {h, 4 * h}, rng);
    Tensor* b = &random_input(store, "bias", {4 * h}, rng);
    const bool reverse = rng.below(2) == 1;
    auto w = std::make_shared<Tensor>(random_weights({h}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) {
      return dot(lstm(g.parameter(*x), g.parameter(*wx), g.parameter(*wh), g.parameter(*b), reverse), *w);
    });
  }});
  cases.push_back({"bilstm", [](ParameterStore& store, Rng& rng) {
    const std::size_t len = between(rng, 1, 5), d = between(rng, 1, 4), h = between(rng, 1, 3);
    Tensor* x = &random_input(store, "x", {len, d}, rng);
    BiLstmLayer layer = BiLstmLayer::create(store, "bilstm", d, h, rng);
    for (std::size_t i = 0; i < store.size(); ++i) fill_uniform(store.tensor(i), 1.0, rng);
    auto w = std::make_shared<Tensor>(random_weights({2 * h}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) { return dot(layer(g, g.parameter(*x)), *w); });
  }});
  cases.push_back({"embedding", [](ParameterStore& store, Rng& rng) {
    const std::size_t vocab = between(rng, 2, 6), width = between(rng, 1, 4), len = between(rng, 1, 6);
    Tensor matrix({vocab, width});
    for (std::size_t i = width; i < matrix.size(); ++i) matrix[i] = rng.uniform(-1.0, 1.0);
    EmbeddingLayer layer = EmbeddingLayer::create(store, "embedding", std::move(matrix), true);
    std::vector<int> ids(len);
    for (int& id : ids) id = static_cast<int>(rng.below(vocab));
    auto w = std::make_shared<Tensor>(random_weights({len, width}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) { return dot(layer(g, ids), *w); });
  }});
  cases.push_back({"concat slice reshape", [](ParameterStore& store, Rng& rng) {
    const std::size_t rows = between(rng, 1, 4), a_cols = between(rng, 1, 3), b_cols = between(rng, 1, 3);
    Tensor* a = &random_input(store, "a", {rows, a_cols}, rng);
    Tensor* b = &random_input(store, "b", {rows, b_cols}, rng);
    const std::size_t cols = a_cols + b_cols;
    const std::size_t begin = rng.below(cols), end = begin + 1 + rng.below(cols - begin);
    auto w = std::make_shared<Tensor>(random_weights({rows * (end - begin)}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) {
      Var joined = concat({g.parameter(*a), g.parameter(*b)}, 1);
      return dot(flatten(slice(joined, 1, begin, end)), *w);
    });
  }});
  cases.push_back({"matmul add scale relu", [](ParameterStore& store, Rng& rng) {
    const std::size_t m = between(rng, 1, 4), k = between(rng, 1, 4), n = between(rng, 1, 4);
    Tensor* a = &random_input(store, "a", {m, k}, rng);
    Tensor* b = &random_input(store, "b", {k, n}, rng);
    Tensor* c = &random_input(store, "c", {m, n}, rng);
    const double factor = rng.uniform(-2.0, 2.0);
    return std::function<Var(Graph&)>([=](Graph& g) {
      Var y = relu(scale(add(matmul(g.parameter(*a), g.parameter(*b)), g.parameter(*c)), factor));
      Var s = sum(y);
      return add(s, scale(sum(g.parameter(*c)), 0.5));
    });
  }});
  cases.push_back({"feature map conv", [](ParameterStore& store, Rng& rng) {
    const std::size_t k = between(rng, 2, 6);
    Tensor* x = &random_input(store, "x", {k}, rng);
    Conv1DLayer conv = Conv1DLayer::create(store, "conv", 2, 1, between(rng, 1, 3), Activation::relu, rng);
    fill_uniform(*conv.bias, 0.5, rng);
    auto w = std::make_shared<Tensor>(random_weights({conv.filters()}, rng));
    return std::function<Var(Graph&)>([=](Graph& g) {
      return dot(maxpool1d_global(conv(g, reshape_to_map(g.parameter(*x)))), *w);
    });
  }});
  return cases;
}

void record(GradientCaseResult& result, const GradCheckReport& report, std::size_t trial) {
  ++result.trials;
  result.elements_checked += report.checked;
  result.skipped_at_kinks += report.skipped_at_kinks;
  if (!report.passed) result.passed = false;
  if (report.max_rel_error > result.max_rel_error || result.worst.empty()) {
    result.max_rel_error = report.max_rel_error;
    result.worst = "trial " + std::to_string(trial) + ": " + report.describe();
  }
}

}  // namespace

std::vector<GradientCaseResult> run_gradient_suite(const GradientSuiteOptions& options) {
  std::vector<GradientCaseResult> results;
  const auto cases = layer_cases();
  for (std::size_t c = 0; c < cases.size(); ++c) {
    GradientCaseResult result;
    result.name = cases[c].name;
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
      Rng rng(options.seed ^ (0x100000001b3ULL * (c + 1)) ^ (trial * 0x9e3779b97f4a7c15ULL));
      ParameterStore store;
      auto loss = cases[c].build(store, rng);
      auto params = store.named_trainable();
      record(result, finite_diff_check(loss, params, options.step, options.tolerance), trial);
    }
    results.push_back(std::move(result));
  }

  for (Architecture arch : {Architecture::bilstm, Architecture::cnn, Architecture::combined}) {
    GradientCaseResult result;
    result.name = "model " + std::string(architecture_name(arch));
    for (std::size_t trial = 0; trial < options.trials; ++trial) {
      Rng rng(options.seed ^ 0xa0761d6478bd642fULL ^ (trial * 0x9e3779b97f4a7c15ULL) ^
              static_cast<std::uint64_t>(arch));
      Hyperparameters hyper = Hyperparameters::downscaled();
      hyper.train_embeddings = true;
      hyper.seed = rng.next();
      const std::size_t vocab = 2 + rng.below(6);
      ModelGraph model(arch, hyper, random_embedding_matrix(vocab, hyper.embedding_dim, rng));
      // Default initialization leaves biases at zero; move them off so every
      // parameter is exercised away from symmetric points.
      ParameterStore& store = model.parameters();
      for (std::size_t i = 0; i < store.size(); ++i) {
        if (store.name(i).ends_with("bias")) fill_uniform(store.tensor(i), 0.2, rng);
      }
      const EncodedExample ex = random_example(model.hyper(), rng);
      const int label = static_cast<int>(rng.below(kNumClasses));
      auto params = store.named_trainable();
      auto loss = [&](Graph& g) { return categorical_crossentropy(model.forward(g, ex), label); };
      record(result, finite_diff_check(loss, params, options.step, options.tolerance), trial);
    }
    results.push_back(std::move(result));
  }
  return results;
}

bool VerifySummary::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::size_t VerifySummary::failures() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return !c.passed; }));
}

VerifySummary run_verify(const VerifyOptions& options) {
  VerifySummary summary;
  summary.checks = check_reproduction(options.published ? *options.published : published_results());
  if (options.gradients) {
    for (const auto& r : run_gradient_suite(options.gradient)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%zu trials, %zu elements, %zu skipped at kinks, max rel error %.3g",
                    r.trials, r.elements_checked, r.skipped_at_kinks, r.max_rel_error);
      std::string detail = buf;
      if (!r.passed) detail += "; worst " + r.worst;
      summary.checks.push_back({"gradient " + r.name, r.passed, detail});
    }
  }
  return summary;
}

void print_checks(std::ostream& out, const std::vector<CheckResult>& checks, bool failures_only) {
  for (const auto& c : checks) {
    if (failures_only && c.passed) continue;
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << ": " << c.detail;
    out << '\n';
  }
}

}  // namespace fakenews
