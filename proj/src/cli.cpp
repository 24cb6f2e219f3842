#include "fakenews/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "fakenews/checkpoint.hpp"
#include "fakenews/embeddings.hpp"
#include "fakenews/errors.hpp"
#include "fakenews/eval_report.hpp"
#include "fakenews/liar_data.hpp"
#include "fakenews/verify.hpp"

namespace fakenews {

namespace fs = std::filesystem;

namespace {

constexpr std::array<const char*, 3> kSplits = {"train", "valid", "test"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t to_size(const std::string& key, const std::string& value) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size()) {
    throw ContractError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw ContractError(key + ": expected a number, got '" + value + "'");
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ContractError(key + ": expected true or false, got '" + value + "'");
}

fs::path cache_path(const RunConfig& c, const std::string& file) { return c.out_dir / file; }

Vocab read_vocab(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " (run prepare first)");
  return Vocab::load(in);
}

std::vector<EncodedExample> read_split(const RunConfig& c, const std::string& split) {
  const fs::path path = cache_path(c, split + ".enc");
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " (run prepare first)");
  return read_encoded(in, path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::size_t thread_count(const RunConfig& c) {
  if (c.threads > 0) return c.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  static const std::map<std::string, ConvSpec Hyperparameters::*> kConvs = {
      {"statement_conv", &Hyperparameters::statement_conv},
      {"text_conv", &Hyperparameters::text_conv},
      {"profile_conv", &Hyperparameters::profile_conv},
      {"credit_conv", &Hyperparameters::credit_conv},
  };
  static const std::map<std::string, std::size_t Hyperparameters::*> kWidths = {
      {"lstm_hidden", &Hyperparameters::lstm_hidden},
      {"lstm_dense", &Hyperparameters::lstm_dense},
      {"branch_dense", &Hyperparameters::branch_dense},
      {"merge_width", &Hyperparameters::merge_width},
  };

  if (key == "data_dir") {
    data_dir = value;
  } else if (key == "embeddings") {
    if (value.empty()) {
      embeddings.reset();
    } else {
      embeddings = fs::path(value);
    }
  } else if (key == "model") {
    model = parse_architecture(value);
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "seed") {
    seed = to_size(key, value);
  } else if (key == "epochs") {
    train.epochs = to_size(key, value);
  } else if (key == "batch_size") {
    train.batch_size = to_size(key, value);
  } else if (key == "rho") {
    train.rho = to_double(key, value);
  } else if (key == "epsilon") {
    train.epsilon = to_double(key, value);
  } else if (key == "shuffle") {
    train.shuffle = to_bool(key, value);
  } else if (key == "patience") {
    const std::size_t p = to_size(key, value);
    train.patience = p == 0 ? std::nullopt : std::optional<std::size_t>(p);
  } else if (key == "target_accuracy") {
    train.target_accuracy = to_double(key, value);
  } else if (key == "min_count") {
    min_count = to_size(key, value);
  } else if (key == "embedding_dim") {
    embedding_dim = to_size(key, value);
  } else if (key == "train_embeddings") {
    hyper.train_embeddings = to_bool(key, value);
  } else if (key == "checkpoint") {
    checkpoint = fs::path(value);
  } else if (key == "split") {
    if (std::find(kSplits.begin(), kSplits.end(), value) == kSplits.end()) {
      throw ContractError("split must be train, valid or test, got '" + value + "'");
    }
    split = value;
  } else if (key == "threads") {
    threads = to_size(key, value);
  } else if (key == "gradients") {
    gradients = to_bool(key, value);
  } else if (key == "gradient_trials") {
    gradient_trials = to_size(key, value);
  } else if (auto w = kWidths.find(key); w != kWidths.end()) {
    hyper.*(w->second) = to_size(key, value);
  } else {
    for (const auto& [prefix, member] : kConvs) {
      if (key == prefix + "_window") {
        (hyper.*member).window = to_size(key, value);
        return;
      }
      if (key == prefix + "_filters") {
        (hyper.*member).filters = to_size(key, value);
        return;
      }
    }
    throw ContractError("unknown config key '" + key + "'");
  }
}

void RunConfig::finalize() {
  train.seed = seed;
  hyper.seed = seed;
  train.validate();
}

void apply_config_file(RunConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected key = value");
    try {
      config.set(trim(content.substr(0, eq)), trim(content.substr(eq + 1)));
    } catch (const ContractError& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

int cmd_prepare(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::array<std::vector<LiarRecord>, 3> records;
  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    const fs::path path = config.data_dir / (std::string(kSplits[s]) + ".tsv");
    if (!fs::exists(path)) throw Error("missing input file " + path.string());
    records[s] = parse_tsv(path);
  }
  const Vocab vocab = build_vocab(records[0], config.min_count);

  std::optional<WordVectorStore> store;
  std::size_t dim = config.embedding_dim;
  if (config.embeddings) {
    if (!fs::exists(*config.embeddings)) throw Error("missing embeddings file " + config.embeddings->string());
    std::unordered_set<std::string> keep(vocab.tokens().begin(), vocab.tokens().end());
    LoadOptions options;
    options.expected_dim = 0;
    options.keep = &keep;
    options.fold_case = true;
    store = config.embeddings->extension() == ".txt" ? load_word2vec_text(*config.embeddings, options)
                                                      : load_word2vec_binary(*config.embeddings, options);
    dim = store->dim;
  }
  const EmbeddingMatrix emb = build_embedding_matrix(vocab, store ? &*store : nullptr, dim, config.seed);

  fs::create_directories(config.out_dir);
  {
    std::ofstream vout(cache_path(config, "vocab.txt"), std::ios::binary);
    vocab.save(vout);
  }
  const EncodingLengths lengths = config.hyper.lengths;
  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    const auto encoded = encode_records(records[s], vocab, lengths);
    std::ofstream eout(cache_path(config, std::string(kSplits[s]) + ".enc"), std::ios::binary);
    write_encoded(eout, encoded, lengths);
  }
  save_embedding_matrix(cache_path(config, "embeddings.bin"), emb.matrix);

  nlohmann::ordered_json meta;
  meta["vocab_hash"] = hash_hex(vocab.hash());
  meta["vocab_size"] = vocab.size();
  meta["embedding_dim"] = dim;
  meta["embedding_source"] = config.embeddings ? config.embeddings->filename().string() : "hashed";
  meta["embedding_coverage"] = emb.coverage;
  meta["seed"] = config.seed;
  for (std::size_t s = 0; s < kSplits.size(); ++s) meta["records"][kSplits[s]] = records[s].size();
  write_text(cache_path(config, "meta.json"), meta.dump(2) + "\n");

  constexpr std::array<std::size_t, 3> kExpected = {kLiarTrainSize, kLiarValidSize, kLiarTestSize};
  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    out << kSplits[s] << ": " << records[s].size() << " records\n";
    if (records[s].size() != kExpected[s]) {
      err << "warning: " << kSplits[s] << " has " << records[s].size() << " records, the distributed split has "
          << kExpected[s] << "\n";
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "vocabulary: %zu tokens, embedding coverage %.4f (%zu found, dim %zu)\n",
                vocab.size(), emb.coverage, emb.found, dim);
  out << buf;
  return kExitOk;
}

int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const Vocab vocab = read_vocab(cache_path(config, "vocab.txt"));
  const auto train_set = read_split(config, "train");
  const auto valid_set = read_split(config, "valid");
  const Tensor matrix = load_embedding_matrix(cache_path(config, "embeddings.bin"));
  if (matrix.dim(0) != vocab.size()) {
    throw CheckpointError("embedding matrix has " + std::to_string(matrix.dim(0)) + " rows but the vocabulary has " +
                          std::to_string(vocab.size()) + " tokens: stale cache, rerun prepare");
  }
  Hyperparameters hyper = config.hyper;
  hyper.embedding_dim = matrix.dim(1);
  if (!train_set.empty()) {
    const auto& ex = train_set.front();
    hyper.lengths = {ex.statement_ids.size(), ex.type_ids.size(), ex.job_ids.size(), ex.context_ids.size()};
  }
  ModelGraph model = build_model(config.model, hyper, matrix);

  fs::create_directories(config.out_dir);
  std::ofstream log(cache_path(config, "train.log"), std::ios::binary);
  if (!log) throw Error("cannot write " + cache_path(config, "train.log").string());
  const TrainingLog result = train(model, train_set, valid_set, config.train, [&](const EpochRecord& r) {
    log << r.to_line() << '\n';
    log.flush();
    char buf[128];
    std::snprintf(buf, sizeof buf, "epoch %3zu  loss %.6f  train acc %.4f  val acc %.4f\n", r.epoch, r.mean_loss,
                  r.train_accuracy, r.val_accuracy);
    out << buf;
  });
  save_checkpoint(cache_path(config, "model.ckpt"), model, vocab.hash());
  if (result.epochs.empty()) {
    err << "warning: no epochs were run; the checkpoint holds the initial parameters\n";
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "best epoch %zu, validation accuracy %.4f\n", result.best_epoch,
                result.best_val_accuracy);
  out << buf;
  return kExitOk;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream&) {
  const Vocab vocab = read_vocab(cache_path(config, "vocab.txt"));
  const fs::path ckpt = config.checkpoint ? *config.checkpoint : cache_path(config, "model.ckpt");
  LoadedCheckpoint loaded = load_checkpoint(ckpt, vocab.hash());
  const auto examples = read_split(config, config.split);
  if (examples.empty()) throw ContractError("split '" + config.split + "' is empty");

  const auto predictions = predict_batch(loaded.model, examples, thread_count(config));
  std::vector<int> actual, predicted;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    actual.push_back(examples[i].label_index);
    predicted.push_back(predictions[i].label);
  }
  const ConfusionMatrix matrix = confusion(actual, predicted);
  const MetricsReport report = metrics(matrix);

  fs::create_directories(config.out_dir);
  write_text(cache_path(config, "report.json"), render_report(report, matrix, ReportFormat::json));
  write_text(cache_path(config, "report.txt"), render_report(report, matrix, ReportFormat::text));
  write_text(cache_path(config, "confusion.txt"), render_confusion(matrix));

  char buf[128];
  std::snprintf(buf, sizeof buf, "%s accuracy %.4f (%ld/%ld)\n", config.split.c_str(), report.accuracy,
                matrix.trace(), matrix.total());
  out << buf;
  return kExitOk;
}

int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream&) {
  VerifyOptions options;
  options.gradients = config.gradients;
  options.gradient.trials = config.gradient_trials;
  options.gradient.seed = config.seed;
  const VerifySummary summary = run_verify(options);
  print_checks(out, summary.checks);
  out << summary.checks.size() - summary.failures() << "/" << summary.checks.size() << " checks passed\n";
  return summary.passed() ? kExitOk : kExitFailure;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Six-way fake news classification on the LIAR dataset"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "key = value configuration file; flags take precedence");

  // Flag values are kept as strings and applied through RunConfig::set after
  // the config file, so both sources share one parser.
  std::map<std::string, std::string> flags;
  auto flag = [&](CLI::App* cmd, const std::string& name, const std::string& key, const std::string& help) {
    cmd->add_option(name, flags[key], help);
  };
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_file, "key = value configuration file; flags take precedence");
    flag(cmd, "--out", "out", "working directory for caches and outputs");
    flag(cmd, "--seed", "seed", "global seed");
  };

  CLI::App* prepare = app.add_subcommand("prepare", "parse, encode and cache the LIAR splits");
  common(prepare);
  flag(prepare, "--data-dir", "data_dir", "directory holding train.tsv, valid.tsv and test.tsv");
  flag(prepare, "--embeddings", "embeddings", "word2vec file (.bin binary, .txt text)");

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on the prepared cache");
  common(train_cmd);
  flag(train_cmd, "--model", "model", "bilstm, cnn or combined");
  flag(train_cmd, "--epochs", "epochs", "maximum number of epochs");
  flag(train_cmd, "--batch-size", "batch_size", "mini-batch size");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on a prepared split");
  common(evaluate);
  flag(evaluate, "--checkpoint", "checkpoint", "checkpoint file (default <out>/model.ckpt)");
  flag(evaluate, "--split", "split", "train, valid or test (default test)");

  CLI::App* verify = app.add_subcommand("verify", "reproduce the published tables and check gradients");
  common(verify);
  flag(verify, "--gradient-trials", "gradient_trials", "seeded trials per gradient case");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig config;
    if (!config_file.empty()) apply_config_file(config, config_file);
    for (const auto& [key, value] : flags) {
      if (!value.empty()) config.set(key, value);
    }
    config.finalize();
    if (prepare->parsed()) return cmd_prepare(config, out, err);
    if (train_cmd->parsed()) return cmd_train(config, out, err);
    if (evaluate->parsed()) return cmd_evaluate(config, out, err);
    return cmd_verify(config, out, err);
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace fakenews
