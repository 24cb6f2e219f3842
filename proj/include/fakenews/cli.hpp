#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "fakenews/models.hpp"
#include "fakenews/optim.hpp"

namespace fakenews {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // failed check or training abort
inline constexpr int kExitUsage = 2;    // bad flags, missing or malformed input

struct RunConfig {
  std::filesystem::path data_dir = "data";
  std::optional<std::filesystem::path> embeddings;
  Architecture model = Architecture::combined;
  TrainConfig train;
  Hyperparameters hyper;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 42;
  std::size_t min_count = 1;
  /// Embedding width when no pretrained vectors are given.
  std::size_t embedding_dim = 300;
  std::optional<std::filesystem::path> checkpoint;  // evaluate: defaults to <out>/model.ckpt
  std::string split = "test";                       // evaluate: train, valid or test
  std::size_t threads = 0;                          // 0: hardware concurrency
  bool gradients = true;                            // verify: run the gradient suite
  std::size_t gradient_trials = 100;

  /// Sets one field from its config-file key. Throws ContractError for an
  /// unknown key or an unparsable value.
  void set(const std::string& key, const std::string& value);
  /// Applies seed to the trainer and the initializer.
  void finalize();
};

/// Flat "key = value" lines; '#' starts a comment. Throws ParseError.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

int cmd_prepare(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv, dispatches to a command and maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fakenews
