#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "fakenews/models.hpp"

namespace fakenews {

/// Checkpoint container, version 1:
///
///   FAKENEWS-CHECKPOINT v1\n
///   arch <bilstm|cnn|combined>\n
///   vocab_hash <16 hex digits>\n
///   hyper <one-line JSON>\n
///   params <count>\n
///   then per parameter: "<name> <rank> <d0> ... <dr-1>\n" followed by the
///   row-major values as little-endian float64, then "\n".
void save_checkpoint(std::ostream& out, const ModelGraph& model, std::uint64_t vocab_hash);
void save_checkpoint(const std::filesystem::path& path, const ModelGraph& model, std::uint64_t vocab_hash);

struct LoadedCheckpoint {
  ModelGraph model;
  std::uint64_t vocab_hash;
};

/// Throws CheckpointError on a malformed file or when `expected_vocab_hash`
/// is given and differs from the stored hash.
LoadedCheckpoint load_checkpoint(std::istream& in, std::optional<std::uint64_t> expected_vocab_hash = {});
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 std::optional<std::uint64_t> expected_vocab_hash = {});

std::string hash_hex(std::uint64_t hash);

}  // namespace fakenews
