#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fakenews/liar_data.hpp"
#include "fakenews/tensor.hpp"

namespace fakenews {

inline constexpr std::size_t kEmbeddingDim = 300;

struct WordVectorStore {
  std::size_t declared_size = 0;
  std::size_t dim = 0;
  /// Entries present in the file (all of them, kept or not).
  std::size_t entries_read = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;

  const std::vector<double>* find(const std::string& word) const;
};

struct LoadOptions {
  std::size_t expected_dim = kEmbeddingDim;
  /// When set, only words in this set are kept (after case folding, if on).
  const std::unordered_set<std::string>* keep = nullptr;
  /// Store words lowercased; the first occurrence of each folded form wins.
  bool fold_case = false;
};

/// word2vec binary: ASCII header "<count> <dim>\n", then per entry the word
/// bytes up to a space followed by dim little-endian float32 values, with an
/// optional newline before the next word.
WordVectorStore load_word2vec_binary(const std::filesystem::path& path, const LoadOptions& options = {});
/// Text variant: header line, then "word v1 ... vdim" per line.
WordVectorStore load_word2vec_text(const std::filesystem::path& path, const LoadOptions& options = {});

/// Writes a store in the binary format, words in sorted order, values
/// narrowed to float32.
void write_word2vec_binary(const std::filesystem::path& path, const WordVectorStore& store);

struct EmbeddingMatrix {
  Tensor matrix;  // [vocab x dim]
  std::size_t found = 0;
  double coverage = 0.0;  // found / (vocab - 1), padding excluded
};

/// Deterministic vector for a token missing from the store: uniform +/-0.25
/// from a generator seeded by the token hash and the global seed.
std::vector<double> hashed_vector(const std::string& token, std::size_t dim, std::uint64_t seed);

/// Row 0 zero; known words copy their vector; everything else (or every
/// non-padding row when store is null) gets hashed_vector.
EmbeddingMatrix build_embedding_matrix(const Vocab& vocab, const WordVectorStore* store,
                                       std::size_t dim, std::uint64_t seed);

/// Matrix cache: "EMBEDDING-MATRIX v1 <rows> <cols>\n" then row-major
/// little-endian float64.
void save_embedding_matrix(const std::filesystem::path& path, const Tensor& matrix);
Tensor load_embedding_matrix(const std::filesystem::path& path);

}  // namespace fakenews
