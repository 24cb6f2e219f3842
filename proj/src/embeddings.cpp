#include "fakenews/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <limits>
#include <fstream>
#include <sstream>

#include "fakenews/errors.hpp"
#include "fakenews/rng.hpp"

namespace fakenews {

static_assert(std::numeric_limits<float>::is_iec559, "IEEE-754 float required");

const std::vector<double>* WordVectorStore::find(const std::string& word) const {
  auto it = vectors.find(word);
  return it == vectors.end() ? nullptr : &it->second;
}

namespace {

std::string fold(std::string word) {
  for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return word;
}

void keep_entry(WordVectorStore& store, const LoadOptions& options, std::string word,
                std::vector<double> values) {
  if (options.fold_case) word = fold(std::move(word));
  if (options.keep && !options.keep->count(word)) return;
  store.vectors.try_emplace(std::move(word), std::move(values));
}

float read_le_float(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
                       static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
  return std::bit_cast<float>(bits);
}

void check_dim(std::size_t dim, const LoadOptions& options, const std::string& path) {
  if (options.expected_dim != 0 && dim != options.expected_dim) {
    throw DimensionError(path + ": vectors have dimension " + std::to_string(dim) + ", expected " +
                         std::to_string(options.expected_dim));
  }
}

}  // namespace

WordVectorStore load_word2vec_binary(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::size_t offset = 0;
  auto get = [&]() -> int {
    const int c = in.get();
    if (c != EOF) ++offset;
    return c;
  };

  std::string header;
  for (int c = get(); c != '\n'; c = get()) {
    if (c == EOF) throw FormatError(path.string() + ": truncated header", offset);
    header.push_back(static_cast<char>(c));
  }
  WordVectorStore store;
  {
    std::istringstream hs(header);
    if (!(hs >> store.declared_size >> store.dim) || store.dim == 0) {
      throw FormatError(path.string() + ": malformed header '" + header + "'", 0);
    }
  }
  check_dim(store.dim, options, path.string());

  std::vector<unsigned char> raw(store.dim * 4);
  for (std::size_t n = 0; n < store.declared_size; ++n) {
    std::string word;
    int c = get();
    while (c == '\n') c = get();
    for (; c != ' '; c = get()) {
      if (c == EOF) {
        throw FormatError(path.string() + ": truncated at entry " + std::to_string(n) + " of " +
                              std::to_string(store.declared_size),
                          offset);
      }
      word.push_back(static_cast<char>(c));
    }
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    offset += static_cast<std::size_t>(in.gcount());
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw FormatError(path.string() + ": truncated vector for '" + word + "'", offset);
    }
    std::vector<double> values(store.dim);
    for (std::size_t j = 0; j < store.dim; ++j) values[j] = read_le_float(&raw[4 * j]);
    ++store.entries_read;
    keep_entry(store, options, std::move(word), std::move(values));
  }
  return store;
}

WordVectorStore load_word2vec_text(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file", 0);
  WordVectorStore store;
  {
    std::istringstream hs(line);
    if (!(hs >> store.declared_size >> store.dim) || store.dim == 0) {
      throw FormatError(path.string() + ": malformed header '" + line + "'", 0);
    }
  }
  check_dim(store.dim, options, path.string());
  std::size_t offset = line.size() + 1;
  while (store.entries_read < store.declared_size && std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> values(store.dim);
    for (auto& v : values) {
      if (!(ls >> v)) throw FormatError(path.string() + ": short vector for '" + word + "'", offset);
    }
    double extra;
    if (ls >> extra) {
      throw DimensionError(path.string() + ": vector for '" + word + "' longer than " +
                           std::to_string(store.dim));
    }
    offset += line.size() + 1;
    ++store.entries_read;
    keep_entry(store, options, std::move(word), std::move(values));
  }
  if (store.entries_read != store.declared_size) {
    throw FormatError(path.string() + ": declared " + std::to_string(store.declared_size) +
                          " entries, found " + std::to_string(store.entries_read),
                      offset);
  }
  return store;
}

void write_word2vec_binary(const std::filesystem::path& path, const WordVectorStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<std::string> words;
  for (const auto& [w, v] : store.vectors) words.push_back(w);
  std::sort(words.begin(), words.end());
  out << words.size() << ' ' << store.dim << '\n';
  for (const auto& w : words) {
    const auto& values = store.vectors.at(w);
    if (values.size() != store.dim) throw DimensionError("vector for '" + w + "' has wrong size");
    out << w << ' ';
    for (double v : values) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                             static_cast<char>((bits >> 16) & 0xff),
                             static_cast<char>((bits >> 24) & 0xff)};
      out.write(bytes, 4);
    }
    out << '\n';
  }
}

std::vector<double> hashed_vector(const std::string& token, std::size_t dim, std::uint64_t seed) {
  Rng rng(fnv1a(token) ^ (seed * 0x9e3779b97f4a7c15ULL));
  std::vector<double> v(dim);
  for (auto& x : v) x = rng.uniform(-0.25, 0.25);
  return v;
}

EmbeddingMatrix build_embedding_matrix(const Vocab& vocab, const WordVectorStore* store,
                                       std::size_t dim, std::uint64_t seed) {
  if (store && store->dim != dim) {
    throw DimensionError("word vectors have dimension " + std::to_string(store->dim) +
                         ", embedding expects " + std::to_string(dim));
  }
  EmbeddingMatrix result{Tensor({vocab.size(), dim})};
  auto data = result.matrix.data();
  for (std::size_t id = 1; id < vocab.size(); ++id) {
    const std::string& token = vocab.token(static_cast<int>(id));
    const std::vector<double>* known = store ? store->find(token) : nullptr;
    if (known) ++result.found;
    const std::vector<double> row = known ? *known : hashed_vector(token, dim, seed);
    std::copy(row.begin(), row.end(), data.begin() + static_cast<std::ptrdiff_t>(id * dim));
  }
  result.coverage = vocab.size() > 1
                        ? static_cast<double>(result.found) / static_cast<double>(vocab.size() - 1)
                        : 0.0;
  return result;
}

void save_embedding_matrix(const std::filesystem::path& path, const Tensor& matrix) {
  if (matrix.rank() != 2) throw DimensionError("embedding matrix must be rank 2");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "EMBEDDING-MATRIX v1 " << matrix.dim(0) << ' ' << matrix.dim(1) << '\n';
  std::vector<char> bytes(matrix.size() * 8);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(matrix[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

Tensor load_embedding_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string magic, version;
  std::size_t rows = 0, cols = 0;
  if (!(header >> magic >> version >> rows >> cols) || magic != "EMBEDDING-MATRIX" || version != "v1" ||
      rows == 0 || cols == 0) {
    throw FormatError("bad embedding matrix header in " + path.string(), 0);
  }
  const auto data_start = static_cast<std::size_t>(in.tellg());
  Tensor m({rows, cols});
  std::vector<unsigned char> bytes(m.size() * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw FormatError("embedding matrix truncated in " + path.string(),
                      data_start + static_cast<std::size_t>(in.gcount()));
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    m[i] = std::bit_cast<double>(bits);
  }
  return m;
}

}  // namespace fakenews
