#include <doctest.h>

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_set>

#include "fakenews/embeddings.hpp"
#include "fakenews/errors.hpp"
#include "fakenews/liar_data.hpp"
#include "fakenews/rng.hpp"

using namespace fakenews;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fakenews-emb-" + std::to_string(Rng(std::random_device{}()).next()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void put_float(std::string& bytes, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

fs::path write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
  return path;
}

LoadOptions dim(std::size_t d) {
  LoadOptions o;
  o.expected_dim = d;
  return o;
}

}  // namespace

TEST_CASE("binary fixture is read bit-exactly") {
  TempDir tmp;
  std::string bytes = "2 3\nab ";
  for (float v : {1.0f, 2.0f, 3.0f}) put_float(bytes, v);
  bytes += "cd ";
  for (int i = 0; i < 3; ++i) put_float(bytes, 0.0f);
  const auto store = load_word2vec_binary(write_bytes(tmp.path / "f.bin", bytes), dim(3));
  CHECK(store.declared_size == 2);
  CHECK(store.dim == 3);
  REQUIRE(store.find("ab") != nullptr);
  CHECK(*store.find("ab") == std::vector<double>{1, 2, 3});
  CHECK(*store.find("cd") == std::vector<double>{0, 0, 0});
}

TEST_CASE("newline separators between entries are skipped") {
  TempDir tmp;
  std::string bytes = "2 1\nab ";
  put_float(bytes, 0.5f);
  bytes += "\ncd ";
  put_float(bytes, -0.5f);
  bytes += "\n";
  const auto store = load_word2vec_binary(write_bytes(tmp.path / "f.bin", bytes), dim(1));
  CHECK(*store.find("cd") == std::vector<double>{-0.5});
}

TEST_CASE("truncated files report an offset") {
  TempDir tmp;
  std::string bytes = "3 2\nab ";
  put_float(bytes, 1.0f);
  put_float(bytes, 2.0f);
  bytes += "cd ";
  put_float(bytes, 3.0f);
  put_float(bytes, 4.0f);
  CHECK_THROWS_AS(load_word2vec_binary(write_bytes(tmp.path / "short.bin", bytes), dim(2)), FormatError);
  bytes.resize(bytes.size() - 2);
  try {
    load_word2vec_binary(write_bytes(tmp.path / "cut.bin", bytes), dim(2));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() > 4);
  }
}

TEST_CASE("dimension mismatch is rejected") {
  TempDir tmp;
  std::string bytes = "1 2\nab ";
  put_float(bytes, 1.0f);
  put_float(bytes, 2.0f);
  CHECK_THROWS_AS(load_word2vec_binary(write_bytes(tmp.path / "f.bin", bytes)), DimensionError);
}

TEST_CASE("write then read round trip at float32 precision") {
  TempDir tmp;
  Rng rng(1);
  WordVectorStore store;
  store.dim = 7;
  for (int w = 0; w < 40; ++w) {
    std::vector<double> v(7);
    for (double& x : v) x = static_cast<double>(static_cast<float>(rng.uniform(-3, 3)));
    store.vectors["word" + std::to_string(w)] = v;
  }
  store.declared_size = store.vectors.size();
  write_word2vec_binary(tmp.path / "rt.bin", store);
  const auto back = load_word2vec_binary(tmp.path / "rt.bin", dim(7));
  CHECK(back.vectors == store.vectors);
}

TEST_CASE("text format, filtering and case folding") {
  TempDir tmp;
  write_bytes(tmp.path / "v.txt", "3 2\nObama 1 2\nobama 5 6\ntax 0.5 -0.5\n");
  const std::unordered_set<std::string> keep = {"obama"};
  LoadOptions o = dim(2);
  o.keep = &keep;
  o.fold_case = true;
  const auto store = load_word2vec_text(tmp.path / "v.txt", o);
  CHECK(store.entries_read == 3);
  CHECK(store.vectors.size() == 1);
  CHECK(*store.find("obama") == std::vector<double>{1, 2});
}

TEST_CASE("embedding matrix construction") {
  const Vocab vocab = Vocab::from_tokens({"<pad>", "<unk>", "tax", "obama", "zzz"});
  WordVectorStore store;
  store.dim = 3;
  store.vectors["tax"] = {1, 2, 3};
  store.vectors["obama"] = {4, 5, 6};
  const auto m = build_embedding_matrix(vocab, &store, 3, 42);
  for (std::size_t c = 0; c < 3; ++c) CHECK(m.matrix.at(0, c) == 0.0);
  CHECK(m.matrix.at(2, 0) == 1.0);
  CHECK(m.matrix.at(3, 2) == 6.0);
  CHECK(m.found == 2);
  CHECK(m.coverage == doctest::Approx(2.0 / 4.0));
  const auto zzz = hashed_vector("zzz", 3, 42);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(m.matrix.at(4, c) == zzz[c]);
    CHECK(std::abs(zzz[c]) <= 0.25);
  }
  CHECK_THROWS_AS(build_embedding_matrix(vocab, &store, 300, 42), DimensionError);
}

TEST_CASE("fallback matrix is deterministic and seed-dependent") {
  const Vocab vocab = Vocab::from_tokens({"<pad>", "<unk>", "a", "b"});
  const auto a = build_embedding_matrix(vocab, nullptr, 300, 7);
  const auto b = build_embedding_matrix(vocab, nullptr, 300, 7);
  const auto c = build_embedding_matrix(vocab, nullptr, 300, 8);
  CHECK(a.matrix == b.matrix);
  CHECK_FALSE(a.matrix == c.matrix);
  CHECK(a.found == 0);
  CHECK(hashed_vector("a", 5, 7) == hashed_vector("a", 5, 7));
  CHECK(hashed_vector("a", 5, 7) != hashed_vector("b", 5, 7));
}

TEST_CASE("matrix cache round trip") {
  TempDir tmp;
  const Vocab vocab = Vocab::from_tokens({"<pad>", "<unk>", "a", "b"});
  const auto m = build_embedding_matrix(vocab, nullptr, 9, 3);
  save_embedding_matrix(tmp.path / "m.bin", m.matrix);
  CHECK(load_embedding_matrix(tmp.path / "m.bin") == m.matrix);
  fs::resize_file(tmp.path / "m.bin", fs::file_size(tmp.path / "m.bin") - 3);
  CHECK_THROWS_AS(load_embedding_matrix(tmp.path / "m.bin"), FormatError);
}
