#include "fakenews/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "fakenews/errors.hpp"

namespace fakenews {

namespace {

constexpr const char* kMagic = "FAKENEWS-CHECKPOINT v1";

void write_values(std::ostream& out, std::span<const double> values) {
  std::vector<char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void read_values(std::istream& in, std::span<double> values, const std::string& name) {
  std::vector<unsigned char> bytes(values.size() * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    throw CheckpointError("checkpoint truncated in parameter " + name);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
}

std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0) {
    throw CheckpointError("checkpoint: expected '" + key + "' line");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void save_checkpoint(std::ostream& out, const ModelGraph& model, std::uint64_t vocab_hash) {
  const ParameterStore& params = model.parameters();
  out << kMagic << '\n';
  out << "arch " << architecture_name(model.architecture()) << '\n';
  out << "vocab_hash " << hash_hex(vocab_hash) << '\n';
  out << "hyper " << model.hyper().to_json() << '\n';
  out << "params " << params.size() << '\n';
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params.tensor(i);
    out << params.name(i) << ' ' << t.rank();
    for (auto d : t.shape()) out << ' ' << d;
    out << '\n';
    write_values(out, t.data());
    out << '\n';
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelGraph& model, std::uint64_t vocab_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  save_checkpoint(out, model, vocab_hash);
}

LoadedCheckpoint load_checkpoint(std::istream& in, std::optional<std::uint64_t> expected_vocab_hash) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw CheckpointError("not a checkpoint (bad magic)");
  const Architecture arch = parse_architecture(expect_line(in, "arch"));
  const std::string hash_text = expect_line(in, "vocab_hash");
  const std::uint64_t vocab_hash = std::stoull(hash_text, nullptr, 16);
  if (expected_vocab_hash && *expected_vocab_hash != vocab_hash) {
    throw CheckpointError("vocabulary hash mismatch: checkpoint trained against " + hash_text +
                          ", cache has " + hash_hex(*expected_vocab_hash) +
                          " (stale cache or checkpoint)");
  }
  const Hyperparameters hyper = Hyperparameters::from_json(expect_line(in, "hyper"));
  const std::size_t count = std::stoul(expect_line(in, "params"));

  // Shapes come from the hyperparameters; values are overwritten below.
  ModelGraph model(arch, hyper, Tensor({hyper.vocab_size, hyper.embedding_dim}));
  ParameterStore& params = model.parameters();
  if (count != params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(count) + " parameters, architecture needs " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw CheckpointError("checkpoint truncated before parameter " + std::to_string(i));
    std::istringstream ls(line);
    std::string name;
    std::size_t rank = 0;
    ls >> name >> rank;
    Shape shape(rank);
    for (auto& d : shape) ls >> d;
    if (!ls || name != params.name(i) || shape != params.tensor(i).shape()) {
      throw CheckpointError("checkpoint parameter " + std::to_string(i) + " '" + line +
                            "' does not match expected " + params.name(i) + " " +
                            shape_string(params.tensor(i).shape()));
    }
    read_values(in, params.tensor(i).data(), name);
    if (in.get() != '\n') throw CheckpointError("checkpoint: missing record separator after " + name);
  }
  return {std::move(model), vocab_hash};
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 std::optional<std::uint64_t> expected_vocab_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return load_checkpoint(in, expected_vocab_hash);
}

}  // namespace fakenews
