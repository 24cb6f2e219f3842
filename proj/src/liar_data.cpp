#include "fakenews/liar_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "fakenews/errors.hpp"
#include "fakenews/rng.hpp"

namespace fakenews {

int encode_label(std::string_view label) {
  for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
    if (kLabelNames[i] == label) return static_cast<int>(i);
  }
  throw IndexError("unknown label '" + std::string(label) + "'");
}

std::string_view decode_label(int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= kNumClasses) {
    throw IndexError("label index " + std::to_string(index) + " outside [0, 6)");
  }
  return kLabelNames[static_cast<std::size_t>(index)];
}

// ---------------------------------------------------------------------------
// TSV

namespace {

constexpr std::size_t kColumns = 14;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Counts are written as integers or as floats with a zero fraction ("70.0").
// Empty cells read as 0.
int parse_count(std::string_view cell, const std::string& source, std::size_t line_no,
                std::size_t column) {
  cell = trim(cell);
  if (cell.empty()) return 0;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || value < 0.0 ||
      value != std::floor(value) || value > 1e9) {
    throw ParseError(source, line_no,
                     "column " + std::to_string(column + 1) + ": invalid credit count '" +
                         std::string(cell) + "'");
  }
  return static_cast<int>(value);
}

}  // namespace

LiarRecord parse_tsv_line(std::string_view line, const std::string& source, std::size_t line_no) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  const auto cells = split_tabs(line);
  if (cells.size() != kColumns) {
    throw ParseError(source, line_no,
                     "expected 14 tab-separated columns, found " + std::to_string(cells.size()));
  }
  LiarRecord r;
  r.id = std::string(trim(cells[0]));
  r.label = std::string(trim(cells[1]));
  if (std::find(kLabelNames.begin(), kLabelNames.end(), r.label) == kLabelNames.end()) {
    throw ParseError(source, line_no, "unknown label '" + r.label + "'");
  }
  r.statement = std::string(trim(cells[2]));
  if (r.statement.empty()) throw ParseError(source, line_no, "empty statement");
  r.statement_type = std::string(trim(cells[3]));
  r.speaker = std::string(trim(cells[4]));
  r.speaker_job = std::string(trim(cells[5]));
  r.state = std::string(trim(cells[6]));
  r.party = std::string(trim(cells[7]));
  std::array<int, kNumCredit> file_counts{};
  for (std::size_t k = 0; k < kNumCredit; ++k) {
    file_counts[k] = parse_count(cells[8 + k], source, line_no, 8 + k);
  }
  for (std::size_t i = 0; i < kNumCredit; ++i) r.counts[i] = file_counts[kCreditFileColumn[i]];
  r.context = std::string(trim(cells[13]));
  return r;
}

std::vector<LiarRecord> parse_tsv(std::istream& in, const std::string& source) {
  std::vector<LiarRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    records.push_back(parse_tsv_line(line, source, line_no));
  }
  return records;
}

std::vector<LiarRecord> parse_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_tsv(in, path.string());
}

// ---------------------------------------------------------------------------
// Tokens

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view word = text.substr(i, j - i);
    while (!word.empty() && is_punct(word.front())) word.remove_prefix(1);
    while (!word.empty() && is_punct(word.back())) word.remove_suffix(1);
    if (!word.empty()) tokens.push_back(lower(word));
    i = j;
  }
  return tokens;
}

std::vector<std::string> subject_tokens(std::string_view subjects) {
  std::string spaced(subjects);
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  return tokenize(spaced);
}

std::vector<std::string> categorical_token(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return {};
  return {lower(cell)};
}

// ---------------------------------------------------------------------------
// Vocab

namespace {
constexpr const char* kPadToken = "<pad>";
constexpr const char* kUnknownToken = "<unk>";
}  // namespace

Vocab::Vocab() {
  push(kPadToken);
  push(kUnknownToken);
}

void Vocab::push(std::string token) {
  const int id = static_cast<int>(tokens_.size());
  if (!ids_.emplace(token, id).second) throw ContractError("duplicate vocabulary token: " + token);
  tokens_.push_back(std::move(token));
}

int Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnknownId : it->second;
}

bool Vocab::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

std::uint64_t Vocab::hash() const {
  std::uint64_t h = fnv1a("vocab-v1\n");
  for (const auto& t : tokens_) {
    h = fnv1a(t, h);
    h = fnv1a("\n", h);
  }
  return h;
}

void Vocab::save(std::ostream& out) const {
  out << "VOCAB v1 " << tokens_.size() << '\n';
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError("vocab", 1, "missing header");
  std::istringstream hs(header);
  std::string magic, version;
  std::size_t count = 0;
  if (!(hs >> magic >> version >> count) || magic != "VOCAB" || version != "v1" || count < 2) {
    throw ParseError("vocab", 1, "bad header '" + header + "'");
  }
  std::vector<std::string> ordered;
  std::string line;
  while (ordered.size() < count && std::getline(in, line)) ordered.push_back(line);
  if (ordered.size() != count) {
    throw ParseError("vocab", ordered.size() + 2, "expected " + std::to_string(count) + " tokens");
  }
  return from_tokens(std::move(ordered));
}

Vocab Vocab::from_tokens(std::vector<std::string> ordered) {
  if (ordered.size() < 2 || ordered[0] != kPadToken || ordered[1] != kUnknownToken) {
    throw ContractError("vocabulary must start with the padding and unknown tokens");
  }
  Vocab v;
  for (std::size_t i = 2; i < ordered.size(); ++i) v.push(std::move(ordered[i]));
  return v;
}

namespace {

template <typename Fn>
void for_each_token(const LiarRecord& r, Fn&& fn) {
  for (auto& t : tokenize(r.statement)) fn(t);
  for (auto& t : subject_tokens(r.statement_type)) fn(t);
  for (auto& t : tokenize(r.speaker_job)) fn(t);
  for (auto& t : tokenize(r.context)) fn(t);
  for (auto& t : categorical_token(r.speaker)) fn(t);
  for (auto& t : categorical_token(r.party)) fn(t);
  for (auto& t : categorical_token(r.state)) fn(t);
}

}  // namespace

Vocab build_vocab(std::span<const LiarRecord> records, std::size_t min_count) {
  if (records.empty()) throw ContractError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    for_each_token(r, [&](const std::string& t) { ++counts[t]; });
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : counts) {
    if (n >= min_count && token != kPadToken && token != kUnknownToken) ranked.emplace_back(token, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> ordered = {std::string(kPadToken), std::string(kUnknownToken)};
  ordered.reserve(ranked.size() + 2);
  for (auto& [token, n] : ranked) ordered.push_back(std::move(token));
  return Vocab::from_tokens(std::move(ordered));
}

std::vector<int> encode_pad(std::span<const std::string> tokens, const Vocab& vocab,
                            std::size_t max_len) {
  if (max_len == 0) throw ContractError("max_len must be at least 1");
  std::vector<int> ids(max_len, Vocab::kPadId);
  const std::size_t n = std::min(tokens.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) ids[i] = vocab.id(tokens[i]);
  return ids;
}

std::array<double, kNumCredit> credit_special_feature(const std::array<int, kNumCredit>& counts) {
  std::array<double, kNumCredit> feature{};
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumCredit; ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  if (counts[best] > 0) feature[best] = 1.0;
  return feature;
}

EncodedExample encode_record(const LiarRecord& record, const Vocab& vocab,
                             const EncodingLengths& lengths) {
  EncodedExample ex;
  ex.statement_ids = encode_pad(tokenize(record.statement), vocab, lengths.statement);
  ex.type_ids = encode_pad(subject_tokens(record.statement_type), vocab, lengths.type);
  ex.job_ids = encode_pad(tokenize(record.speaker_job), vocab, lengths.job);
  ex.context_ids = encode_pad(tokenize(record.context), vocab, lengths.context);
  ex.speaker_id = encode_pad(categorical_token(record.speaker), vocab, 1)[0];
  ex.party_id = encode_pad(categorical_token(record.party), vocab, 1)[0];
  ex.state_id = encode_pad(categorical_token(record.state), vocab, 1)[0];
  for (std::size_t i = 0; i < kNumCredit; ++i) ex.counts[i] = record.counts[i];
  ex.special_feature = credit_special_feature(record.counts);
  ex.label_index = encode_label(record.label);
  return ex;
}

std::vector<EncodedExample> encode_records(std::span<const LiarRecord> records, const Vocab& vocab,
                                           const EncodingLengths& lengths) {
  std::vector<EncodedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode_record(r, vocab, lengths));
  return out;
}

// ---------------------------------------------------------------------------
// Cache

namespace {

void write_ids(std::ostream& out, std::span<const int> ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ' ';
    out << ids[i];
  }
}

void write_reals(std::ostream& out, std::span<const double> xs) {
  char buf[32];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
    if (i) out << ' ';
    out << buf;
  }
}

template <typename T>
std::vector<T> read_list(std::string_view field, const std::string& source, std::size_t line_no) {
  std::vector<T> out;
  std::istringstream in{std::string(field)};
  T v;
  while (in >> v) out.push_back(v);
  if (!in.eof()) throw ParseError(source, line_no, "malformed number list");
  return out;
}

}  // namespace

void write_encoded(std::ostream& out, std::span<const EncodedExample> examples,
                   const EncodingLengths& lengths) {
  out << "LIAR-ENCODED v1 " << examples.size() << ' ' << lengths.statement << ' ' << lengths.type
      << ' ' << lengths.job << ' ' << lengths.context << '\n';
  for (const auto& ex : examples) {
    out << ex.label_index << '\t';
    write_ids(out, ex.statement_ids);
    out << '\t';
    write_ids(out, ex.type_ids);
    out << '\t';
    write_ids(out, ex.job_ids);
    out << '\t';
    write_ids(out, ex.context_ids);
    out << '\t' << ex.speaker_id << '\t' << ex.party_id << '\t' << ex.state_id << '\t';
    write_reals(out, ex.counts);
    out << '\t';
    write_reals(out, ex.special_feature);
    out << '\n';
  }
}

std::vector<EncodedExample> read_encoded(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source, 1, "missing header");
  std::istringstream hs(line);
  std::string magic, version;
  std::size_t count = 0;
  EncodingLengths lengths;
  if (!(hs >> magic >> version >> count >> lengths.statement >> lengths.type >> lengths.job >>
        lengths.context) ||
      magic != "LIAR-ENCODED" || version != "v1") {
    throw ParseError(source, 1, "bad header '" + line + "'");
  }
  std::vector<EncodedExample> out;
  out.reserve(count);
  std::size_t line_no = 1;
  while (out.size() < count && std::getline(in, line)) {
    ++line_no;
    const auto cells = split_tabs(line);
    if (cells.size() != 10) throw ParseError(source, line_no, "expected 10 fields");
    EncodedExample ex;
    auto single = [&](std::string_view f) {
      auto v = read_list<int>(f, source, line_no);
      if (v.size() != 1) throw ParseError(source, line_no, "expected a single id");
      return v[0];
    };
    auto sized_ids = [&](std::string_view f, std::size_t n, const char* slot) {
      auto v = read_list<int>(f, source, line_no);
      if (v.size() != n) {
        throw ParseError(source, line_no, std::string(slot) + ": expected " + std::to_string(n) + " ids");
      }
      return v;
    };
    auto five = [&](std::string_view f) {
      auto v = read_list<double>(f, source, line_no);
      if (v.size() != kNumCredit) throw ParseError(source, line_no, "expected 5 values");
      std::array<double, kNumCredit> a{};
      std::copy(v.begin(), v.end(), a.begin());
      return a;
    };
    ex.label_index = single(cells[0]);
    decode_label(ex.label_index);
    ex.statement_ids = sized_ids(cells[1], lengths.statement, "statement");
    ex.type_ids = sized_ids(cells[2], lengths.type, "type");
    ex.job_ids = sized_ids(cells[3], lengths.job, "job");
    ex.context_ids = sized_ids(cells[4], lengths.context, "context");
    ex.speaker_id = single(cells[5]);
    ex.party_id = single(cells[6]);
    ex.state_id = single(cells[7]);
    ex.counts = five(cells[8]);
    ex.special_feature = five(cells[9]);
    out.push_back(std::move(ex));
  }
  if (out.size() != count) {
    throw ParseError(source, line_no, "expected " + std::to_string(count) + " examples, found " +
                                          std::to_string(out.size()));
  }
  return out;
}

}  // namespace fakenews
