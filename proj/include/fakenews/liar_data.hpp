#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fakenews {

inline constexpr std::size_t kNumClasses = 6;
inline constexpr std::size_t kNumCredit = 5;

/// Class order is ordinal in truthfulness; the index is the encoded label.
inline constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "pants-fire", "false", "barely-true", "half-true", "mostly-true", "true"};

int encode_label(std::string_view label);
std::string_view decode_label(int index);

/// Split sizes of the distributed LIAR files.
inline constexpr std::size_t kLiarTrainSize = 10269;
inline constexpr std::size_t kLiarValidSize = 1284;
inline constexpr std::size_t kLiarTestSize = 1266;

/// The TSV stores credit counts as (barely-true, false, half-true,
/// mostly-true, pants-fire). Records hold them as (pants-fire, false,
/// barely-true, half-true, mostly-true): canonical[i] = file[kCreditFileColumn[i]].
inline constexpr std::array<std::size_t, kNumCredit> kCreditFileColumn = {4, 1, 0, 2, 3};

struct LiarRecord {
  std::string id;
  std::string label;
  std::string statement;
  std::string statement_type;  // comma-separated subjects
  std::string speaker;
  std::string speaker_job;
  std::string state;
  std::string party;
  std::array<int, kNumCredit> counts{};  // canonical order
  std::string context;
};

LiarRecord parse_tsv_line(std::string_view line, const std::string& source, std::size_t line_no);
std::vector<LiarRecord> parse_tsv(std::istream& in, const std::string& source);
std::vector<LiarRecord> parse_tsv(const std::filesystem::path& path);

/// Lowercase, split on whitespace, strip leading/trailing punctuation, drop empties.
std::vector<std::string> tokenize(std::string_view text);

/// Subjects are comma-separated tags; each tag is tokenized separately.
std::vector<std::string> subject_tokens(std::string_view subjects);
/// Speaker, party and state are atomic: the whole trimmed, lowercased cell is
/// one token. An empty cell yields no token.
std::vector<std::string> categorical_token(std::string_view cell);

class Vocab {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kUnknownId = 1;

  Vocab();

  /// Id of a token; unknown tokens map to kUnknownId.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// FNV-1a over the serialized token list; identifies the id assignment.
  std::uint64_t hash() const;

  void save(std::ostream& out) const;
  static Vocab load(std::istream& in);
  static Vocab from_tokens(std::vector<std::string> ordered);

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Ids ordered by (count desc, token asc) over every text attribute of the
/// records. Tokens seen fewer than min_count times stay out (map to unknown).
Vocab build_vocab(std::span<const LiarRecord> records, std::size_t min_count = 1);

/// First min(len, max_len) ids, then zeros.
std::vector<int> encode_pad(std::span<const std::string> tokens, const Vocab& vocab,
                            std::size_t max_len);

/// One-hot at the argmax of the counts (lowest index on ties); all-zero
/// counts give the all-zero vector.
std::array<double, kNumCredit> credit_special_feature(const std::array<int, kNumCredit>& counts);

struct EncodingLengths {
  std::size_t statement = 50;
  std::size_t type = 5;
  std::size_t job = 20;
  std::size_t context = 25;
};

struct EncodedExample {
  std::vector<int> statement_ids;
  std::vector<int> type_ids;
  std::vector<int> job_ids;
  std::vector<int> context_ids;
  int speaker_id = Vocab::kPadId;
  int party_id = Vocab::kPadId;
  int state_id = Vocab::kPadId;
  std::array<double, kNumCredit> counts{};
  std::array<double, kNumCredit> special_feature{};
  int label_index = 0;

  friend bool operator==(const EncodedExample&, const EncodedExample&) = default;
};

EncodedExample encode_record(const LiarRecord& record, const Vocab& vocab,
                             const EncodingLengths& lengths = {});
std::vector<EncodedExample> encode_records(std::span<const LiarRecord> records, const Vocab& vocab,
                                           const EncodingLengths& lengths = {});

/// Line-delimited cache. Header line `LIAR-ENCODED v1 <count> <statement>
/// <type> <job> <context>`, then one example per line, tab-separated fields
/// in this order: label, statement ids, type ids, job ids, context ids,
/// speaker, party, state, counts, special feature. Lists are space-separated.
void write_encoded(std::ostream& out, std::span<const EncodedExample> examples,
                   const EncodingLengths& lengths);
std::vector<EncodedExample> read_encoded(std::istream& in, const std::string& source);

}  // namespace fakenews
