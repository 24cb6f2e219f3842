#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "fakenews/errors.hpp"
#include "fakenews/liar_data.hpp"
#include "fakenews/rng.hpp"

using namespace fakenews;

namespace {

const std::filesystem::path kFixture = FIXTURE_DIR;

const char* kObamaLine =
    "2635.json\ttrue\tMcCain opposed a requirement that the government buy American-made motorcycles. And he "
    "said all buy-American provisions were quote 'disgraceful.'\tfederal-budget\tbarack-obama\tPresident\t"
    "Illinois\tdemocrat\t160\t71\t163\t9\t70\ta radio ad";

LiarRecord make_record(std::string statement, std::string label = "true") {
  LiarRecord r;
  r.id = "1.json";
  r.label = std::move(label);
  r.statement = std::move(statement);
  return r;
}

void check_padding(const std::vector<int>& ids, std::size_t length) {
  CHECK(ids.size() == length);
  bool seen_pad = false;
  for (int id : ids) {
    if (id == Vocab::kPadId) seen_pad = true;
    else CHECK_FALSE(seen_pad);  // no real token after padding
  }
}

}  // namespace

TEST_CASE("labels") {
  CHECK(encode_label("pants-fire") == 0);
  CHECK(encode_label("true") == 5);
  for (int i = 0; i < 6; ++i) CHECK(encode_label(decode_label(i)) == i);
  CHECK_THROWS_AS(encode_label("pants-on-fire"), IndexError);
  CHECK_THROWS_AS(decode_label(6), IndexError);
}

TEST_CASE("the barack-obama row") {
  const LiarRecord r = parse_tsv_line(kObamaLine, "row", 1);
  CHECK(r.label == "true");
  CHECK(r.party == "democrat");
  CHECK(r.speaker == "barack-obama");
  CHECK(r.context == "a radio ad");
  CHECK(r.counts == std::array<int, 5>{70, 71, 160, 163, 9});
  CHECK(credit_special_feature(r.counts) == std::array<double, 5>{0, 0, 0, 1, 0});
}

TEST_CASE("column count errors name the line") {
  std::istringstream in(std::string(kObamaLine) + "\n" + "x.json\ttrue\tshort line\t\t\t\t\t\t1\t2\t3\t4\t5\n");
  try {
    parse_tsv(in, "test.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    const std::string what = e.what();
    CHECK(what.find("test.tsv") != std::string::npos);
    CHECK(what.find("13") != std::string::npos);
  }
}

TEST_CASE("unknown labels and bad counts are rejected") {
  std::string line = kObamaLine;
  line.replace(line.find("\ttrue\t"), 6, "\tmaybe\t");
  CHECK_THROWS_AS(parse_tsv_line(line, "row", 4), ParseError);
  std::string counts = kObamaLine;
  counts.replace(counts.find("\t160\t"), 5, "\tmany\t");
  CHECK_THROWS_AS(parse_tsv_line(counts, "row", 4), ParseError);
}

TEST_CASE("empty cells") {
  const LiarRecord r =
      parse_tsv_line("9.json\tfalse\tSome claim.\t\tchain-email\t\t\tnone\t\t\t\t\t\t", "row", 1);
  CHECK(r.speaker_job.empty());
  CHECK(r.state.empty());
  CHECK(r.context.empty());
  CHECK(r.counts == std::array<int, 5>{0, 0, 0, 0, 0});
  const Vocab v = build_vocab(std::vector<LiarRecord>{r});
  const EncodedExample ex = encode_record(r, v);
  CHECK(std::all_of(ex.job_ids.begin(), ex.job_ids.end(), [](int id) { return id == 0; }));
  CHECK(ex.state_id == Vocab::kPadId);
}

TEST_CASE("tokenize") {
  CHECK(tokenize("McCain opposed a requirement") == std::vector<std::string>{"mccain", "opposed", "a", "requirement"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("U.S.") == std::vector<std::string>{"u.s"});
  CHECK(tokenize("  'disgraceful.'  (quote) ") == std::vector<std::string>{"disgraceful", "quote"});
  CHECK(subject_tokens("bankruptcy,economy,population") ==
        std::vector<std::string>{"bankruptcy", "economy", "population"});
  CHECK(categorical_token(" Washington, D.C. ") == std::vector<std::string>{"washington, d.c."});
}

TEST_CASE("encode_pad") {
  std::vector<std::string> tokens;
  for (int i = 0; i < 66; ++i) tokens.push_back("w" + std::to_string(i));
  LiarRecord r = make_record("");
  std::vector<LiarRecord> rs;
  for (const auto& t : tokens) rs.push_back(make_record(t));
  const Vocab v = build_vocab(rs);

  const auto seventeen = encode_pad(std::span(tokens).first(17), v, 50);
  CHECK(seventeen.size() == 50);
  for (std::size_t i = 0; i < 17; ++i) CHECK(seventeen[i] == v.id(tokens[i]));
  for (std::size_t i = 17; i < 50; ++i) CHECK(seventeen[i] == 0);

  const auto long_one = encode_pad(tokens, v, 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(long_one[i] == v.id(tokens[i]));

  CHECK(encode_pad({}, v, 5) == std::vector<int>(5, 0));
  const std::vector<std::string> unseen = {"never-seen"};
  CHECK(encode_pad(unseen, v, 2) == std::vector<int>{Vocab::kUnknownId, 0});
}

TEST_CASE("special feature") {
  CHECK(credit_special_feature({0, 0, 0, 0, 0}) == std::array<double, 5>{});
  CHECK(credit_special_feature({3, 3, 1, 0, 0}) == std::array<double, 5>{1, 0, 0, 0, 0});
}

TEST_CASE("special feature matches a brute-force scan") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<int, 5> counts{};
    for (int& c : counts) c = static_cast<int>(rng.below(4));
    const auto f = credit_special_feature(counts);
    const double l1 = std::accumulate(f.begin(), f.end(), 0.0);
    int best = -1;
    for (std::size_t i = 0; i < 5; ++i) {
      if (counts[i] > 0 && (best < 0 || counts[i] > counts[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
    }
    if (best < 0) {
      CHECK(l1 == 0.0);
    } else {
      CHECK(l1 == 1.0);
      CHECK(f[static_cast<std::size_t>(best)] == 1.0);
    }
  }
}

TEST_CASE("vocab construction") {
  const std::vector<LiarRecord> rs = {make_record("a a b")};
  const Vocab v = build_vocab(rs);
  CHECK(v.token(0) == "<pad>");
  CHECK(v.token(1) == "<unk>");
  CHECK(v.id("a") < v.id("b"));
  CHECK(v.id("a") == 2);

  const Vocab pruned = build_vocab(rs, 2);
  CHECK(pruned.contains("a"));
  CHECK(pruned.id("b") == Vocab::kUnknownId);

  // Count ties fall back to token order.
  const Vocab ties = build_vocab(std::vector<LiarRecord>{make_record("zeta alpha mid")});
  CHECK(ties.id("alpha") == 2);
  CHECK(ties.id("mid") == 3);
  CHECK(ties.id("zeta") == 4);
}

TEST_CASE("vocab is reproducible and round-trips") {
  const auto records = parse_tsv(kFixture / "train.tsv");
  const Vocab a = build_vocab(records), b = build_vocab(records);
  std::ostringstream sa, sb;
  a.save(sa);
  b.save(sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.hash() == b.hash());
  std::istringstream in(sa.str());
  const Vocab loaded = Vocab::load(in);
  CHECK(loaded.tokens() == a.tokens());
  CHECK(loaded.hash() == a.hash());
  // Categorical attributes share the vocabulary as single tokens.
  CHECK(a.contains("barack-obama"));
  CHECK(a.contains("washington, d.c."));
}

TEST_CASE("fixture encoding respects every declared length") {
  const auto records = parse_tsv(kFixture / "train.tsv");
  REQUIRE(records.size() == 64);
  const Vocab v = build_vocab(records);
  for (const auto& ex : encode_records(records, v)) {
    check_padding(ex.statement_ids, 50);
    check_padding(ex.type_ids, 5);
    check_padding(ex.job_ids, 20);
    check_padding(ex.context_ids, 25);
    const double l1 = std::accumulate(ex.special_feature.begin(), ex.special_feature.end(), 0.0);
    CHECK((l1 == 0.0 || l1 == 1.0));
  }
}

TEST_CASE("encoded cache round-trips exactly") {
  const auto records = parse_tsv(kFixture / "valid.tsv");
  const Vocab v = build_vocab(records);
  const auto encoded = encode_records(records, v);
  std::ostringstream out;
  write_encoded(out, encoded, {});
  std::istringstream in(out.str());
  CHECK(read_encoded(in, "cache") == encoded);

  std::istringstream broken("LIAR-ENCODED v1 2 50 5 20 25\n");
  CHECK_THROWS_AS(read_encoded(broken, "cache"), ParseError);
}

TEST_CASE("distributed split sizes" * doctest::description("runs when LIAR_DIR points at the dataset")) {
  const char* dir = std::getenv("LIAR_DIR");
  if (dir == nullptr) {
    MESSAGE("LIAR_DIR not set; split sizes not checked");
    return;
  }
  const std::filesystem::path root = dir;
  CHECK(parse_tsv(root / "train.tsv").size() == kLiarTrainSize);
  CHECK(parse_tsv(root / "valid.tsv").size() == kLiarValidSize);
  CHECK(parse_tsv(root / "test.tsv").size() == kLiarTestSize);
}
