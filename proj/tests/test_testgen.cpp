#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "issforge/image.hpp"
#include "issforge/ingest.hpp"
#include "issforge/testgen.hpp"

using namespace issforge;

namespace {

const TestCorpus& small_corpus() {
  static const TestCorpus c = build_test_corpus(testutil::uarm().flats, 512);
  return c;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("issforge_testgen_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::vector<uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("field domains respect single-field constraints") {
  const FlatInstruction& f = testutil::flat("LDRBT");
  std::map<std::string, FieldDomain> by_name;
  for (const auto& d : field_domains(f)) by_name[d.field] = d;
  CHECK(by_name.at("Rn").excluded == std::vector<uint32_t>{15});
  CHECK(by_name.at("Rn").size() == 15);
  CHECK(by_name.at("cond").excluded == std::vector<uint32_t>{15});
  CHECK(by_name.at("U").excluded.empty());
  const auto b = by_name.at("Rn").boundary();
  CHECK(std::find(b.begin(), b.end(), 0u) != b.end());
  CHECK(std::find(b.begin(), b.end(), 14u) != b.end());
  CHECK(std::find(b.begin(), b.end(), 15u) == b.end());
}

TEST_CASE("generated words satisfy every constraint") {
  for (const FlatInstruction* f : testutil::generics()) {
    const auto words = enumerate_valid(*f, 512);
    CAPTURE(f->name);
    REQUIRE(!words.empty());
    for (const auto& w : words) {
      REQUIRE(constraints_hold(*f, w.word));
      REQUIRE((w.word & f->encoding.mask()) == f->encoding.value());
      REQUIRE(f->encoding.encode(w.fields) == w.word);
      if (f->encoding.has_param("Rn")) {
        const uint32_t rn = f->encoding.extract("Rn", w.word);
        bool rn_excluded = false;
        for (const auto& c : f->constraints)
          rn_excluded |= c.kind == ValidityConstraint::Kind::NotEqualValue && c.param_a == "Rn";
        if (rn_excluded) CHECK(rn <= 14);
      }
    }
  }
  for (const auto& w : enumerate_valid(testutil::flat("LDRBT"), 4096))
    CHECK(testutil::flat("LDRBT").encoding.extract("Rd", w.word) !=
          testutil::flat("LDRBT").encoding.extract("Rn", w.word));
}

TEST_CASE("small spaces are enumerated exhaustively") {
  FlatInstruction f = testutil::flat("HLT");
  f.encoding = parse_encoding_row("31..1 1110000100100000000000000111000 | 0 X");
  f.constraints.clear();
  const auto words = enumerate_valid(f);
  REQUIRE(words.size() == 2);
  CHECK(std::set<uint32_t>{words[0].word, words[1].word} == std::set<uint32_t>{0xE1200070, 0xE1200071});

  // Rd and Rn of imm_off, with cond fixed: 16 * 16 * 2 * 2 * 4096 words is
  // over budget, so boundaries plus samples, all distinct.
  const auto big = enumerate_valid(testutil::flat("LDR_imm_off"), 300);
  CHECK(big.size() <= 300);
  std::set<uint32_t> distinct;
  for (const auto& w : big) distinct.insert(w.word);
  CHECK(distinct.size() == big.size());
}

TEST_CASE("unsatisfiable constraints are reported") {
  FlatInstruction f = testutil::flat("HLT");
  f.encoding = parse_encoding_row("31..1 1110000100100000000000000111000 | 0 X");
  ValidityConstraint c;
  c.kind = ValidityConstraint::Kind::NotIn;
  c.param_a = "X";
  c.values = {0, 1};
  f.constraints = {c};
  CHECK(testutil::error_text([&] { enumerate_valid(f); }) != "");
}

TEST_CASE("corpus: one expected line per word") {
  const TestCorpus& tc = small_corpus();
  CHECK(tc.image.words.size() == tc.expected.size());
  CHECK(tc.image.words.size() == tc.source.size());
  std::set<size_t> sources(tc.source.begin(), tc.source.end());
  CHECK(sources.size() == testutil::generics().size());
  for (size_t i = 0; i < tc.image.words.size(); ++i)
    CHECK(tc.expected[i] == print_asm(testutil::uarm().flats[tc.source[i]], tc.image.words[i]));
}

TEST_CASE("corpus: deterministic by seed") {
  const auto& flats = testutil::uarm().flats;
  const TestCorpus a = build_test_corpus(flats, 128, 7);
  const TestCorpus b = build_test_corpus(flats, 128, 7);
  const TestCorpus c = build_test_corpus(flats, 128, 8);
  CHECK(a.image == b.image);
  CHECK(a.expected == b.expected);
  CHECK(a.image.words != c.image.words);
}

TEST_CASE("corpus: write and read back") {
  const auto dir = scratch_dir("rw");
  write_test_corpus(small_corpus(), dir);
  const Image img = parse_image(read_bytes(dir / "corpus.uisa"));
  const auto lines = read_lines(dir / "corpus.expected.asm");
  CHECK(img == small_corpus().image);
  CHECK(lines == small_corpus().expected);
  const auto rep = roundtrip(img, lines, [](uint32_t w) { return testutil::interp().disassemble(w); });
  CHECK(rep.words == img.words.size());
  CHECK(rep.mismatches.empty());
}

TEST_CASE("roundtrip: corrupted lines are reported exactly") {
  const TestCorpus& tc = small_corpus();
  auto expected = tc.expected;
  expected[4] = "ADD R0,R0,#1";
  expected[100] += " ";
  const auto rep = roundtrip(tc.image, expected, [](uint32_t w) { return testutil::interp().disassemble(w); });
  REQUIRE(rep.mismatches.size() == 2);
  CHECK(rep.mismatches[0].line == 5);
  CHECK(rep.mismatches[1].line == 101);
  CHECK(rep.mismatches[0].actual == tc.expected[4]);
  const std::string diff = format_mismatches(rep);
  CHECK(testutil::contains(diff, "5c5\n< ADD R0,R0,#1\n---\n> " + tc.expected[4] + "\n"));
  CHECK(testutil::contains(diff, "101c101\n"));

  // Length disagreement is a mismatch too.
  expected = tc.expected;
  expected.pop_back();
  CHECK_FALSE(roundtrip(tc.image, expected, [](uint32_t w) { return testutil::interp().disassemble(w); })
                  .mismatches.empty());
}

TEST_CASE("random programs stay inside their image") {
  const auto& flats = testutil::uarm_nospec().flats;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Image a = random_program(flats, seed);
    CHECK(a == random_program(flats, seed));
    const Interpreter& in = testutil::interp();
    size_t halts = 0;
    for (uint32_t w : a.words) {
      rt::DecodedInstr di;
      if (in.decode(w, 0, di) != rt::DecodeStatus::Ok) continue;
      const std::string& name = in.flat_name(di.id);
      CHECK(name.rfind("SRS", 0) != 0);
      CHECK(name.rfind("RFE", 0) != 0);
      CHECK(name.rfind("LDM3", 0) != 0);
      halts += name == "HLT";
    }
    CHECK(halts == 1);
  }
}
