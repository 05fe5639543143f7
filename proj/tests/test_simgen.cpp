#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "issforge/harness.hpp"
#include "issforge/programs.hpp"
#include "issforge/simgen.hpp"
#include "issforge/testgen.hpp"
#include "nospec/iss.hpp"
#include "spec/iss.hpp"

using namespace issforge;

namespace {

const GeneratedIss& emitted(bool spec) {
  static const GeneratedIss a = emit_iss(testutil::uarm().flats, {"uarm_spec", 0x10});
  static const GeneratedIss b = emit_iss(testutil::uarm_nospec().flats, {"uarm_nospec", 0x10});
  return spec ? a : b;
}

const std::string& file(const GeneratedIss& iss, const std::string& name) {
  for (const auto& f : iss.files)
    if (f.name == name) return f.text;
  throw Error("no generated file " + name);
}

// Body of the routine preceded by `// name`.
std::string routine(const std::string& text, const std::string& name) {
  const size_t at = text.find("// " + name + "\n");
  REQUIRE(at != std::string::npos);
  const size_t end = text.find("\n}\n", at);
  REQUIRE(end != std::string::npos);
  return text.substr(at, end - at);
}

}  // namespace

TEST_CASE("generated decoder agrees with the interpreter") {
  const auto& flats = testutil::uarm().flats;
  const TestCorpus tc = build_test_corpus(flats, 512);
  const uarm_spec::Iss iss;
  for (uint32_t word : tc.image.words) {
    rt::DecodedInstr a, b;
    REQUIRE(testutil::interp().decode(word, 0x100, a) == rt::DecodeStatus::Ok);
    REQUIRE(iss.decode(word, 0x100, b) == rt::DecodeStatus::Ok);
    CAPTURE(word);
    CHECK(a.id == b.id);
    CHECK(a.params == b.params);
    CHECK(a.is_terminator == b.is_terminator);
    CHECK(iss.print(b) == testutil::interp().print(a));
  }
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200000; ++i) {
    const auto word = static_cast<uint32_t>(rng());
    rt::DecodedInstr a, b;
    const auto sa = testutil::interp().decode(word, 0, a);
    REQUIRE(sa == iss.decode(word, 0, b));
    if (sa == rt::DecodeStatus::Ok) REQUIRE(a.id == b.id);
  }
}

TEST_CASE("one routine per flat instruction") {
  CHECK(emitted(true).routines == testutil::uarm().flats.size());
  CHECK(emitted(true).routines == 169);
  CHECK(emitted(false).routines == 56);
  CHECK(emitted(true).param_lists == 40);
  CHECK(emitted(false).param_lists == 18);
  CHECK(uarm_spec::Iss{}.flat_count() == 169);
  CHECK(uarm_nospec::Iss{}.flat_count() == 56);
  for (size_t i = 0; i < testutil::uarm().flats.size(); ++i)
    CHECK(testutil::uarm().flats[i].name == uarm_spec::Iss{}.flat_name(i));
}

TEST_CASE("emitted files match the compiled ones") {
  for (bool spec : {true, false}) {
    CHECK(emitted(spec).files.size() == 5);
    for (const auto& f : emitted(spec).files) {
      std::ifstream in(std::filesystem::path(ISSFORGE_GEN_DIR) / (spec ? "spec" : "nospec") / f.name);
      REQUIRE(in);
      std::stringstream text;
      text << in.rdbuf();
      CAPTURE(f.name);
      CHECK(text.str() == f.text);
    }
  }
}

TEST_CASE("specialized routines drop dead work") {
  const std::string& sem = file(emitted(true), "semantics.cpp");
  const std::string s0 = routine(sem, "ADC_lsl_imm__S0_AL");
  CHECK_FALSE(testutil::contains(s0, "set_flag"));
  CHECK_FALSE(testutil::contains(s0, "ConditionPassed"));
  const std::string s1 = routine(sem, "ADC_lsl_imm__S1");
  CHECK(testutil::contains(s1, "set_flag"));
  const std::string generic = routine(file(emitted(false), "semantics.cpp"), "ADC_lsl_imm");
  CHECK(testutil::contains(generic, "set_flag"));
  CHECK(s0.size() < generic.size());
}

TEST_CASE("specialization is transparent") {
  const auto& flats = testutil::uarm_nospec().flats;
  rt::RunOptions opt;
  for (const auto& name : benchmark_names()) {
    const Image img = make_benchmark(name, flats, 1);
    const Outcome a = run_image(uarm_spec::Iss{}, img, opt);
    const Outcome b = run_image(uarm_nospec::Iss{}, img, opt);
    CAPTURE(name);
    CHECK(a.result.reason == rt::StopReason::Halted);
    CHECK(same_outcome(a, b));
  }
  opt.max_insns = 200'000;
  for (uint64_t seed = 100; seed < 300; ++seed) {
    const Image img = random_program(flats, seed);
    CAPTURE(seed);
    CHECK(same_outcome(run_image(uarm_spec::Iss{}, img, opt), run_image(uarm_nospec::Iss{}, img, opt)));
  }
}

TEST_CASE("single steps agree with the interpreter on random states") {
  std::mt19937_64 rng(21);
  const uarm_spec::Iss iss;
  size_t n = 0;
  for (const auto& f : testutil::uarm().flats) {
    for (int k = 0; k < 100; ++k) {
      const ValidWord w = sample_valid(f, rng);
      const rt::CpuState s = testutil::random_state(rng);
      const auto a = testutil::step(testutil::interp(), s, w.word);
      const auto b = testutil::step(iss, s, w.word);
      CAPTURE(f.name);
      CAPTURE(w.word);
      REQUIRE(testutil::same_step(a, b));
      ++n;
    }
  }
  CHECK(n == 16900);
}

TEST_CASE("untranslatable construct is reported") {
  std::vector<FlatInstruction> flats{testutil::flat("NOP")};
  flats[0].locals.push_back("x");
  flats[0].ast.push_back(mk::assign(mk::var("x"), mk::call("NoSuchBuiltin", {})));
  CHECK(testutil::contains(testutil::error_text([&] { emit_iss(flats, {}); }), "NoSuchBuiltin"));
}
