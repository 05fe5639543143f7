#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "issforge/harness.hpp"
#include "issforge/programs.hpp"
#include "issforge/sim.hpp"
#include "issforge/testgen.hpp"
#include "spec/iss.hpp"

using namespace issforge;

namespace {

constexpr uint32_t kN = 1u << 31, kZ = 1u << 30, kC = 1u << 29, kV = 1u << 28;

uint32_t adc_word(uint32_t cond, uint32_t s, uint32_t shift = 0) {
  return testutil::flat("ADC_lsl_imm")
      .encoding.encode({{"cond", cond}, {"S", s}, {"Rn", 2}, {"Rd", 1}, {"shift_imm", shift}, {"Rm", 3}});
}

const DecoderSpec& decoder() {
  static const DecoderSpec d = DecoderSpec::build(testutil::uarm().flats);
  return d;
}

const std::string& name_of(const DecoderSpec::Match& m) { return testutil::uarm().flats.at(m.flat).name; }

const std::string& generic_of(const FlatInstruction& f) { return f.is_variant() ? f.generic : f.name; }

}  // namespace

TEST_CASE("interpreter: add with carry sets overflow") {
  rt::CpuState s;
  s.set_cpsr(0x10);
  s.set_reg(2, 0x7FFFFFFF);
  s.set_reg(3, 1);
  s.begin_instruction(0x100);
  const auto r = testutil::step(testutil::interp(), s, adc_word(14, 1));
  REQUIRE(r.kind == testutil::Step::Ok);
  CHECK(r.state.reg(1) == 0x80000000);
  const uint32_t flags = r.state.cpsr() & 0xF0000000;
  CHECK(flags == (kN | kV));

  // Carry in is added.
  s.set_cpsr(0x10 | kC);
  s.set_reg(2, 0xFFFFFFFF);
  s.set_reg(3, 0);
  const auto c = testutil::step(testutil::interp(), s, adc_word(14, 1));
  CHECK(c.state.reg(1) == 0);
  CHECK((c.state.cpsr() & 0xF0000000) == (kZ | kC));
}

TEST_CASE("interpreter: failed condition leaves the state unchanged") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    rt::CpuState s = testutil::random_state(rng);
    s.set_cpsr(s.cpsr() & ~kZ);
    const auto r = testutil::step(testutil::interp(), s, adc_word(0 /* EQ */, 1));
    REQUIRE(r.kind == testutil::Step::Ok);
    CHECK(r.state == s);
    CHECK_FALSE(r.branched);
  }
}

TEST_CASE("interpreter: faulting store leaves the base register") {
  const FlatInstruction& f = testutil::flat("STR_imm_pre");
  const uint32_t word = f.encoding.encode({{"cond", 14}, {"U", 1}, {"Rn", 4}, {"Rd", 5}, {"offset_12", 8}});
  rt::CpuState s;
  s.set_cpsr(0x10);
  s.set_reg(4, 0xF00000);
  s.set_reg(5, 77);
  s.begin_instruction(0x100);
  const auto r = testutil::step(testutil::interp(), s, word);
  CHECK(r.kind == testutil::Step::Abort);
  CHECK(r.state.reg(4) == 0xF00000);
  const auto iss = testutil::step(uarm_spec::Iss{}, s, word);
  CHECK(iss.kind == testutil::Step::Abort);
  CHECK(iss.state.reg(4) == 0xF00000);
}

TEST_CASE("decoder: most specialized variant first") {
  CHECK(name_of(decoder().decode(testutil::uarm().flats, adc_word(14, 0))) == "ADC_lsl_imm__S0_AL");
  CHECK(name_of(decoder().decode(testutil::uarm().flats, adc_word(14, 1))) == "ADC_lsl_imm__S1_AL");
  CHECK(name_of(decoder().decode(testutil::uarm().flats, adc_word(1, 0))) == "ADC_lsl_imm__S0");
  CHECK(name_of(decoder().decode(testutil::uarm().flats, adc_word(1, 1))) == "ADC_lsl_imm__S1");
}

TEST_CASE("decoder: precomputed parameters") {
  const FlatInstruction& f = testutil::flat("LDM_ia");
  const uint32_t word = f.encoding.encode({{"cond", 14}, {"W", 0}, {"Rn", 1}, {"reglist", 0x000B}});
  const auto m = decoder().decode(testutil::uarm().flats, word);
  REQUIRE(m.status == rt::DecodeStatus::Ok);
  CHECK(generic_of(testutil::uarm().flats[m.flat]) == "LDM_ia");
  CHECK(m.env.at("nb_reg_x4") == 12);
}

TEST_CASE("decoder: undefined and all-constant words") {
  CHECK(decoder().decode(testutil::uarm().flats, 0xFFFFFFFF).status == rt::DecodeStatus::Undefined);
  rt::DecodedInstr di;
  CHECK(testutil::interp().decode(0xFFFFFFFF, 0, di) == rt::DecodeStatus::Undefined);
  const auto nop = decoder().decode(testutil::uarm().flats, 0xE320F000);
  REQUIRE(nop.status == rt::DecodeStatus::Ok);
  CHECK(name_of(nop) == "NOP");
  CHECK(testutil::uarm().flats[nop.flat].params.empty());
}

TEST_CASE("decoder: three candidate tables, one bucket") {
  // cond E, bits 27..20 0x6F, Rn 15, bits 9..4 000111.
  const uint32_t word = 0xE6FF1070 | 3;
  const auto& flats = testutil::uarm().flats;
  // Tables whose constant bits agree with the word on 27..20.
  std::set<std::string> key_matches, full_matches;
  for (const auto& ins : testutil::description().instructions) {
    const uint32_t m = ins.encoding.mask();
    if ((word & m & DecoderSpec::kKeyMask) == (ins.encoding.value() & DecoderSpec::kKeyMask)) key_matches.insert(ins.name);
    if ((word & m) == ins.encoding.value()) full_matches.insert(ins.name);
  }
  CHECK(key_matches == std::set<std::string>{"LDRB", "LDRBT", "UXTAH"});
  CHECK(full_matches == std::set<std::string>{"LDRB", "UXTAH"});

  std::set<std::string> bucket;
  for (uint32_t c : decoder().buckets[0x6F]) bucket.insert(flats[decoder().candidates[c].generic].name);
  CHECK(bucket == std::set<std::string>{"LDRBT", "UXTAH"});

  CHECK(decoder().decode(flats, word).status == rt::DecodeStatus::Unpredictable);
  rt::DecodedInstr di;
  CHECK(testutil::interp().decode(word, 0, di) == rt::DecodeStatus::Unpredictable);
  const auto ok = decoder().decode(flats, (word & ~0x000F0000u) | 0x00030000u);
  REQUIRE(ok.status == rt::DecodeStatus::Ok);
  CHECK(generic_of(flats[ok.flat]) == "UXTAH");
}

TEST_CASE("decoder: total over random words") {
  std::mt19937_64 rng(5);
  const auto& flats = testutil::uarm().flats;
  size_t ok = 0;
  for (int i = 0; i < 1000000; ++i) {
    const auto word = static_cast<uint32_t>(rng());
    const auto m = decoder().decode(flats, word);
    if (m.status != rt::DecodeStatus::Ok) continue;
    ++ok;
    const FlatInstruction& f = flats.at(m.flat);
    REQUIRE((word & f.encoding.mask()) == f.encoding.value());
    REQUIRE(constraints_hold(f, word));
  }
  CHECK(ok > 0);
}

TEST_CASE("decoder: every generated word selects its generator") {
  const auto& flats = testutil::uarm().flats;
  const TestCorpus tc = build_test_corpus(flats, 256);
  REQUIRE(tc.image.words.size() == tc.source.size());
  for (size_t i = 0; i < tc.image.words.size(); ++i) {
    const uint32_t word = tc.image.words[i];
    const auto m = decoder().decode(flats, word);
    REQUIRE(m.status == rt::DecodeStatus::Ok);
    const FlatInstruction& gen = flats[tc.source[i]];
    const FlatInstruction& got = flats[m.flat];
    CAPTURE(word);
    CHECK(generic_of(got) == gen.name);
    // No other generic accepts the word.
    size_t owners = 0;
    for (const auto& f : flats)
      if (!f.is_variant() && (word & f.encoding.mask()) == f.encoding.value() && constraints_hold(f, word)) ++owners;
    CHECK(owners == 1);
  }
}

TEST_CASE("assembly printing") {
  const FlatInstruction& f = testutil::flat("ADC_lsl_imm");
  CHECK(print_asm(f, adc_word(14, 1, 4)) == "ADCS R1,R2,R3,LSL #4");
  CHECK(print_asm(f, adc_word(0, 0, 4)) == "ADCEQ R1,R2,R3,LSL #4");
  CHECK(print_asm(f, adc_word(14, 0, 0)) == "ADC R1,R2,R3,LSL #0");
  CHECK(testutil::interp().disassemble(adc_word(14, 1, 4)) == "ADCS R1,R2,R3,LSL #4");
}

TEST_CASE("oracle equivalence: cached, uncached and generated") {
  const auto& flats = testutil::uarm_nospec().flats;
  rt::RunOptions cached, uncached;
  uncached.use_cache = false;
  uint64_t limit = cached.max_insns;
  auto check = [&](const Image& img) {
    cached.max_insns = uncached.max_insns = limit;
    const Outcome a = run_image(testutil::interp(), img, cached);
    const Outcome b = run_image(testutil::interp(), img, uncached);
    const Outcome c = run_image(uarm_spec::Iss{}, img, cached);
    CHECK(same_outcome(a, b));
    CHECK(same_outcome(a, c));
    return a;
  };
  for (const auto& name : benchmark_names()) {
    CAPTURE(name);
    CHECK(check(make_benchmark(name, flats, 1)).result.reason == rt::StopReason::Halted);
  }
  // Random branches often loop forever.
  limit = 200'000;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    CAPTURE(seed);
    check(random_program(flats, seed));
  }
}
