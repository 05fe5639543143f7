#include <bit>
#include <functional>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "issforge/harness.hpp"
#include "issforge/programs.hpp"
#include "issforge/runtime/builtins.hpp"
#include "spec/iss.hpp"

using namespace issforge;

namespace {

// Forwards to a back-end and counts decodes.
template <class Backend>
struct Counting {
  const Backend& be;
  mutable size_t decodes = 0;

  rt::DecodeStatus decode(uint32_t word, uint32_t addr, rt::DecodedInstr& out) const {
    ++decodes;
    return be.decode(word, addr, out);
  }
  void execute(rt::CpuState& s, const rt::DecodedInstr& di) const { be.execute(s, di); }
  uint32_t abort_vector() const { return be.abort_vector(); }
};

uint32_t encode_one(const std::function<void(ProgramBuilder&)>& fn) {
  ProgramBuilder b(testutil::uarm_nospec().flats);
  fn(b);
  return b.finish().words.at(0);
}

}  // namespace

TEST_CASE("builtins: shifts and rotates against 64-bit arithmetic") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20000; ++i) {
    const auto x = static_cast<uint32_t>(rng());
    for (uint32_t s = 0; s < 40; ++s) {
      const uint64_t wide = uint64_t{x} << s;
      REQUIRE(rt::Logical_Shift_Left(x, s) == (s >= 32 ? 0u : static_cast<uint32_t>(wide)));
      REQUIRE(rt::Logical_Shift_Right(x, s) == (s >= 32 ? 0u : x >> s));
      const int64_t sx = static_cast<int32_t>(x);
      REQUIRE(rt::Arithmetic_Shift_Right(x, s) == static_cast<uint32_t>(sx >> std::min<uint32_t>(s, 63)));
      REQUIRE(rt::Rotate_Right(x, s) == static_cast<uint32_t>((uint64_t{x} << 32 | x) >> (s % 32)));
    }
  }
}

TEST_CASE("builtins: bit fields, sign extension and population count") {
  for (uint32_t x = 0; x < 256; ++x) {
    REQUIRE(rt::NbOfSetBitsIn(x) == static_cast<uint32_t>(std::popcount(x)));
    REQUIRE(rt::SignExtend(x, 8) == static_cast<uint32_t>(static_cast<int32_t>(static_cast<int8_t>(x))));
    for (uint32_t hi = 0; hi < 8; ++hi)
      for (uint32_t lo = 0; lo <= hi; ++lo) {
        const uint32_t width_mask = (1u << (hi - lo + 1)) - 1;
        REQUIRE(rt::bits(x, hi, lo) == ((x >> lo) & width_mask));
        for (uint32_t v = 0; v <= width_mask; ++v) {
          const uint32_t out = rt::insert_bits(x, hi, lo, v);
          REQUIRE(rt::bits(out, hi, lo) == v);
          REQUIRE((out & ~(width_mask << lo)) == (x & ~(width_mask << lo)));
        }
      }
    REQUIRE(rt::bit(x, 40) == 0);
  }
}

TEST_CASE("cpu: program counter reads ahead by eight") {
  rt::CpuState s;
  s.begin_instruction(0x100);
  CHECK(s.reg(15) == 0x108);
  CHECK(s.address_of_next_instruction() == 0x104);
  s.set_reg(15, 0x203);
  CHECK(s.branched());
  CHECK(s.next_pc() == 0x200);
  CHECK(s.pc() == 0x100);
}

TEST_CASE("cpu: banked registers and SPSR") {
  rt::CpuState s;
  s.set_cpsr(0x10);
  s.set_reg(13, 111);
  s.set_reg(14, 222);
  s.set_reg(0, 5);
  s.set_cpsr(0x13);
  CHECK(s.reg(13) == 0);
  s.set_reg(13, 333);
  CHECK(s.reg(0) == 5);
  CHECK(s.reg_mode(13, 0x10) == 111);
  CHECK(s.reg_mode(14, 0x1F) == 222);
  s.set_reg_mode(13, 0x17, 444);
  s.set_spsr(0x600000D0);
  CHECK(s.spsr() == 0x600000D0);
  s.set_cpsr(0x17);
  CHECK(s.reg(13) == 444);
  s.set_cpsr(0x1F);
  CHECK(s.reg(13) == 111);
  CHECK_FALSE(s.current_mode_has_spsr());
  CHECK_THROWS_AS(s.spsr(), rt::UnpredictableFault);
  CHECK_THROWS_AS(s.set_cpsr(0x11), rt::UnpredictableFault);
  CHECK(s.spsr_of(rt::ModeBits::Svc) == 0x600000D0);
}

TEST_CASE("cpu: memory is little-endian and faults outside mapped ranges") {
  rt::CpuState s;
  s.mem.map(0x1000, 0x100);
  s.mem_write(0x1000, 4, 0x11223344);
  CHECK(s.mem_read(0x1000, 1) == 0x44);
  CHECK(s.mem_read(0x1003, 1) == 0x11);
  CHECK(s.mem_read(0x1001, 2) == 0x2233);
  CHECK_THROWS_AS(s.mem_read(0x10FE, 4), rt::DataAbort);
  CHECK_THROWS_AS(s.mem_write(0x2000, 1, 0), rt::DataAbort);
  CHECK_THROWS_AS(s.mem.map(0x10F0, 0x20), std::invalid_argument);
}

TEST_CASE("cpu: data abort entry") {
  rt::CpuState s;
  s.set_cpsr(0x60000010);
  s.begin_instruction(0x400);
  s.enter_abort(0x10);
  CHECK((s.cpsr() & 0x1F) == 0x17);
  CHECK(s.spsr() == 0x60000010);
  CHECK(s.reg(14) == 0x408);
  CHECK(s.pc() == 0x10);
}

TEST_CASE("R15 operand reads pc+8 on both back-ends") {
  const uint32_t mov = encode_one([](ProgramBuilder& b) { b.mov_reg(0, 15); });
  rt::CpuState s;
  s.begin_instruction(0x100);
  const auto a = testutil::step(testutil::interp(), s, mov);
  const auto b = testutil::step(uarm_spec::Iss{}, s, mov);
  REQUIRE(a.kind == testutil::Step::Ok);
  CHECK(a.state.reg(0) == 0x108);
  CHECK(b.state.reg(0) == 0x108);
}

TEST_CASE("image: serialization") {
  const Image img{0x20, {0xE3A00001, 0xE1200070}};
  CHECK(parse_image(serialize(img)) == img);
  auto bytes = serialize(img);
  CHECK(bytes.size() == 16 + 8);
  bytes[0] = 'X';
  CHECK_THROWS_AS(parse_image(bytes), Error);
  auto truncated = serialize(img);
  truncated.pop_back();
  CHECK_THROWS_AS(parse_image(truncated), Error);
  const rt::CpuState s = make_state(img);
  CHECK(s.pc() == 0x20);
  uint32_t w = 0;
  rt::CpuState copy = s;
  CHECK(copy.mem.fetch(4, w));
  CHECK(w == 0xE1200070);
  CHECK_THROWS_AS(make_state(Image{0, std::vector<uint32_t>(kRamSize / 4 + 1)}), Error);
}

TEST_CASE("block cache: a second run decodes nothing") {
  ProgramBuilder b(testutil::uarm_nospec().flats);
  for (uint32_t r = 0; r < 9; ++r) b.mov_imm(r, r + 1);
  b.halt();
  const Image img = b.finish();
  Counting<Interpreter> be{testutil::interp()};
  rt::BlockCache cache;
  rt::RunOptions opt;
  rt::CpuState first = make_state(img);
  const auto r1 = rt::run(be, first, opt, &cache);
  CHECK(r1.reason == rt::StopReason::Halted);
  CHECK(r1.executed == 10);
  CHECK(be.decodes == 10);
  be.decodes = 0;
  rt::CpuState second = make_state(img);
  const auto r2 = rt::run(be, second, opt, &cache);
  CHECK(r2.executed == 10);
  CHECK(be.decodes == 0);
  CHECK(first == second);
  CHECK(second.reg(8) == 9);
}

TEST_CASE("block cache: blocks end at terminators") {
  const Image img = make_benchmark("sorting", testutil::uarm_nospec().flats, 1);
  rt::CpuState s = make_state(img);
  const Interpreter& in = testutil::interp();
  for (uint32_t pc = 0x20; pc < img.words.size() * 4; pc += 4) {
    rt::DecodeStatus st;
    bool fetch_fault;
    const rt::Block blk = rt::detail::build_block(in, s.mem, pc, st, fetch_fault);
    if (blk.insns.empty()) continue;
    const auto& last = blk.insns.back();
    const bool at_limit = blk.insns.size() == rt::kMaxBlockInsns || ((last.addr + 4) >> rt::kPageBits) != (pc >> rt::kPageBits);
    uint32_t next_word = 0;
    rt::DecodedInstr next;
    const bool next_bad = !s.mem.fetch(last.addr + 4, next_word) || in.decode(next_word, last.addr + 4, next) != rt::DecodeStatus::Ok;
    CHECK((last.is_terminator || at_limit || next_bad));
    for (size_t i = 0; i + 1 < blk.insns.size(); ++i) CHECK_FALSE(blk.insns[i].is_terminator);
  }
}

TEST_CASE("block cache: self-modifying store re-decodes the block") {
  const auto& flats = testutil::uarm_nospec().flats;
  const uint32_t mov2 = encode_one([](ProgramBuilder& b) { b.mov_imm(0, 2); });
  ProgramBuilder b(flats);
  b.branch("main").pad_to(0x10).halt().pad_to(0x20).label("main");
  b.mov_imm(5, 0).mov_imm(4, 0).mov_imm(6, 0x100).mov_imm(7, 0x80);
  b.pad_to(0x80).label("target");
  b.mov_imm(0, 1);
  b.dp_imm("ADD", 5, 5, 1).dp_reg("ADD", 4, 4, 0).cmp_imm(5, 2).branch("done", EQ);
  b.mem("LDR", 1, 6, 0).mem("STR", 1, 7, 0).branch("target");
  b.label("done").halt();
  b.pad_to(0x100).word(mov2);
  const Image img = b.finish();

  rt::RunOptions cached, uncached;
  uncached.use_cache = false;
  const Outcome with = run_image(testutil::interp(), img, cached);
  const Outcome without = run_image(testutil::interp(), img, uncached);
  REQUIRE(with.result.reason == rt::StopReason::Halted);
  CHECK(with.state.reg(4) == 3);
  CHECK(same_outcome(with, without));
  const Outcome iss = run_image(uarm_spec::Iss{}, img, cached);
  CHECK(same_outcome(with, iss));
}

TEST_CASE("run: profile counts add up to the executed count") {
  const Image img = make_benchmark("loop", testutil::uarm().flats, 1);
  std::vector<uint64_t> counts(testutil::interp().flat_count());
  rt::RunOptions opt;
  opt.profile = &counts;
  const Outcome o = run_image(testutil::interp(), img, opt);
  REQUIRE(o.result.reason == rt::StopReason::Halted);
  uint64_t sum = 0;
  for (uint64_t c : counts) sum += c;
  CHECK(sum == o.result.executed);
  CHECK(o.result.executed == 5242887);
}

TEST_CASE("run: faults report the pc") {
  ProgramBuilder b(testutil::uarm_nospec().flats);
  b.mov_imm(0, 1).word(0xFFFFFFFF);
  const Outcome o = run_image(testutil::interp(), b.finish(), {});
  CHECK(o.result.reason == rt::StopReason::Undefined);
  CHECK(o.result.fault_pc == 4);
  CHECK(o.result.executed == 1);

  rt::CpuState s;  // nothing mapped
  const auto r = rt::run(testutil::interp(), s, {});
  CHECK(r.reason == rt::StopReason::FetchAbort);
}

TEST_CASE("run: a store over the next instruction takes effect with and without the cache") {
  const uint32_t mov7 = encode_one([](ProgramBuilder& b) { b.mov_imm(0, 7); });
  ProgramBuilder b(testutil::uarm_nospec().flats);
  b.mov_imm(1, 0x40).mov_imm(3, 0x10).mem("LDR", 2, 1, 0).mem("STR", 2, 3, 0);
  b.mov_imm(0, 1).halt();  // replaced by `mov r0, #7` before it runs
  b.pad_to(0x40).word(mov7);
  const Image img = b.finish();
  rt::RunOptions cached, uncached;
  uncached.use_cache = false;
  for (const Outcome& o : {run_image(testutil::interp(), img, cached), run_image(testutil::interp(), img, uncached),
                           run_image(uarm_spec::Iss{}, img, cached), run_image(uarm_spec::Iss{}, img, uncached)}) {
    CHECK(o.result.reason == rt::StopReason::Halted);
    CHECK(o.state.reg(0) == 7);
  }
}
