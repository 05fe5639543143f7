#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "issforge/ingest.hpp"
#include "issforge/ir.hpp"

using namespace issforge;
using testutil::contains;
using testutil::error_text;

namespace {

const char* kIaMode =
    "Mode ia in addressing_mode_4:\n"
    "  start_address = Rn\n"
    "  end_address = Rn+(NbOfSetBitsIn(reglist)*4)-4\n"
    "  if ConditionPassed(cond) and W==1 then\n"
    "    Rn = Rn+(NbOfSetBitsIn(reglist)*4)\n";

Ast reparse(const Ast& ast) {
  const std::string text = "Instruction X:\n" + to_string(ast, 1);
  return parse_pseudocode(text).at("X");
}

}  // namespace

TEST_CASE("pseudocode: addressing mode unit") {
  const auto units = parse_pseudocode(kIaMode);
  REQUIRE(units.count("ia") == 1);
  const Ast& ast = units.at("ia");
  REQUIRE(ast.size() == 3);
  const auto* first = ast[0]->as<stmt::Assign>();
  REQUIRE(first);
  CHECK(to_string(first->lhs) == "start_address");
  CHECK(to_string(first->rhs) == "Rn");
  const auto* cond = ast[2]->as<stmt::If>();
  REQUIRE(cond);
  CHECK(cond->then_block.size() == 1);
  CHECK(cond->else_block.empty());
  const auto* wb = cond->then_block[0]->as<stmt::Assign>();
  REQUIRE(wb);
  CHECK(wb->lhs->is<expr::Reg>());
}

TEST_CASE("pseudocode: header kinds and families") {
  const auto file = parse_pseudocode_file(std::string(kIaMode) + "\nInstruction LDM patch p:\n  Rd = 0\n");
  REQUIRE(file.units.size() == 2);
  CHECK(file.units[0].kind == PseudoUnit::Kind::Mode);
  CHECK(file.units[0].family == "addressing_mode_4");
  CHECK(file.units[1].kind == PseudoUnit::Kind::Instruction);
  CHECK(file.units[1].patch == std::optional<std::string>("p"));
}

TEST_CASE("pseudocode: empty unit") {
  CHECK(contains(error_text([] { parse_pseudocode("Instruction X:\n\nInstruction Y:\n  Rd = 0\n"); }),
                 "empty unit"));
}

TEST_CASE("pseudocode: errors carry unit and position") {
  try {
    parse_pseudocode("Instruction ADD:\n  if S == 1 then\n      Rd = 0\n    Rn = 0\n");
    FAIL("inconsistent indentation accepted");
  } catch (const ParseError& e) {
    CHECK(e.unit() == "ADD");
    CHECK(e.line() == 4);
    CHECK(contains(e.message(), "indentation"));
  }
  try {
    parse_pseudocode("Instruction ADD:\n  Rd = Frobnicate(Rn)\n");
    FAIL("unknown builtin accepted");
  } catch (const ParseError& e) {
    CHECK(e.unit() == "ADD");
    CHECK(e.line() == 2);
    CHECK(e.column() > 0);
    CHECK(contains(e.message(), "Frobnicate"));
  }
  CHECK(contains(error_text([] { parse_pseudocode("Instruction ADD:\n  Rd = Rn $ 1\n"); }), "ADD"));
}

TEST_CASE("pseudocode: nested blocks with mixed indent widths") {
  const std::string text =
      "Instruction X:\n"
      "   if S == 1 then\n"
      "       if d == 15 then\n"
      "        Rd = 1\n"
      "       else\n"
      "        Rd = 2\n"
      "   else\n"
      "     N Flag = 0\n";
  const Ast ast = parse_pseudocode(text).at("X");
  REQUIRE(ast.size() == 1);
  const auto* outer = ast[0]->as<stmt::If>();
  REQUIRE(outer);
  REQUIRE(outer->then_block.size() == 1);
  const auto* inner = outer->then_block[0]->as<stmt::If>();
  REQUIRE(inner);
  CHECK(inner->then_block.size() == 1);
  CHECK(inner->else_block.size() == 1);
  CHECK(outer->else_block.size() == 1);
  CHECK(equal(reparse(ast), ast));
}

TEST_CASE("pseudocode: line continuation and then keyword") {
  const Ast a = parse_pseudocode("Instruction X:\n  if S == 1 then\n    Rd = Rn + \\\n      1\n").at("X");
  const Ast b = parse_pseudocode("Instruction X:\n  if S == 1\n    Rd = (Rn +\n  1)\n").at("X");
  const Ast c = parse_pseudocode("Instruction X:\n  if S == 1\n    Rd = Rn + 1\n").at("X");
  CHECK(equal(a, c));
  CHECK(equal(b, c));
}

TEST_CASE("pseudocode: precedence of comparisons under logical operators") {
  const ExprPtr e = parse_expression("a == 1 and b + 1 == 2 or c");
  const auto* top = e->as<expr::Binary>();
  REQUIRE(top);
  CHECK(top->op == BinaryOp::LogOr);
  const auto* lhs = top->lhs->as<expr::Binary>();
  REQUIRE(lhs);
  CHECK(lhs->op == BinaryOp::LogAnd);
  const auto* rhs_eq = lhs->rhs->as<expr::Binary>();
  REQUIRE(rhs_eq);
  CHECK(rhs_eq->op == BinaryOp::Eq);
  CHECK(rhs_eq->lhs->as<expr::Binary>()->op == BinaryOp::Add);
}

TEST_CASE("pseudocode: print/parse fixed point over the corpus") {
  const auto units = parse_pseudocode(testutil::corpus().sources.pseudocode_text);
  CHECK(units.size() >= 20);
  for (const auto& [name, ast] : units) {
    CAPTURE(name);
    const Ast once = reparse(ast);
    CHECK(equal(once, ast));
    CHECK(to_string(once, 1) == to_string(ast, 1));
  }
}

TEST_CASE("pseudocode: print/parse fixed point over random expressions") {
  std::mt19937_64 rng(7);
  const BinaryOp ops[] = {BinaryOp::Add, BinaryOp::Sub,    BinaryOp::Mul, BinaryOp::BitAnd,
                          BinaryOp::BitOr, BinaryOp::BitXor, BinaryOp::Eq,  BinaryOp::Ne,
                          BinaryOp::Lt,  BinaryOp::Ge,     BinaryOp::LogAnd, BinaryOp::LogOr};
  std::function<ExprPtr(int)> gen = [&](int depth) -> ExprPtr {
    const unsigned k = depth <= 0 ? rng() % 3 : rng() % 7;
    switch (k) {
      case 0: return mk::num(static_cast<uint32_t>(rng() % 300));
      case 1: return mk::var(std::string(1, static_cast<char>('a' + rng() % 4)));
      case 2: return mk::reg(mk::var("n"));
      case 3: return mk::un(rng() % 2 ? UnaryOp::LogNot : UnaryOp::BitNot, gen(depth - 1));
      case 4: return mk::bits(gen(depth - 1), mk::num(static_cast<uint32_t>(rng() % 32)));
      case 5: return mk::call("NbOfSetBitsIn", {gen(depth - 1)});
      default: return mk::bin(ops[rng() % std::size(ops)], gen(depth - 1), gen(depth - 1));
    }
  };
  for (int i = 0; i < 2000; ++i) {
    const ExprPtr e = gen(4);
    const std::string text = to_string(e);
    CAPTURE(text);
    CHECK(equal(parse_expression(text), e));
  }
}

TEST_CASE("encodings: ADC row") {
  const EncodingTable t = parse_encoding_row(
      "31..28 cond | 27..26 00 | 25 I | 24..21 0101 | 20 S | 19..16 Rn | 15..12 Rd | 11..0 shifter_operand", "ADC");
  CHECK(t.param_names() == std::vector<std::string>{"cond", "I", "S", "Rn", "Rd", "shifter_operand"});
  CHECK(t.mask() == 0x0DE00000u);
  CHECK(t.value() == 0x00A00000u);
  std::vector<EncodingField> constants;
  for (const auto& f : t.fields)
    if (f.is_constant) constants.push_back(f);
  REQUIRE(constants.size() == 2);
  CHECK(constants[0] == EncodingField{27, 26, true, "00"});
  CHECK(constants[1] == EncodingField{24, 21, true, "0101"});
  CHECK(t.extract("Rd", 0xE0A21003u) == 1);
  CHECK(t.encode({{"cond", 14}, {"Rn", 2}, {"Rd", 1}, {"shifter_operand", 3}}) == 0xE0A21003u);
}

TEST_CASE("encodings: coverage errors") {
  CHECK(contains(error_text([] { parse_encoding_row("31..28 cond | 27..1 Rx", "T"); }), "bit 0 uncovered"));
  CHECK(contains(error_text([] { parse_encoding_row("31..28 cond | 28..0 Rx", "T"); }), "T"));
  CHECK_FALSE(error_text([] { parse_encoding_row("31..16 Rd | 15..0 Rd", "T"); }).empty());
  CHECK_FALSE(error_text([] { parse_encoding_row("31..28 cond | 27..0 0000000000000000000000000002", "T"); }).empty());
}

TEST_CASE("encodings: fully constant table") {
  const EncodingTable t = parse_encoding_row("31..0 11100001001000000000000001110000", "HLT");
  CHECK(t.mask() == 0xFFFFFFFFu);
  CHECK(t.value() == 0xE1200070u);
  CHECK(t.param_names().empty());
  CHECK(t.encode({}) == t.value());
}

TEST_CASE("encodings: every corpus table tiles the word") {
  const auto tables = parse_encodings(testutil::corpus().sources.encodings_text);
  CHECK(tables.size() >= 20);
  for (const auto& [name, t] : tables) {
    CAPTURE(name);
    uint64_t covered = 0;
    for (const auto& f : t.fields) {
      const uint64_t bits = ((uint64_t{1} << f.width()) - 1) << f.lo;
      CHECK((covered & bits) == 0);
      covered |= bits;
    }
    CHECK(covered == 0xFFFFFFFFull);
    CHECK(parse_encoding_row(to_string(t), name) == t);
  }
}

TEST_CASE("syntax: templates") {
  const SyntaxTemplate adc = parse_syntax_template("ADC{<cond>}{S} <Rd>,<Rn>,<shifter_operand>", "ADC");
  CHECK(adc.mnemonic == "ADC");
  CHECK(placeholders(adc) == std::vector<std::string>{"cond", "Rd", "Rn", "shifter_operand"});
  size_t groups = 0;
  for (const auto& e : adc.elements)
    if (e.kind == SyntaxElement::Kind::Optional) ++groups;
  CHECK(groups == 2);

  const SyntaxTemplate lsl = parse_syntax_template("<Rm>,LSL #<shift_imm>", "lsl_imm");
  REQUIRE(lsl.elements.size() == 3);
  CHECK(lsl.elements[0] == SyntaxElement{SyntaxElement::Kind::Placeholder, "Rm", {}, ""});
  CHECK(lsl.elements[1] == SyntaxElement{SyntaxElement::Kind::Literal, ",LSL #", {}, ""});
  CHECK(lsl.elements[2] == SyntaxElement{SyntaxElement::Kind::Placeholder, "shift_imm", {}, ""});

  const SyntaxTemplate b = parse_syntax_template("B <target>", "B");
  CHECK(b.mnemonic == "B");
  CHECK(placeholders(b) == std::vector<std::string>{"target"});

  CHECK_FALSE(error_text([] { parse_syntax_template("ADC{<cond> <Rd>", "ADC"); }).empty());
  CHECK_FALSE(error_text([] { parse_syntax_template("ADC <Rd", "ADC"); }).empty());
}

TEST_CASE("constraints: forms") {
  const auto cs = parse_constraints("UXTAH: Rn != 15\nLDRBT: Rd != Rn\nX: cond notin {14, 15}\n");
  REQUIRE(cs.size() == 3);
  CHECK(cs[0].kind == ValidityConstraint::Kind::NotEqualValue);
  CHECK(cs[0].subject == "UXTAH");
  CHECK(cs[0].param_a == "Rn");
  CHECK(cs[0].values == std::vector<uint32_t>{15});
  CHECK(cs[1].kind == ValidityConstraint::Kind::ParamsDiffer);
  CHECK(cs[1].param_a == "Rd");
  CHECK(cs[1].param_b == "Rn");
  CHECK(cs[2].kind == ValidityConstraint::Kind::NotIn);
  CHECK(cs[2].values == std::vector<uint32_t>{14, 15});
  CHECK(parse_constraints("").empty());
  CHECK_FALSE(error_text([] { parse_constraints("UXTAH Rn != 15\n"); }).empty());
}

TEST_CASE("link: corpus") {
  const IsaDescription& d = testutil::description();
  CHECK(d.instructions.size() >= 12);
  CHECK(d.modes.size() >= 4);
  const InstrUnit* adc = d.find_instruction("ADC");
  REQUIRE(adc);
  CHECK(adc->family == "shifter_operand");
  CHECK(adc->modes == std::vector<std::string>{"imm", "lsl_imm", "lsl_reg"});
  const InstrUnit* uxtah = d.find_instruction("UXTAH");
  REQUIRE(uxtah);
  CHECK(uxtah->constraints.size() == 4);
}

TEST_CASE("link: deterministic") {
  CHECK(dump(link(testutil::corpus().sources)) == dump(link(testutil::corpus().sources)));
}

TEST_CASE("link: missing pieces") {
  SourceSet s = testutil::corpus().sources;
  std::string syn;
  std::istringstream in(s.syntax_text);
  for (std::string line; std::getline(in, line);)
    if (line.rfind("ADC:", 0) != 0) syn += line + "\n";
  s.syntax_text = syn;
  const std::string msg = error_text([&] { link(s); });
  CHECK(contains(msg, "ADC"));

  SourceSet dangling = testutil::corpus().sources;
  dangling.syntax_text += "\nNOP: NOP <Rz>\n";
  CHECK(contains(error_text([&] { link(dangling); }), "NOP"));

  SourceSet orphan = testutil::corpus().sources;
  orphan.pseudocode_text += "\nMode unused in nothing_uses_me:\n  address = Rn\n";
  orphan.encodings_text += "\nunused: 31..28 cond | 27..20 00000000 | 19..16 Rn | 15..0 0000000000000000\n";
  orphan.syntax_text += "\nunused: [<Rn>]\n";
  const IsaDescription d = link(orphan);
  bool warned = false;
  for (const auto& w : d.warnings) warned |= contains(w, "unused");
  CHECK(warned);
}
