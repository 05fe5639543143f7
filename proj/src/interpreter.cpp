#include <type_traits>

#include "issforge/error.hpp"
#include "issforge/ir.hpp"
#include "issforge/runtime/builtins.hpp"
#include "issforge/sim.hpp"

namespace issforge {

// Trees are compiled into flat node arrays with variables resolved to slots.
struct Interpreter::Program {
  enum class Op : uint8_t {
    Const, Slot, Reg, RegMode, Bin, Not, BitNot, Bit, Bits, Flag, Mem, Cpsr, Spsr,
    CondPassed, HasSpsr, Privileged, NextAddr, CurAddr, Builtin,
  };
  struct Node {
    Op op;
    BinaryOp bin = BinaryOp::Add;
    uint32_t imm = 0;
    int a = -1, b = -1, c = -1;
  };

  enum class Target : uint8_t { Slot, Reg, RegMode, Flag, Mem, Cpsr, Spsr, SlotBits, RegBits };
  enum class Kind : uint8_t { Assign, If, For, Halt, Unpredictable };
  struct Stm {
    Kind kind;
    Target target = Target::Slot;
    uint32_t imm = 0;      // slot, flag, memory size or loop bounds
    uint32_t last = 0;
    int e = -1;            // value / condition
    int t1 = -1, t2 = -1, t3 = -1;  // target operands
    std::vector<Stm> body, else_body;
  };

  std::vector<Node> nodes;
  std::vector<Stm> code;
  size_t num_params = 0;
  size_t num_slots = 0;
};

namespace {

using Program = Interpreter::Program;
using Op = Program::Op;

enum BuiltinId : uint32_t {
  kNbOfSetBitsIn, kSignExtend, kLsl, kLsr, kAsr, kRor, kCarryAdd2, kCarryAdd3, kBorrowSub2,
  kBorrowSub3, kOvfAdd2, kOvfAdd3, kOvfSub2, kOvfSub3, kSatAdd2, kSatSub2,
};

const std::map<std::string, uint32_t>& builtin_ids() {
  static const std::map<std::string, uint32_t> ids = {
      {"NbOfSetBitsIn", kNbOfSetBitsIn}, {"SignExtend", kSignExtend},
      {"Logical_Shift_Left", kLsl},      {"Logical_Shift_Right", kLsr},
      {"Arithmetic_Shift_Right", kAsr},  {"Rotate_Right", kRor},
      {"CarryFromAdd2", kCarryAdd2},     {"CarryFromAdd3", kCarryAdd3},
      {"BorrowFromSub2", kBorrowSub2},   {"BorrowFromSub3", kBorrowSub3},
      {"OverflowFromAdd2", kOvfAdd2},    {"OverflowFromAdd3", kOvfAdd3},
      {"OverflowFromSub2", kOvfSub2},    {"OverflowFromSub3", kOvfSub3},
      {"SignedSatAdd2", kSatAdd2},       {"SignedSatSub2", kSatSub2},
  };
  return ids;
}

rt::FlagBit flag_bit(Flag f) {
  switch (f) {
    case Flag::N: return rt::kN;
    case Flag::Z: return rt::kZ;
    case Flag::C: return rt::kC;
    case Flag::V: return rt::kV;
  }
  return rt::kN;
}

class Compiler {
 public:
  Compiler(const FlatInstruction& flat, Program& p) : flat_(flat), p_(p) {
    for (const auto& param : flat.params) slot(param.name);
    p_.num_params = flat.params.size();
  }

  void run() {
    p_.code = block(flat_.ast);
    p_.num_slots = slots_.size();
  }

 private:
  uint32_t slot(const std::string& name) {
    auto [it, inserted] = slots_.emplace(name, static_cast<uint32_t>(slots_.size()));
    return it->second;
  }

  uint32_t existing_slot(const std::string& name) {
    auto it = slots_.find(name);
    if (it != slots_.end()) return it->second;
    // Locals read before any assignment start at zero.
    return slot(name);
  }

  int node(Program::Node n) {
    p_.nodes.push_back(n);
    return static_cast<int>(p_.nodes.size() - 1);
  }

  int expr(const ExprPtr& e) {
    return std::visit(
        [&](const auto& n) -> int {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, expr::Var>) {
            return node({Op::Slot, {}, existing_slot(n.name)});
          } else if constexpr (std::is_same_v<T, expr::Num>) {
            return node({Op::Const, {}, n.value});
          } else if constexpr (std::is_same_v<T, expr::Reg>) {
            if (n.mode) return node({Op::RegMode, {}, 0, expr(n.index), expr(n.mode)});
            return node({Op::Reg, {}, 0, expr(n.index)});
          } else if constexpr (std::is_same_v<T, expr::Binary>) {
            return node({Op::Bin, n.op, 0, expr(n.lhs), expr(n.rhs)});
          } else if constexpr (std::is_same_v<T, expr::Unary>) {
            return node({n.op == UnaryOp::LogNot ? Op::Not : Op::BitNot, {}, 0, expr(n.operand)});
          } else if constexpr (std::is_same_v<T, expr::Call>) {
            if (n.name == "ConditionPassed") return node({Op::CondPassed, {}, 0, expr(n.args[0])});
            if (n.name == "CurrentModeHasSPSR") return node({Op::HasSpsr});
            if (n.name == "InAPrivilegedMode") return node({Op::Privileged});
            if (n.name == "address_of_next_instruction") return node({Op::NextAddr});
            if (n.name == "address_of_current_instruction") return node({Op::CurAddr});
            auto it = builtin_ids().find(n.name);
            if (it == builtin_ids().end())
              throw Error("in " + flat_.name + ": no interpreter support for " + n.name);
            Program::Node c{Op::Builtin, {}, it->second};
            if (n.args.size() > 0) c.a = expr(n.args[0]);
            if (n.args.size() > 1) c.b = expr(n.args[1]);
            if (n.args.size() > 2) c.c = expr(n.args[2]);
            return node(c);
          } else if constexpr (std::is_same_v<T, expr::BitRange>) {
            if (!n.lo) return node({Op::Bit, {}, 0, expr(n.base), expr(n.hi)});
            return node({Op::Bits, {}, 0, expr(n.base), expr(n.hi), expr(n.lo)});
          } else if constexpr (std::is_same_v<T, expr::FlagRef>) {
            return node({Op::Flag, {}, flag_bit(n.flag)});
          } else if constexpr (std::is_same_v<T, expr::Memory>) {
            return node({Op::Mem, {}, n.size, expr(n.address)});
          } else {
            return node({n.which == Psr::Cpsr ? Op::Cpsr : Op::Spsr});
          }
        },
        e->node);
  }

  void target(const ExprPtr& lhs, Program::Stm& s) {
    if (auto* v = lhs->as<expr::Var>()) {
      if (flat_.param_index(v->name) >= 0)
        throw Error("in " + flat_.name + ": assignment to parameter " + v->name);
      s.target = Program::Target::Slot;
      s.imm = slot(v->name);
    } else if (auto* r = lhs->as<expr::Reg>()) {
      s.target = r->mode ? Program::Target::RegMode : Program::Target::Reg;
      s.t1 = expr(r->index);
      if (r->mode) s.t2 = expr(r->mode);
    } else if (auto* f = lhs->as<expr::FlagRef>()) {
      s.target = Program::Target::Flag;
      s.imm = flag_bit(f->flag);
    } else if (auto* m = lhs->as<expr::Memory>()) {
      s.target = Program::Target::Mem;
      s.imm = m->size;
      s.t1 = expr(m->address);
    } else if (auto* p = lhs->as<expr::StatusReg>()) {
      s.target = p->which == Psr::Cpsr ? Program::Target::Cpsr : Program::Target::Spsr;
    } else if (auto* b = lhs->as<expr::BitRange>()) {
      s.t2 = expr(b->hi);
      s.t3 = b->lo ? expr(b->lo) : s.t2;
      if (auto* v = b->base->as<expr::Var>()) {
        s.target = Program::Target::SlotBits;
        s.imm = slot(v->name);
      } else if (auto* r = b->base->as<expr::Reg>(); r && !r->mode) {
        s.target = Program::Target::RegBits;
        s.t1 = expr(r->index);
      } else {
        throw Error("in " + flat_.name + ": unsupported bit-range target " + to_string(lhs));
      }
    } else {
      throw Error("in " + flat_.name + ": unsupported assignment target " + to_string(lhs));
    }
  }

  std::vector<Program::Stm> block(const Block& b) {
    std::vector<Program::Stm> out;
    for (const auto& st : b) {
      Program::Stm s{};
      if (auto* a = st->as<stmt::Assign>()) {
        s.kind = Program::Kind::Assign;
        s.e = expr(a->rhs);
        target(a->lhs, s);
      } else if (auto* i = st->as<stmt::If>()) {
        s.kind = Program::Kind::If;
        s.e = expr(i->cond);
        s.body = block(i->then_block);
        s.else_body = block(i->else_block);
      } else if (auto* f = st->as<stmt::For>()) {
        s.kind = Program::Kind::For;
        s.t1 = static_cast<int>(slot(f->var));
        s.imm = f->first;
        s.last = f->last;
        s.body = block(f->body);
      } else if (auto* q = st->as<stmt::Seq>()) {
        auto inner = block(q->body);
        for (auto& x : inner) out.push_back(std::move(x));
        continue;
      } else if (auto* c = st->as<stmt::Call>()) {
        if (c->name != "Halt") throw Error("in " + flat_.name + ": unknown procedure " + c->name);
        s.kind = Program::Kind::Halt;
      } else if (st->is<stmt::Unpredictable>()) {
        s.kind = Program::Kind::Unpredictable;
      } else {
        continue;  // Nop
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  const FlatInstruction& flat_;
  Program& p_;
  std::map<std::string, uint32_t> slots_;
};

uint32_t apply_bin(BinaryOp op, uint32_t a, uint32_t b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::BitAnd: return a & b;
    case BinaryOp::BitOr: return a | b;
    case BinaryOp::BitXor: return a ^ b;
    case BinaryOp::Eq: return a == b;
    case BinaryOp::Ne: return a != b;
    case BinaryOp::Lt: return a < b;
    case BinaryOp::Le: return a <= b;
    case BinaryOp::Gt: return a > b;
    case BinaryOp::Ge: return a >= b;
    case BinaryOp::LogAnd: return a != 0 && b != 0;
    case BinaryOp::LogOr: return a != 0 || b != 0;
  }
  return 0;
}

class Machine {
 public:
  Machine(const Program& p, rt::CpuState& s, uint32_t* slots) : p_(p), s_(s), slots_(slots) {}

  uint32_t eval(int i) {
    const Program::Node& n = p_.nodes[static_cast<size_t>(i)];
    switch (n.op) {
      case Op::Const: return n.imm;
      case Op::Slot: return slots_[n.imm];
      case Op::Reg: return s_.reg(eval(n.a));
      case Op::RegMode: {
        const uint32_t idx = eval(n.a);
        return s_.reg_mode(idx, eval(n.b));
      }
      case Op::Bin: {
        const uint32_t l = eval(n.a);
        if (n.bin == BinaryOp::LogAnd && l == 0) return 0;
        if (n.bin == BinaryOp::LogOr && l != 0) return 1;
        return apply_bin(n.bin, l, eval(n.b));
      }
      case Op::Not: return eval(n.a) == 0;
      case Op::BitNot: return ~eval(n.a);
      case Op::Bit: {
        const uint32_t base = eval(n.a);
        return rt::bit(base, eval(n.b));
      }
      case Op::Bits: {
        const uint32_t base = eval(n.a);
        const uint32_t hi = eval(n.b);
        return rt::bits(base, hi, eval(n.c));
      }
      case Op::Flag: return s_.flag(static_cast<rt::FlagBit>(n.imm));
      case Op::Mem: return s_.mem_read(eval(n.a), n.imm);
      case Op::Cpsr: return s_.cpsr();
      case Op::Spsr: return s_.spsr();
      case Op::CondPassed: return s_.condition_passed(eval(n.a));
      case Op::HasSpsr: return s_.current_mode_has_spsr();
      case Op::Privileged: return s_.in_privileged_mode();
      case Op::NextAddr: return s_.address_of_next_instruction();
      case Op::CurAddr: return s_.address_of_current_instruction();
      case Op::Builtin: return builtin(n);
    }
    return 0;
  }

  void exec(const std::vector<Program::Stm>& code) {
    for (const auto& s : code) {
      switch (s.kind) {
        case Program::Kind::Assign: assign(s); break;
        case Program::Kind::If:
          if (eval(s.e) != 0)
            exec(s.body);
          else
            exec(s.else_body);
          break;
        case Program::Kind::For:
          for (uint32_t i = s.imm; i <= s.last; ++i) {
            slots_[s.t1] = i;
            exec(s.body);
          }
          break;
        case Program::Kind::Halt: s_.halt(); break;
        case Program::Kind::Unpredictable: s_.unpredictable();
      }
    }
  }

 private:
  uint32_t builtin(const Program::Node& n) {
    using namespace rt;
    const uint32_t a = n.a >= 0 ? eval(n.a) : 0;
    const uint32_t b = n.b >= 0 ? eval(n.b) : 0;
    const uint32_t c = n.c >= 0 ? eval(n.c) : 0;
    switch (n.imm) {
      case kNbOfSetBitsIn: return NbOfSetBitsIn(a);
      case kSignExtend: return SignExtend(a, b);
      case kLsl: return Logical_Shift_Left(a, b);
      case kLsr: return Logical_Shift_Right(a, b);
      case kAsr: return Arithmetic_Shift_Right(a, b);
      case kRor: return Rotate_Right(a, b);
      case kCarryAdd2: return CarryFromAdd2(a, b);
      case kCarryAdd3: return CarryFromAdd3(a, b, c);
      case kBorrowSub2: return BorrowFromSub2(a, b);
      case kBorrowSub3: return BorrowFromSub3(a, b, c);
      case kOvfAdd2: return OverflowFromAdd2(a, b);
      case kOvfAdd3: return OverflowFromAdd3(a, b, c);
      case kOvfSub2: return OverflowFromSub2(a, b);
      case kOvfSub3: return OverflowFromSub3(a, b, c);
      case kSatAdd2: return SignedSatAdd2(a, b, c);
      case kSatSub2: return SignedSatSub2(a, b, c);
    }
    return 0;
  }

  void assign(const Program::Stm& s) {
    switch (s.target) {
      case Program::Target::Slot: slots_[s.imm] = eval(s.e); break;
      case Program::Target::Reg: {
        const uint32_t idx = eval(s.t1);
        s_.set_reg(idx, eval(s.e));
        break;
      }
      case Program::Target::RegMode: {
        const uint32_t idx = eval(s.t1);
        const uint32_t mode = eval(s.t2);
        s_.set_reg_mode(idx, mode, eval(s.e));
        break;
      }
      case Program::Target::Flag: s_.set_flag(static_cast<rt::FlagBit>(s.imm), eval(s.e)); break;
      case Program::Target::Mem: {
        const uint32_t addr = eval(s.t1);
        s_.mem_write(addr, s.imm, eval(s.e));
        break;
      }
      case Program::Target::Cpsr: s_.set_cpsr(eval(s.e)); break;
      case Program::Target::Spsr: s_.set_spsr(eval(s.e)); break;
      case Program::Target::SlotBits: {
        const uint32_t hi = eval(s.t2), lo = eval(s.t3);
        slots_[s.imm] = rt::insert_bits(slots_[s.imm], hi, lo, eval(s.e));
        break;
      }
      case Program::Target::RegBits: {
        const uint32_t idx = eval(s.t1);
        const uint32_t hi = eval(s.t2), lo = eval(s.t3);
        s_.set_reg(idx, rt::insert_bits(s_.reg(idx), hi, lo, eval(s.e)));
        break;
      }
    }
  }

  const Program& p_;
  rt::CpuState& s_;
  uint32_t* slots_;
};

}  // namespace

Interpreter::Interpreter(std::vector<FlatInstruction> flats)
    : flats_(std::move(flats)), decoder_(DecoderSpec::build(flats_)) {
  for (const auto& f : flats_) {
    if (f.params.size() > rt::kMaxParams)
      throw Error("in " + f.name + ": more than " + std::to_string(rt::kMaxParams) + " parameters");
    auto p = std::make_unique<Program>();
    Compiler(f, *p).run();
    programs_.push_back(std::move(p));
  }
}

Interpreter::~Interpreter() = default;
Interpreter::Interpreter(Interpreter&&) noexcept = default;

rt::DecodeStatus Interpreter::decode(uint32_t word, uint32_t addr, rt::DecodedInstr& out) const {
  DecoderSpec::Match m = decoder_.decode(flats_, word);
  if (m.status != rt::DecodeStatus::Ok) return m.status;
  const FlatInstruction& f = flats_[m.flat];
  out = rt::DecodedInstr{};
  out.id = static_cast<uint32_t>(m.flat);
  out.word = word;
  out.addr = addr;
  for (size_t i = 0; i < f.params.size(); ++i) out.params[i] = m.env.at(f.params[i].name);
  auto mb = f.may_branch ? evaluate(f.may_branch, m.env) : std::optional<uint32_t>(1);
  out.is_terminator = !mb || *mb != 0;
  return rt::DecodeStatus::Ok;
}

void Interpreter::execute(rt::CpuState& s, const rt::DecodedInstr& di) const {
  const Program& p = *programs_[di.id];
  uint32_t slots[64] = {};
  std::vector<uint32_t> big;
  uint32_t* sl = slots;
  if (p.num_slots > 64) {
    big.assign(p.num_slots, 0);
    sl = big.data();
  }
  for (size_t i = 0; i < p.num_params; ++i) sl[i] = di.params[i];
  Machine(p, s, sl).exec(p.code);
}

std::string Interpreter::disassemble(uint32_t word) const {
  DecoderSpec::Match m = decoder_.decode(flats_, word);
  if (m.status != rt::DecodeStatus::Ok) return std::string("<") + rt::to_string(m.status) + ">";
  return print_asm(flats_[m.flat], word);
}

}  // namespace issforge
