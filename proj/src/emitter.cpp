#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <type_traits>

#include "issforge/error.hpp"
#include "issforge/ir.hpp"
#include "issforge/sim.hpp"
#include "issforge/simgen.hpp"

namespace issforge {

namespace {

const std::set<std::string>& cpp_keywords() {
  static const std::set<std::string> k = {
      "alignas", "alignof", "and", "asm", "auto", "bool", "break", "case", "catch", "char",
      "class", "const", "continue", "default", "delete", "do", "double", "else", "enum",
      "explicit", "export", "extern", "false", "float", "for", "friend", "goto", "if", "inline",
      "int", "long", "mutable", "namespace", "new", "not", "operator", "or", "private",
      "protected", "public", "register", "return", "short", "signed", "sizeof", "static",
      "struct", "switch", "template", "this", "throw", "true", "try", "typedef", "typename",
      "union", "unsigned", "using", "virtual", "void", "volatile", "while", "xor"};
  return k;
}

std::string hex(uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::uppercase << v << "u";
  return os.str();
}

std::string literal(uint32_t v) { return v < 10 ? std::to_string(v) + "u" : hex(v); }

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

const char* flag_const(Flag f) {
  switch (f) {
    case Flag::N: return "rt::kN";
    case Flag::Z: return "rt::kZ";
    case Flag::C: return "rt::kC";
    case Flag::V: return "rt::kV";
  }
  return "rt::kN";
}

const char* compare_fn(BinaryOp op) {
  switch (op) {
    case BinaryOp::Eq: return "rt::eq";
    case BinaryOp::Ne: return "rt::ne";
    case BinaryOp::Lt: return "rt::lt";
    case BinaryOp::Le: return "rt::le";
    case BinaryOp::Gt: return "rt::gt";
    case BinaryOp::Ge: return "rt::ge";
    default: return nullptr;
  }
}

const char* arith_op(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::BitAnd: return "&";
    case BinaryOp::BitOr: return "|";
    case BinaryOp::BitXor: return "^";
    default: return nullptr;
  }
}

// Translates expressions; `state` is false in decoder context where only
// fields and pure builtins may appear.
class ExprWriter {
 public:
  using Resolve = std::function<std::string(const std::string&)>;
  ExprWriter(std::string unit, Resolve resolve, bool state)
      : unit_(std::move(unit)), resolve_(std::move(resolve)), state_(state) {}

  std::string operator()(const ExprPtr& e) const {
    return std::visit([&](const auto& n) { return write(n, e); }, e->node);
  }

 private:
  [[noreturn]] void unsupported(const ExprPtr& e) const {
    throw Error("in " + unit_ + ": no translation for " + to_string(e));
  }

  void need_state(const ExprPtr& e) const {
    if (!state_) unsupported(e);
  }

  std::string write(const expr::Var& v, const ExprPtr&) const { return resolve_(v.name); }
  std::string write(const expr::Num& n, const ExprPtr&) const { return literal(n.value); }

  std::string write(const expr::Reg& r, const ExprPtr& e) const {
    need_state(e);
    if (r.mode) return "s.reg_mode(" + (*this)(r.index) + ", " + (*this)(r.mode) + ")";
    return "s.reg(" + (*this)(r.index) + ")";
  }

  std::string write(const expr::Binary& b, const ExprPtr&) const {
    const std::string l = (*this)(b.lhs), r = (*this)(b.rhs);
    if (const char* f = compare_fn(b.op)) return std::string(f) + "(" + l + ", " + r + ")";
    if (b.op == BinaryOp::LogAnd) return "uint32_t((" + l + ") != 0u && (" + r + ") != 0u)";
    if (b.op == BinaryOp::LogOr) return "uint32_t((" + l + ") != 0u || (" + r + ") != 0u)";
    return "uint32_t(" + l + " " + arith_op(b.op) + " " + r + ")";
  }

  std::string write(const expr::Unary& u, const ExprPtr&) const {
    if (u.op == UnaryOp::LogNot) return "uint32_t((" + (*this)(u.operand) + ") == 0u)";
    return "uint32_t(~" + (*this)(u.operand) + ")";
  }

  std::string write(const expr::Call& c, const ExprPtr& e) const {
    const BuiltinInfo* b = find_builtin(c.name);
    if (!b) unsupported(e);
    if (b->kind == BuiltinInfo::Kind::State) {
      need_state(e);
      if (c.name == "ConditionPassed") return "uint32_t(s.condition_passed(" + (*this)(c.args[0]) + "))";
      if (c.name == "CurrentModeHasSPSR") return "uint32_t(s.current_mode_has_spsr())";
      if (c.name == "InAPrivilegedMode") return "uint32_t(s.in_privileged_mode())";
      if (c.name == "address_of_next_instruction") return "s.address_of_next_instruction()";
      if (c.name == "address_of_current_instruction") return "s.address_of_current_instruction()";
      unsupported(e);
    }
    if (b->kind != BuiltinInfo::Kind::Pure) unsupported(e);
    std::string out = "rt::" + c.name + "(";
    for (size_t i = 0; i < c.args.size(); ++i) out += (i ? ", " : "") + (*this)(c.args[i]);
    return out + ")";
  }

  std::string write(const expr::BitRange& b, const ExprPtr&) const {
    if (!b.lo) return "rt::bit(" + (*this)(b.base) + ", " + (*this)(b.hi) + ")";
    return "rt::bits(" + (*this)(b.base) + ", " + (*this)(b.hi) + ", " + (*this)(b.lo) + ")";
  }

  std::string write(const expr::FlagRef& f, const ExprPtr& e) const {
    need_state(e);
    return std::string("s.flag(") + flag_const(f.flag) + ")";
  }

  std::string write(const expr::Memory& m, const ExprPtr& e) const {
    need_state(e);
    return "s.mem_read(" + (*this)(m.address) + ", " + std::to_string(m.size) + "u)";
  }

  std::string write(const expr::StatusReg& p, const ExprPtr& e) const {
    need_state(e);
    return p.which == Psr::Cpsr ? "s.cpsr()" : "s.spsr()";
  }

  std::string unit_;
  Resolve resolve_;
  bool state_;
};

class Lines {
 public:
  void line(int indent, const std::string& s) { os_ << std::string(static_cast<size_t>(indent) * 2, ' ') << s << '\n'; }
  void blank() { os_ << '\n'; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

// One semantics routine.
class RoutineWriter {
 public:
  RoutineWriter(const FlatInstruction& flat, Lines& out)
      : flat_(flat), out_(out), expr_(flat.name, [this](const std::string& n) { return resolve(n); }, true) {
    for (const auto& p : flat.params) params_.insert(p.name);
  }

  void run(size_t index, const std::string& param_struct) {
    out_.line(0, "// " + flat_.name);
    out_.line(0, "void exec_" + std::to_string(index) + "([[maybe_unused]] rt::CpuState& s, [[maybe_unused]] const rt::DecodedInstr& di) {");
    if (!param_struct.empty()) out_.line(1, "[[maybe_unused]] const " + param_struct + " p = load<" + param_struct + ">(di);");
    const NameUse use = collect_names(flat_.ast);
    std::set<std::string> locals;
    for (const auto* set : {&use.read, &use.assigned, &use.loop_vars})
      for (const auto& n : *set)
        if (!params_.count(n)) locals.insert(n);
    for (const auto& l : locals) out_.line(1, "[[maybe_unused]] uint32_t l_" + l + " = 0;");
    block(flat_.ast, 1);
    out_.line(0, "}");
    out_.blank();
  }

 private:
  std::string resolve(const std::string& n) const { return params_.count(n) ? "p." + n : "l_" + n; }

  void assign(const stmt::Assign& a, int ind) {
    const std::string rhs = expr_(a.rhs);
    const ExprPtr& lhs = a.lhs;
    if (auto* v = lhs->as<expr::Var>()) {
      if (params_.count(v->name)) throw Error("in " + flat_.name + ": assignment to parameter " + v->name);
      out_.line(ind, "l_" + v->name + " = " + rhs + ";");
    } else if (auto* r = lhs->as<expr::Reg>()) {
      if (r->mode)
        out_.line(ind, "s.set_reg_mode(" + expr_(r->index) + ", " + expr_(r->mode) + ", " + rhs + ");");
      else
        out_.line(ind, "s.set_reg(" + expr_(r->index) + ", " + rhs + ");");
    } else if (auto* f = lhs->as<expr::FlagRef>()) {
      out_.line(ind, std::string("s.set_flag(") + flag_const(f->flag) + ", " + rhs + ");");
    } else if (auto* m = lhs->as<expr::Memory>()) {
      out_.line(ind, "s.mem_write(" + expr_(m->address) + ", " + std::to_string(m->size) + "u, " + rhs + ");");
    } else if (auto* p = lhs->as<expr::StatusReg>()) {
      out_.line(ind, std::string(p->which == Psr::Cpsr ? "s.set_cpsr(" : "s.set_spsr(") + rhs + ");");
    } else if (auto* b = lhs->as<expr::BitRange>()) {
      const std::string hi = expr_(b->hi);
      const std::string lo = b->lo ? expr_(b->lo) : hi;
      if (auto* v = b->base->as<expr::Var>()) {
        const std::string x = resolve(v->name);
        out_.line(ind, x + " = rt::insert_bits(" + x + ", " + hi + ", " + lo + ", " + rhs + ");");
      } else if (auto* r = b->base->as<expr::Reg>(); r && !r->mode) {
        out_.line(ind, "{");
        out_.line(ind + 1, "const uint32_t idx = " + expr_(r->index) + ";");
        out_.line(ind + 1, "s.set_reg(idx, rt::insert_bits(s.reg(idx), " + hi + ", " + lo + ", " + rhs + "));");
        out_.line(ind, "}");
      } else {
        throw Error("in " + flat_.name + ": no translation for target " + to_string(lhs));
      }
    } else {
      throw Error("in " + flat_.name + ": no translation for target " + to_string(lhs));
    }
  }

  void block(const Block& b, int ind) {
    for (const auto& st : b) {
      if (auto* a = st->as<stmt::Assign>()) {
        assign(*a, ind);
      } else if (auto* i = st->as<stmt::If>()) {
        out_.line(ind, "if (" + expr_(i->cond) + ") {");
        block(i->then_block, ind + 1);
        if (!i->else_block.empty()) {
          out_.line(ind, "} else {");
          block(i->else_block, ind + 1);
        }
        out_.line(ind, "}");
      } else if (auto* f = st->as<stmt::For>()) {
        const std::string v = "l_" + f->var;
        out_.line(ind, "for (" + v + " = " + literal(f->first) + "; " + v + " <= " + literal(f->last) +
                           "; ++" + v + ") {");
        block(f->body, ind + 1);
        out_.line(ind, "}");
      } else if (auto* q = st->as<stmt::Seq>()) {
        block(q->body, ind);
      } else if (auto* c = st->as<stmt::Call>()) {
        if (c->name != "Halt") throw Error("in " + flat_.name + ": no translation for procedure " + c->name);
        out_.line(ind, "s.halt();");
      } else if (st->is<stmt::Unpredictable>()) {
        out_.line(ind, "s.unpredictable();");
      }
    }
  }

  const FlatInstruction& flat_;
  Lines& out_;
  std::set<std::string> params_;
  ExprWriter expr_;
};

std::string param_key(const FlatInstruction& f) {
  std::string k;
  for (const auto& p : f.params) k += p.name + ",";
  return k;
}

const char* asm_kind(rt::AsmElem::Kind k) {
  switch (k) {
    case rt::AsmElem::Literal: return "rt::AsmElem::Literal";
    case rt::AsmElem::Field: return "rt::AsmElem::Field";
    case rt::AsmElem::GroupBegin: return "rt::AsmElem::GroupBegin";
    case rt::AsmElem::GroupEnd: return "rt::AsmElem::GroupEnd";
  }
  return "";
}

const char* asm_format(rt::AsmElem::Format f) {
  switch (f) {
    case rt::AsmElem::Decimal: return "rt::AsmElem::Decimal";
    case rt::AsmElem::Register: return "rt::AsmElem::Register";
    case rt::AsmElem::Cond: return "rt::AsmElem::Cond";
    case rt::AsmElem::Sign: return "rt::AsmElem::Sign";
    case rt::AsmElem::RegList: return "rt::AsmElem::RegList";
  }
  return "";
}

class Emitter {
 public:
  Emitter(const std::vector<FlatInstruction>& flats, const EmitOptions& opt)
      : flats_(flats), opt_(opt), spec_(DecoderSpec::build(flats)) {
    for (const auto& f : flats) {
      if (f.params.size() > rt::kMaxParams)
        throw Error("in " + f.name + ": more than " + std::to_string(rt::kMaxParams) + " parameters");
      for (const auto& p : f.params)
        if (cpp_keywords().count(p.name)) throw Error("in " + f.name + ": parameter name " + p.name + " is reserved");
      const std::string key = param_key(f);
      if (f.params.empty()) {
        struct_of_.push_back("");
        continue;
      }
      auto [it, inserted] = lists_.emplace(key, lists_.size());
      if (inserted) list_params_.push_back(&f.params);
      struct_of_.push_back("P" + std::to_string(it->second));
    }
  }

  GeneratedIss run() {
    GeneratedIss out;
    out.files.push_back({"iss.hpp", iss_hpp()});
    out.files.push_back({"params.hpp", params_hpp()});
    out.files.push_back({"semantics.cpp", semantics_cpp()});
    out.files.push_back({"decoder.cpp", decoder_cpp()});
    out.files.push_back({"printer.cpp", printer_cpp()});
    out.routines = flats_.size();
    out.param_lists = lists_.size();
    return out;
  }

 private:
  static constexpr const char* kBanner = "// Generated by issforge. Do not edit.";

  std::string iss_hpp() const {
    Lines l;
    l.line(0, "#pragma once");
    l.blank();
    l.line(0, kBanner);
    l.blank();
    l.line(0, "#include <cstddef>");
    l.line(0, "#include <cstdint>");
    l.line(0, "#include <string>");
    l.blank();
    l.line(0, "#include \"issforge/runtime/run.hpp\"");
    l.blank();
    l.line(0, "namespace " + opt_.ns + " {");
    l.blank();
    l.line(0, "inline constexpr std::size_t kFlatCount = " + std::to_string(flats_.size()) + ";");
    l.line(0, "inline constexpr std::size_t kParamLists = " + std::to_string(lists_.size()) + ";");
    l.line(0, "inline constexpr uint32_t kAbortVector = " + hex(opt_.abort_vector) + ";");
    l.line(0, "extern const char* const kFlatNames[kFlatCount];");
    l.blank();
    l.line(0, "struct Iss {");
    l.line(1, "issforge::rt::DecodeStatus decode(uint32_t word, uint32_t addr, issforge::rt::DecodedInstr& out) const;");
    l.line(1, "void execute(issforge::rt::CpuState& s, const issforge::rt::DecodedInstr& di) const { di.exec(s, di); }");
    l.line(1, "std::string print(const issforge::rt::DecodedInstr& di) const;");
    l.line(1, "std::string disassemble(uint32_t word) const;");
    l.line(1, "std::size_t flat_count() const { return kFlatCount; }");
    l.line(1, "const char* flat_name(std::size_t i) const { return kFlatNames[i]; }");
    l.line(1, "uint32_t abort_vector() const { return kAbortVector; }");
    l.line(0, "};");
    l.blank();
    l.line(0, "}  // namespace " + opt_.ns);
    return l.str();
  }

  std::string params_hpp() const {
    Lines l;
    l.line(0, "#pragma once");
    l.blank();
    l.line(0, kBanner);
    l.blank();
    l.line(0, "#include <cstring>");
    l.blank();
    l.line(0, "#include \"iss.hpp\"");
    l.blank();
    l.line(0, "namespace " + opt_.ns + " {");
    l.blank();
    l.line(0, "namespace rt = issforge::rt;");
    l.blank();
    for (size_t i = 0; i < list_params_.size(); ++i) {
      l.line(0, "struct P" + std::to_string(i) + " {");
      for (const auto& p : *list_params_[i]) l.line(1, "uint32_t " + p.name + ";");
      l.line(0, "};");
    }
    l.blank();
    l.line(0, "template <class P>");
    l.line(0, "inline P load(const rt::DecodedInstr& di) {");
    l.line(1, "static_assert(sizeof(P) <= sizeof(di.params));");
    l.line(1, "P p;");
    l.line(1, "std::memcpy(&p, di.params.data(), sizeof p);");
    l.line(1, "return p;");
    l.line(0, "}");
    l.blank();
    for (size_t i = 0; i < flats_.size(); ++i)
      l.line(0, "void exec_" + std::to_string(i) + "(rt::CpuState& s, const rt::DecodedInstr& di);");
    l.blank();
    l.line(0, "}  // namespace " + opt_.ns);
    return l.str();
  }

  std::string semantics_cpp() const {
    Lines l;
    l.line(0, kBanner);
    l.blank();
    l.line(0, "#include \"params.hpp\"");
    l.line(0, "#include \"issforge/runtime/builtins.hpp\"");
    l.blank();
    l.line(0, "namespace " + opt_.ns + " {");
    l.blank();
    for (size_t i = 0; i < flats_.size(); ++i) RoutineWriter(flats_[i], l).run(i, struct_of_[i]);
    l.line(0, "}  // namespace " + opt_.ns);
    return l.str();
  }

  // Emits the body that fills `out` for flat `fi` from the f_ variables.
  void fill(Lines& l, int ind, size_t fi) const {
    const FlatInstruction& f = flats_[fi];
    ExprWriter ex(f.name, [](const std::string& n) { return "f_" + n; }, false);
    l.line(ind, "out.id = " + std::to_string(fi) + ";");
    l.line(ind, "out.exec = &exec_" + std::to_string(fi) + ";");
    l.line(ind, "out.word = word;");
    l.line(ind, "out.addr = addr;");
    std::string ps;
    for (size_t i = 0; i < f.params.size(); ++i) ps += (i ? ", " : "") + std::string("f_") + f.params[i].name;
    l.line(ind, "out.params = {" + ps + "};");
    l.line(ind, "out.is_terminator = " + (f.may_branch ? "(" + ex(f.may_branch) + ") != 0u" : std::string("true")) + ";");
    l.line(ind, "return kOk;");
  }

  void candidate(Lines& l, size_t ci) const {
    const DecoderCandidate& c = spec_.candidates[ci];
    const FlatInstruction& g = flats_[c.generic];
    ExprWriter ex(g.name, [](const std::string& n) { return "f_" + n; }, false);
    l.line(0, "// " + g.name);
    l.line(0, "int try_" + std::to_string(ci) + "(uint32_t word, uint32_t addr, rt::DecodedInstr& out) {");
    l.line(1, "if ((word & " + hex(c.mask) + ") != " + hex(c.value) + ") return kNoMatch;");
    std::set<std::string> env;
    for (const auto& [name, v] : g.fixed) {
      if (!env.insert(param_name(name)).second) continue;
      l.line(1, "[[maybe_unused]] const uint32_t f_" + param_name(name) + " = " + literal(v) + ";");
    }
    for (const auto& fld : g.encoding.fields) {
      if (fld.is_constant) continue;
      env.insert(param_name(fld.content));
      l.line(1, "[[maybe_unused]] const uint32_t f_" + param_name(fld.content) + " = rt::bits(word, " +
                    std::to_string(fld.hi) + ", " + std::to_string(fld.lo) + ");");
    }
    for (const auto& k : g.constraints) {
      const std::string a = "f_" + param_name(k.param_a);
      std::string bad;
      switch (k.kind) {
        case ValidityConstraint::Kind::NotEqualValue: bad = a + " == " + literal(k.values.at(0)); break;
        case ValidityConstraint::Kind::ParamsDiffer: bad = a + " == f_" + param_name(k.param_b); break;
        case ValidityConstraint::Kind::NotIn:
          for (size_t i = 0; i < k.values.size(); ++i) bad += (i ? " || " : "") + a + " == " + literal(k.values[i]);
          break;
      }
      l.line(1, "if (" + bad + ") return kUnpredictable;  // " + to_string(k));
    }
    for (const auto& r : g.decode_rules) {
      env.insert(r.param);
      l.line(1, "[[maybe_unused]] const uint32_t f_" + r.param + " = " + ex(r.expr) + ";");
    }
    auto check_env = [&](size_t fi) {
      for (const auto& p : flats_[fi].params)
        if (!env.count(p.name)) throw Error("in " + flats_[fi].name + ": parameter " + p.name + " is not decoded");
    };
    for (size_t v : c.variants) {
      check_env(v);
      std::string cond;
      for (const auto& [name, value] : flats_[v].selection) {
        if (!env.count(name)) throw Error("in " + flats_[v].name + ": selection on unknown field " + name);
        cond += (cond.empty() ? "" : " && ") + std::string("f_") + name + " == " + literal(value);
      }
      l.line(1, "if (" + cond + ") {  // " + flats_[v].name);
      fill(l, 2, v);
      l.line(1, "}");
    }
    check_env(c.generic);
    fill(l, 1, c.generic);
    l.line(0, "}");
    l.blank();
  }

  std::string decoder_cpp() const {
    Lines l;
    l.line(0, kBanner);
    l.blank();
    l.line(0, "#include \"params.hpp\"");
    l.line(0, "#include \"issforge/runtime/builtins.hpp\"");
    l.blank();
    l.line(0, "namespace " + opt_.ns + " {");
    l.blank();
    l.line(0, "namespace {");
    l.blank();
    l.line(0, "constexpr int kNoMatch = 0;");
    l.line(0, "constexpr int kOk = 1;");
    l.line(0, "constexpr int kUnpredictable = 2;");
    l.blank();
    for (size_t ci = 0; ci < spec_.candidates.size(); ++ci) candidate(l, ci);
    l.line(0, "}  // namespace");
    l.blank();
    l.line(0, "rt::DecodeStatus Iss::decode(uint32_t word, uint32_t addr, rt::DecodedInstr& out) const {");
    l.line(1, "int seen = kNoMatch;");
    l.line(1, "auto step = [&](int r) {");
    l.line(2, "if (r == kUnpredictable) seen = r;");
    l.line(2, "return r == kOk;");
    l.line(1, "};");
    l.line(1, "switch ((word >> " + std::to_string(DecoderSpec::kKeyShift) + ") & 0xFFu) {");
    // Keys with the same candidate list share a case body.
    std::map<std::vector<uint32_t>, std::vector<uint32_t>> groups;
    for (uint32_t key = 0; key < 256; ++key)
      if (!spec_.buckets[key].empty()) groups[spec_.buckets[key]].push_back(key);
    std::vector<std::pair<uint32_t, const std::vector<uint32_t>*>> order;
    for (const auto& [cands, keys] : groups) order.push_back({keys.front(), &cands});
    std::sort(order.begin(), order.end());
    for (const auto& [first, cands] : order) {
      std::string labels;
      for (uint32_t k : groups.at(*cands)) labels += (labels.empty() ? "" : " ") + std::string("case ") + hex(k) + ":";
      l.line(1, labels);
      for (uint32_t ci : *cands)
        l.line(2, "if (step(try_" + std::to_string(ci) + "(word, addr, out))) return rt::DecodeStatus::Ok;");
      l.line(2, "break;");
    }
    l.line(1, "default:");
    l.line(2, "break;");
    l.line(1, "}");
    l.line(1, "return seen == kUnpredictable ? rt::DecodeStatus::Unpredictable : rt::DecodeStatus::Undefined;");
    l.line(0, "}");
    l.blank();
    l.line(0, "}  // namespace " + opt_.ns);
    return l.str();
  }

  std::string printer_cpp() const {
    Lines l;
    l.line(0, kBanner);
    l.blank();
    l.line(0, "#include \"params.hpp\"");
    l.line(0, "#include \"issforge/runtime/asm.hpp\"");
    l.blank();
    l.line(0, "namespace " + opt_.ns + " {");
    l.blank();
    l.line(0, "const char* const kFlatNames[kFlatCount] = {");
    for (const auto& f : flats_) l.line(1, quote(f.name) + ",");
    l.line(0, "};");
    l.blank();
    l.line(0, "namespace {");
    l.blank();
    l.line(0, "struct AsmEntry {");
    l.line(1, "const rt::AsmElem* elems;");
    l.line(1, "std::size_t size;");
    l.line(0, "};");
    l.blank();
    std::vector<size_t> sizes;
    for (size_t i = 0; i < flats_.size(); ++i) {
      const AsmProgram p = compile_syntax(flats_[i]);
      sizes.push_back(p.elems.size());
      l.line(0, "// " + flats_[i].name);
      l.line(0, "const rt::AsmElem asm_" + std::to_string(i) + "[] = {");
      for (const auto& e : p.elems)
        l.line(1, std::string("{") + asm_kind(e.kind) + ", " + asm_format(e.format) + ", " + quote(e.text) + ", " +
                      std::to_string(e.hi) + ", " + std::to_string(e.lo) + ", " + (e.fixed ? "true" : "false") +
                      ", " + literal(e.value) + ", " + std::to_string(e.end) + "},");
      if (p.elems.empty()) l.line(1, "{},");
      l.line(0, "};");
    }
    l.blank();
    l.line(0, "const AsmEntry kAsm[kFlatCount] = {");
    for (size_t i = 0; i < flats_.size(); ++i)
      l.line(1, "{asm_" + std::to_string(i) + ", " + std::to_string(sizes[i]) + "},");
    l.line(0, "};");
    l.blank();
    l.line(0, "}  // namespace");
    l.blank();
    l.line(0, "std::string Iss::print(const rt::DecodedInstr& di) const {");
    l.line(1, "return rt::render_word(kAsm[di.id].elems, kAsm[di.id].size, di.word);");
    l.line(0, "}");
    l.blank();
    l.line(0, "std::string Iss::disassemble(uint32_t word) const {");
    l.line(1, "rt::DecodedInstr di;");
    l.line(1, "const rt::DecodeStatus st = decode(word, 0, di);");
    l.line(1, "if (st != rt::DecodeStatus::Ok) return std::string(\"<\") + rt::to_string(st) + \">\";");
    l.line(1, "return print(di);");
    l.line(0, "}");
    l.blank();
    l.line(0, "}  // namespace " + opt_.ns);
    return l.str();
  }

  const std::vector<FlatInstruction>& flats_;
  EmitOptions opt_;
  DecoderSpec spec_;
  std::map<std::string, size_t> lists_;
  std::vector<const std::vector<Param>*> list_params_;
  std::vector<std::string> struct_of_;
};

}  // namespace

GeneratedIss emit_iss(const std::vector<FlatInstruction>& flats, const EmitOptions& options) {
  return Emitter(flats, options).run();
}

void write_iss(const GeneratedIss& iss, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : iss.files) {
    const auto path = dir / f.name;
    {
      std::ifstream in(path, std::ios::binary);
      if (in) {
        std::ostringstream old;
        old << in.rdbuf();
        if (old.str() == f.text) continue;
      }
    }
    std::ofstream out(path, std::ios::binary);
    out << f.text;
    if (!out) throw Error("cannot write " + path.string());
  }
}

}  // namespace issforge
