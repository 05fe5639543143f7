#include "issforge/isa.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "issforge/error.hpp"

namespace issforge {

ParseError::ParseError(std::string file, int line, int column, std::string unit,
                       std::string message)
    : Error([&] {
        std::ostringstream os;
        os << file;
        if (line > 0) os << ':' << line;
        if (column > 0) os << ':' << column;
        os << ": ";
        if (!unit.empty()) os << "in " << unit << ": ";
        os << message;
        return os.str();
      }()),
      file_(std::move(file)),
      line_(line),
      column_(column),
      unit_(std::move(unit)),
      message_(std::move(message)) {}

// ------------------------------------------------------------------ encoding

uint32_t EncodingTable::mask() const {
  uint32_t m = 0;
  for (const auto& f : fields) {
    if (!f.is_constant) continue;
    for (unsigned b = f.lo; b <= f.hi; ++b) m |= 1u << b;
  }
  return m;
}

uint32_t EncodingTable::value() const {
  uint32_t v = 0;
  for (const auto& f : fields) {
    if (!f.is_constant) continue;
    for (unsigned i = 0; i < f.width(); ++i)
      if (f.content[i] == '1') v |= 1u << (f.hi - i);
  }
  return v;
}

const EncodingField* EncodingTable::find(const std::string& param) const {
  for (const auto& f : fields)
    if (!f.is_constant && f.content == param) return &f;
  return nullptr;
}

std::vector<std::string> EncodingTable::param_names() const {
  std::vector<std::string> out;
  for (const auto& f : fields)
    if (!f.is_constant) out.push_back(f.content);
  return out;
}

uint32_t EncodingTable::extract(const std::string& param, uint32_t word) const {
  const EncodingField* f = find(param);
  if (!f) throw Error("no encoding field " + param);
  const unsigned w = f->width();
  const uint32_t m = w == 32 ? 0xFFFFFFFFu : ((1u << w) - 1);
  return (word >> f->lo) & m;
}

uint32_t EncodingTable::encode(const std::map<std::string, uint32_t>& values) const {
  uint32_t word = value();
  for (const auto& f : fields) {
    if (f.is_constant) continue;
    auto it = values.find(f.content);
    if (it == values.end()) continue;
    const unsigned w = f.width();
    const uint32_t m = w == 32 ? 0xFFFFFFFFu : ((1u << w) - 1);
    word |= (it->second & m) << f.lo;
  }
  return word;
}

std::string to_string(const EncodingTable& table) {
  std::ostringstream os;
  for (size_t i = 0; i < table.fields.size(); ++i) {
    const auto& f = table.fields[i];
    if (i) os << " | ";
    if (f.hi == f.lo)
      os << f.hi;
    else
      os << f.hi << ".." << f.lo;
    os << ' ' << f.content;
  }
  return os.str();
}

void check_encoding(const EncodingTable& table, const std::string& unit) {
  int next = 31;
  std::set<std::string> names;
  for (const auto& f : table.fields) {
    if (f.hi < f.lo) throw Error(unit + ": field " + f.content + " has hi < lo");
    if (static_cast<int>(f.hi) > next) {
      throw Error(unit + ": bits " + std::to_string(f.hi) + ".." + std::to_string(next + 1) +
                  " overlap");
    }
    if (static_cast<int>(f.hi) < next) {
      throw Error(unit + ": bit " + std::to_string(next) + " uncovered");
    }
    if (f.is_constant) {
      if (f.content.size() != f.width())
        throw Error(unit + ": constant " + f.content + " does not match width " +
                    std::to_string(f.width()));
      if (f.content.find_first_not_of("01") != std::string::npos)
        throw Error(unit + ": non-binary constant " + f.content);
    } else if (!names.insert(f.content).second) {
      throw Error(unit + ": duplicate parameter " + f.content);
    }
    next = static_cast<int>(f.lo) - 1;
  }
  if (next >= 0) throw Error(unit + ": bit " + std::to_string(next) + " uncovered");
}

// ------------------------------------------------------------------ syntax

static void print_elements(std::ostream& os, const std::vector<SyntaxElement>& elems) {
  for (const auto& e : elems) {
    switch (e.kind) {
      case SyntaxElement::Kind::Literal:
        os << e.text;
        break;
      case SyntaxElement::Kind::Placeholder:
        os << '<' << e.text << '>';
        break;
      case SyntaxElement::Kind::Optional: {
        os << '{';
        print_elements(os, e.group);
        const bool implicit =
            e.group.size() == 1 &&
            ((e.group[0].kind == SyntaxElement::Kind::Placeholder &&
              e.group[0].text == e.control) ||
             (e.group[0].kind == SyntaxElement::Kind::Literal && e.group[0].text == e.control));
        if (!implicit) os << '|' << e.control;
        os << '}';
        break;
      }
    }
  }
}

std::string to_string(const SyntaxTemplate& t) {
  std::ostringstream os;
  os << t.mnemonic;
  print_elements(os, t.elements);
  return os.str();
}

static void collect_placeholders(const std::vector<SyntaxElement>& elems,
                                 std::vector<std::string>& out) {
  for (const auto& e : elems) {
    if (e.kind == SyntaxElement::Kind::Placeholder) out.push_back(e.text);
    if (e.kind == SyntaxElement::Kind::Optional) collect_placeholders(e.group, out);
  }
}

std::vector<std::string> placeholders(const SyntaxTemplate& t) {
  std::vector<std::string> out;
  collect_placeholders(t.elements, out);
  return out;
}

// ------------------------------------------------------------------ constraints

bool ValidityConstraint::holds(uint32_t a, uint32_t b) const {
  switch (kind) {
    case Kind::NotEqualValue: return a != values.at(0);
    case Kind::ParamsDiffer: return a != b;
    case Kind::NotIn: return std::find(values.begin(), values.end(), a) == values.end();
  }
  return true;
}

std::string to_string(const ValidityConstraint& c) {
  std::ostringstream os;
  os << c.subject << ": " << c.param_a;
  switch (c.kind) {
    case ValidityConstraint::Kind::NotEqualValue:
      os << " != " << c.values.at(0);
      break;
    case ValidityConstraint::Kind::ParamsDiffer:
      os << " != " << c.param_b;
      break;
    case ValidityConstraint::Kind::NotIn:
      os << " notin {";
      for (size_t i = 0; i < c.values.size(); ++i) os << (i ? ", " : "") << c.values[i];
      os << '}';
      break;
  }
  return os.str();
}

// ------------------------------------------------------------------ builtins

const std::vector<BuiltinInfo>& builtins() {
  using K = BuiltinInfo::Kind;
  static const std::vector<BuiltinInfo> table = {
      {"ConditionPassed", 1, K::State},
      {"CurrentModeHasSPSR", 0, K::State},
      {"InAPrivilegedMode", 0, K::State},
      {"address_of_next_instruction", 0, K::State},
      {"address_of_current_instruction", 0, K::State},
      {"NbOfSetBitsIn", 1, K::Pure},
      {"SignExtend", 2, K::Pure},
      {"Logical_Shift_Left", 2, K::Pure},
      {"Logical_Shift_Right", 2, K::Pure},
      {"Arithmetic_Shift_Right", 2, K::Pure},
      {"Rotate_Right", 2, K::Pure},
      {"CarryFrom", 1, K::Symbolic},
      {"BorrowFrom", 1, K::Symbolic},
      {"OverflowFrom", 1, K::Symbolic},
      {"SignedSat", 2, K::Symbolic},
      {"CarryFromAdd2", 2, K::Pure},
      {"CarryFromAdd3", 3, K::Pure},
      {"BorrowFromSub2", 2, K::Pure},
      {"BorrowFromSub3", 3, K::Pure},
      {"OverflowFromAdd2", 2, K::Pure},
      {"OverflowFromAdd3", 3, K::Pure},
      {"OverflowFromSub2", 2, K::Pure},
      {"OverflowFromSub3", 3, K::Pure},
      {"SignedSatAdd2", 3, K::Pure},
      {"SignedSatSub2", 3, K::Pure},
      {"Halt", 0, K::Statement},
  };
  return table;
}

const BuiltinInfo* find_builtin(const std::string& name) {
  for (const auto& b : builtins())
    if (b.name == name) return &b;
  return nullptr;
}

// ------------------------------------------------------------------ description

const InstrUnit* IsaDescription::find_instruction(const std::string& name) const {
  for (const auto& i : instructions)
    if (i.name == name) return &i;
  return nullptr;
}

const ModeCase* IsaDescription::find_mode(const std::string& name) const {
  for (const auto& m : modes)
    if (m.name == name) return &m;
  return nullptr;
}

std::string dump(const IsaDescription& desc) {
  std::ostringstream os;
  os << "# instructions: " << desc.instructions.size() << ", modes: " << desc.modes.size()
     << ", patches: " << desc.patches.size() << '\n';
  os << "abort_vector " << desc.abort_vector << "\n\n";
  for (const auto& i : desc.instructions) {
    os << "Instruction " << i.name;
    if (i.patch) os << " patch " << *i.patch;
    os << ":\n";
    os << "  encoding: " << to_string(i.encoding) << '\n';
    os << "  syntax: " << to_string(i.syntax) << '\n';
    if (!i.family.empty()) {
      os << "  modes (" << i.family << "):";
      for (const auto& m : i.modes) os << ' ' << m;
      os << '\n';
    }
    for (const auto& c : i.constraints) os << "  constraint " << to_string(c) << '\n';
    os << "  code:\n" << to_string(i.ast, 2) << '\n';
  }
  for (const auto& m : desc.modes) {
    os << "Mode " << m.name << " in " << m.family << ":\n";
    os << "  encoding: " << to_string(m.encoding) << '\n';
    os << "  syntax: " << to_string(m.syntax) << '\n';
    for (const auto& c : m.constraints) os << "  constraint " << to_string(c) << '\n';
    os << "  code:\n" << to_string(m.ast, 2) << '\n';
  }
  for (const auto& [name, p] : desc.patches) {
    os << "Patch " << name << ":\n";
    for (const auto& s : p.steps)
      os << "  replace " << to_string(s.pattern) << " with " << to_string(s.replacement) << '\n';
  }
  return os.str();
}

int FlatInstruction::param_index(const std::string& n) const {
  for (size_t i = 0; i < params.size(); ++i)
    if (params[i].name == n) return static_cast<int>(i);
  return -1;
}

}  // namespace issforge
