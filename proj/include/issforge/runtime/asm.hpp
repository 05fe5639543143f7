#pragma once

// Assembly rendering from a compiled syntax template.

#include <cstdint>
#include <string>

#include "issforge/runtime/builtins.hpp"

namespace issforge::rt {

struct AsmElem {
  enum Kind : uint8_t { Literal, Field, GroupBegin, GroupEnd };
  enum Format : uint8_t { Decimal, Register, Cond, Sign, RegList };

  Kind kind = Literal;
  Format format = Decimal;
  const char* text = "";  // literal text, or the field name
  // Field location in the word, or a fixed value.
  uint8_t hi = 0;
  uint8_t lo = 0;
  bool fixed = false;
  uint32_t value = 0;
  uint16_t end = 0;  // GroupBegin: index of the matching GroupEnd
};

inline const char* cond_name(uint32_t c) {
  static const char* const names[16] = {"EQ", "NE", "CS", "CC", "MI", "PL", "VS", "VC",
                                        "HI", "LS", "GE", "LT", "GT", "LE", "AL", "NV"};
  return names[c & 15];
}

inline void format_field(AsmElem::Format f, uint32_t v, std::string& out) {
  switch (f) {
    case AsmElem::Decimal: out += std::to_string(v); break;
    case AsmElem::Register: out += 'R'; out += std::to_string(v); break;
    case AsmElem::Cond: out += cond_name(v); break;
    case AsmElem::Sign: out += v ? '+' : '-'; break;
    case AsmElem::RegList: {
      out += '{';
      bool first = true;
      for (uint32_t i = 0; i < 16; ++i) {
        if (!((v >> i) & 1u)) continue;
        if (!first) out += ',';
        out += 'R';
        out += std::to_string(i);
        first = false;
      }
      out += '}';
      break;
    }
  }
}

// An optional group is printed when its controlling field is non-zero, or
// for a condition field when it is not AL.
inline bool group_present(AsmElem::Format f, uint32_t v) { return f == AsmElem::Cond ? v != 14 : v != 0; }

// `get(elem)` yields the value of a Field or GroupBegin element.
template <class Get>
void render(const AsmElem* elems, size_t n, Get&& get, std::string& out) {
  for (size_t i = 0; i < n; ++i) {
    const AsmElem& e = elems[i];
    switch (e.kind) {
      case AsmElem::Literal: out += e.text; break;
      case AsmElem::Field: format_field(e.format, get(e), out); break;
      case AsmElem::GroupBegin:
        if (!group_present(e.format, get(e))) i = e.end;
        break;
      case AsmElem::GroupEnd: break;
    }
  }
}

inline uint32_t field_from_word(const AsmElem& e, uint32_t word) {
  return e.fixed ? e.value : bits(word, e.hi, e.lo);
}

inline std::string render_word(const AsmElem* elems, size_t n, uint32_t word) {
  std::string out;
  render(elems, n, [word](const AsmElem& e) { return field_from_word(e, word); }, out);
  return out;
}

}  // namespace issforge::rt
