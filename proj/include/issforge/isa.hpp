#pragma once

// Linked intermediate representation of an instruction-set description.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "issforge/ast.hpp"

namespace issforge {

// ------------------------------------------------------------------ encoding

struct EncodingField {
  unsigned hi = 0;
  unsigned lo = 0;
  // Either a constant bit-string (only '0'/'1', MSB first) or a parameter name.
  bool is_constant = false;
  std::string content;

  unsigned width() const { return hi - lo + 1; }
  friend bool operator==(const EncodingField&, const EncodingField&) = default;
};

// A 32-bit encoding, fields ordered from bit 31 down to bit 0.
struct EncodingTable {
  static constexpr unsigned kWidth = 32;
  std::vector<EncodingField> fields;

  uint32_t mask() const;
  uint32_t value() const;
  const EncodingField* find(const std::string& param) const;
  bool has_param(const std::string& param) const { return find(param) != nullptr; }
  std::vector<std::string> param_names() const;
  // Field value in `word`; the field must exist.
  uint32_t extract(const std::string& param, uint32_t word) const;
  // Encodes constant fields plus the given parameter values (missing ones are 0).
  uint32_t encode(const std::map<std::string, uint32_t>& values) const;

  friend bool operator==(const EncodingTable&, const EncodingTable&) = default;
};

// Same row syntax the .enc format uses: `31..28 cond | 27..26 00 | ...`.
std::string to_string(const EncodingTable& table);

// Throws Error if fields do not tile bits 31..0 exactly, a constant has a
// non-binary digit, or a parameter name repeats.
void check_encoding(const EncodingTable& table, const std::string& unit);

// ------------------------------------------------------------------ syntax

struct SyntaxElement;

struct SyntaxElement {
  enum class Kind { Literal, Placeholder, Optional };
  Kind kind = Kind::Literal;
  // Literal text, or placeholder name.
  std::string text;
  // Optional group: nested elements and the controlling field.
  std::vector<SyntaxElement> group;
  std::string control;

  friend bool operator==(const SyntaxElement&, const SyntaxElement&) = default;
};

struct SyntaxTemplate {
  std::string mnemonic;
  std::vector<SyntaxElement> elements;

  friend bool operator==(const SyntaxTemplate&, const SyntaxTemplate&) = default;
};

std::string to_string(const SyntaxTemplate& t);
// Placeholder names, including those nested in optional groups.
std::vector<std::string> placeholders(const SyntaxTemplate& t);

// Placeholder `<+/->` renders the U field as a sign.
inline constexpr const char* kSignPlaceholder = "+/-";

// ------------------------------------------------------------------ constraints

struct ValidityConstraint {
  enum class Kind { NotEqualValue, ParamsDiffer, NotIn };
  Kind kind = Kind::NotEqualValue;
  std::string subject;
  // Encoding field names.
  std::string param_a;
  std::string param_b;
  std::vector<uint32_t> values;

  // True when the field values satisfy the constraint.
  bool holds(uint32_t a, uint32_t b = 0) const;
  friend bool operator==(const ValidityConstraint&, const ValidityConstraint&) = default;
};

std::string to_string(const ValidityConstraint& c);

// ------------------------------------------------------------------ builtins

struct BuiltinInfo {
  enum class Kind {
    Pure,      // function of its arguments only
    State,     // reads processor state
    Symbolic,  // takes a symbolic expression; rewritten before code generation
    Statement, // procedure call statement
  };
  std::string name;
  unsigned arity;
  Kind kind;
};

const BuiltinInfo* find_builtin(const std::string& name);
const std::vector<BuiltinInfo>& builtins();

// ------------------------------------------------------------------ units

struct ModeCase {
  std::string name;
  std::string family;  // mode hole this case fills, e.g. shifter_operand
  Ast ast;
  EncodingTable encoding;
  SyntaxTemplate syntax;
  std::vector<ValidityConstraint> constraints;
};

struct InstrUnit {
  std::string name;
  Ast ast;
  EncodingTable encoding;
  SyntaxTemplate syntax;
  std::vector<ValidityConstraint> constraints;
  std::string family;               // mode hole in the syntax; empty if none
  std::vector<std::string> modes;   // mode cases it combines with
  std::optional<std::string> patch;
};

// One step of a mode-variant patch.
struct PatchStep {
  ExprPtr pattern;
  ExprPtr replacement;
};

struct Patch {
  std::string name;
  std::vector<PatchStep> steps;
};

struct IsaDescription {
  std::vector<InstrUnit> instructions;
  std::vector<ModeCase> modes;
  std::map<std::string, Patch> patches;
  uint32_t abort_vector = 0x10;
  std::vector<std::string> warnings;

  const InstrUnit* find_instruction(const std::string& name) const;
  const ModeCase* find_mode(const std::string& name) const;
};

// Human-readable dump of the whole description.
std::string dump(const IsaDescription& desc);

// ------------------------------------------------------------------ flattened

struct Param {
  std::string name;
  unsigned width = 32;
  bool is_signed = false;
  friend bool operator==(const Param&, const Param&) = default;
};

// A parameter computed by the decoder from encoding fields.
struct DecodeRule {
  std::string param;
  ExprPtr expr;  // over parameter names of encoding fields
};

struct FlatInstruction {
  std::string name;
  std::string instruction;  // source instruction
  std::string mode;         // source mode case, empty if none
  Ast ast;
  EncodingTable encoding;
  SyntaxTemplate syntax;
  std::vector<ValidityConstraint> constraints;
  std::vector<Param> params;        // run-time parameter list
  std::vector<std::string> locals;
  ExprPtr may_branch;               // over parameter names; set by analysis
  uint64_t weight = 0;
  std::vector<DecodeRule> decode_rules;
  // Specialized variants: the generic parent and the field values selecting
  // this variant (parameter name -> value). Empty for generic instructions.
  std::string generic;
  std::vector<std::pair<std::string, uint32_t>> selection;
  // Source fields that became constant while merging encodings.
  std::map<std::string, uint32_t> fixed;
  // Number of leading statements that came from the mode case.
  size_t mode_prefix = 0;

  bool is_variant() const { return !generic.empty(); }
  int param_index(const std::string& name) const;
};

}  // namespace issforge
