#pragma once

// Parsers for the description files and the linker that cross-references
// them into an IsaDescription.
//
//   .pc        pseudo-code, one `Instruction NAME:` / `Mode NAME in FAMILY:` unit each
//   .enc       encoding tables
//   .syn       assembly syntax templates
//   .vc        validity constraints
//   .patch.pc  mode-variant patches (optional)

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "issforge/ast.hpp"
#include "issforge/isa.hpp"

namespace issforge {

struct PseudoUnit {
  enum class Kind { Instruction, Mode };
  Kind kind = Kind::Instruction;
  std::string name;
  std::string family;               // modes only
  std::optional<std::string> patch; // instructions only
  Ast ast;
  int line = 0;
};

struct PseudoFile {
  std::vector<PseudoUnit> units;  // declaration order
  std::optional<uint32_t> abort_vector;
};

PseudoFile parse_pseudocode_file(std::string_view text, const std::string& file = "<pseudocode>");

// One Ast per unit, keyed by unit name.
std::map<std::string, Ast> parse_pseudocode(std::string_view text);

// A single expression in pseudo-code syntax.
ExprPtr parse_expression(std::string_view text);

std::map<std::string, EncodingTable> parse_encodings(std::string_view text,
                                                     const std::string& file = "<encodings>");

// Parses one row (`31..28 cond | ... | 3..0 Rm`) and checks its coverage.
EncodingTable parse_encoding_row(std::string_view row, const std::string& unit = "<row>");

std::map<std::string, SyntaxTemplate> parse_syntax(std::string_view text,
                                                   const std::string& file = "<syntax>");
SyntaxTemplate parse_syntax_template(std::string_view text, const std::string& unit = "<syntax>");

std::vector<ValidityConstraint> parse_constraints(std::string_view text,
                                                  const std::string& file = "<constraints>");

std::map<std::string, Patch> parse_patches(std::string_view text,
                                           const std::string& file = "<patches>");

struct SourceSet {
  std::string pseudocode_text;
  std::string encodings_text;
  std::string syntax_text;
  std::string constraints_text;
  std::string patches_text;  // may be empty
};

// Reads `<dir>/<stem>.{pc,enc,syn,vc,patch.pc}`; the stem is the directory
// name unless given.
SourceSet load_sources(const std::filesystem::path& dir, std::string stem = {});

IsaDescription link(const SourceSet& sources);

std::string read_file(const std::filesystem::path& path);

}  // namespace issforge
