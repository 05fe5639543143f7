#pragma once

// Lexing helpers shared by the pseudo-code and patch parsers.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "issforge/ast.hpp"

namespace issforge::detail {

// A source line after comment removal and continuation joining.
struct LogicalLine {
  int indent = 0;
  int number = 0;  // first physical line
  std::string text;
  int column_base = 0;
};

struct Token {
  enum class Kind { Ident, Number, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  uint32_t value = 0;
  int column = 0;
};

std::vector<LogicalLine> split_logical_lines(std::string_view text, const std::string& file);
std::vector<Token> tokenize(const LogicalLine& line, const std::string& file,
                            const std::string& unit);

// Header line at indent 0 plus its indented body lines.
struct UnitText {
  const LogicalLine* header;
  std::vector<Token> header_toks;
  std::vector<const LogicalLine*> body;
};

std::vector<UnitText> split_units(const std::vector<LogicalLine>& lines, const std::string& file);

class ExprParser {
 public:
  ExprParser(const std::vector<Token>& toks, size_t pos, std::string file, int line,
             std::string unit)
      : toks_(toks), pos_(pos), file_(std::move(file)), line_(line), unit_(std::move(unit)) {}

  ExprPtr parse();
  std::vector<ExprPtr> parse_args();

  const Token& peek() const;
  Token next();
  bool peek_punct(const char* p) const;
  bool peek_ident(const char* p) const;
  void expect_punct(const char* p);
  void expect_end();
  [[noreturn]] void fail(const Token& t, const std::string& msg) const;

 private:
  ExprPtr parse_binary(int min_prec);
  ExprPtr parse_unary();
  ExprPtr parse_postfix(ExprPtr base);
  ExprPtr parse_primary();

  const std::vector<Token>& toks_;
  size_t pos_;
  std::string file_;
  int line_;
  std::string unit_;
};

}  // namespace issforge::detail
