#include <cctype>
#include <set>

#include "issforge/error.hpp"
#include "issforge/ingest.hpp"
#include "pseudocode_lexer.hpp"

namespace issforge {
namespace detail {

// ------------------------------------------------------------------ lexer

std::vector<LogicalLine> split_logical_lines(std::string_view text, const std::string& file) {
  std::vector<LogicalLine> out;
  int line_no = 0;
  size_t pos = 0;
  LogicalLine pending;
  bool continuing = false;
  int depth = 0;

  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string raw(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (auto c = raw.find("//"); c != std::string::npos) raw.erase(c);

    bool backslash = false;
    {
      size_t end = raw.find_last_not_of(" \t");
      if (end != std::string::npos && raw[end] == '\\') {
        backslash = true;
        raw.erase(end);
      }
    }

    if (!continuing) {
      if (raw.find_first_not_of(" \t") == std::string::npos) {
        if (pos > text.size()) break;
        continue;
      }
      size_t indent = 0;
      while (indent < raw.size() && (raw[indent] == ' ' || raw[indent] == '\t')) {
        if (raw[indent] == '\t')
          throw ParseError(file, line_no, static_cast<int>(indent) + 1, "",
                           "tab in indentation");
        ++indent;
      }
      pending = LogicalLine{static_cast<int>(indent), line_no, raw.substr(indent), {}};
      pending.column_base = static_cast<int>(indent);
    } else {
      pending.text += ' ';
      size_t start = raw.find_first_not_of(" \t");
      if (start != std::string::npos) pending.text += raw.substr(start);
    }

    for (char ch : raw) {
      if (ch == '(' || ch == '[') ++depth;
      if (ch == ')' || ch == ']') --depth;
    }
    continuing = backslash || depth > 0;
    if (!continuing) {
      depth = 0;
      out.push_back(std::move(pending));
      pending = LogicalLine{};
    }
    if (pos > text.size()) break;
  }
  if (continuing) throw ParseError(file, line_no, 0, "", "unterminated line continuation");
  return out;
}

std::vector<Token> tokenize(const LogicalLine& line, const std::string& file,
                            const std::string& unit) {
  std::vector<Token> toks;
  const std::string& s = line.text;
  size_t i = 0;
  auto error = [&](size_t at, const std::string& msg) {
    throw ParseError(file, line.number, line.column_base + static_cast<int>(at) + 1, unit, msg);
  };
  while (i < s.size()) {
    const char c = s[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    const int col = line.column_base + static_cast<int>(i) + 1;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      toks.push_back({Token::Kind::Ident, s.substr(i, j - i), 0, col});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      int base = 10;
      if (c == '0' && i + 1 < s.size() && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
        base = 16;
        j += 2;
      } else if (c == '0' && i + 1 < s.size() && (s[i + 1] == 'b' || s[i + 1] == 'B')) {
        base = 2;
        j += 2;
      }
      const size_t digits = j;
      while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
      const std::string body = s.substr(digits, j - digits);
      if (body.empty()) error(i, "malformed number");
      uint64_t v = 0;
      for (char d : body) {
        int dv;
        if (std::isdigit(static_cast<unsigned char>(d)))
          dv = d - '0';
        else if (std::isxdigit(static_cast<unsigned char>(d)))
          dv = std::tolower(static_cast<unsigned char>(d)) - 'a' + 10;
        else
          dv = 99;
        if (dv >= base) error(i, "malformed number '" + s.substr(i, j - i) + "'");
        v = v * static_cast<uint64_t>(base) + static_cast<uint64_t>(dv);
        if (v > 0xFFFFFFFFull) error(i, "number out of range");
      }
      toks.push_back({Token::Kind::Number, s.substr(i, j - i), static_cast<uint32_t>(v), col});
      i = j;
      continue;
    }
    static const char* two[] = {"==", "!=", "<=", ">="};
    bool matched = false;
    for (const char* t : two) {
      if (s.compare(i, 2, t) == 0) {
        toks.push_back({Token::Kind::Punct, t, 0, col});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("=<>+-*()[],:@").find(c) != std::string_view::npos) {
      toks.push_back({Token::Kind::Punct, std::string(1, c), 0, col});
      ++i;
      continue;
    }
    error(i, std::string("unexpected character '") + c + "'");
  }
  toks.push_back({Token::Kind::End, "", 0, line.column_base + static_cast<int>(s.size()) + 1});
  return toks;
}

// ------------------------------------------------------------------ expressions

namespace {

std::optional<BinaryOp> binary_op(const Token& t) {
  if (t.kind == Token::Kind::Punct) {
    if (t.text == "+") return BinaryOp::Add;
    if (t.text == "-") return BinaryOp::Sub;
    if (t.text == "*") return BinaryOp::Mul;
    if (t.text == "==") return BinaryOp::Eq;
    if (t.text == "!=") return BinaryOp::Ne;
    if (t.text == "<") return BinaryOp::Lt;
    if (t.text == "<=") return BinaryOp::Le;
    if (t.text == ">") return BinaryOp::Gt;
    if (t.text == ">=") return BinaryOp::Ge;
  } else if (t.kind == Token::Kind::Ident) {
    if (t.text == "AND") return BinaryOp::BitAnd;
    if (t.text == "OR") return BinaryOp::BitOr;
    if (t.text == "EOR") return BinaryOp::BitXor;
    if (t.text == "and") return BinaryOp::LogAnd;
    if (t.text == "or") return BinaryOp::LogOr;
  }
  return std::nullopt;
}

std::optional<Flag> flag_of(const std::string& s) {
  if (s == "N") return Flag::N;
  if (s == "Z") return Flag::Z;
  if (s == "C") return Flag::C;
  if (s == "V") return Flag::V;
  return std::nullopt;
}

}  // namespace

ExprPtr ExprParser::parse() { return parse_binary(1); }

ExprPtr ExprParser::parse_binary(int min_prec) {
  ExprPtr lhs = parse_unary();
  while (true) {
    auto op = binary_op(peek());
    if (!op || precedence(*op) < min_prec) break;
    next();
    ExprPtr rhs = parse_binary(precedence(*op) + 1);
    lhs = mk::bin(*op, lhs, rhs);
  }
  return lhs;
}

ExprPtr ExprParser::parse_unary() {
  if (peek_ident("not")) {
    next();
    return mk::un(UnaryOp::LogNot, parse_binary(4));
  }
  if (peek_ident("NOT")) {
    next();
    return mk::un(UnaryOp::BitNot, parse_binary(9));
  }
  return parse_postfix(parse_primary());
}

ExprPtr ExprParser::parse_postfix(ExprPtr base) {
  while (peek_punct("[")) {
    next();
    ExprPtr hi = parse();
    ExprPtr lo;
    if (peek_punct(":")) {
      next();
      lo = parse();
    }
    expect_punct("]");
    base = mk::bits(base, hi, lo);
  }
  return base;
}

std::vector<ExprPtr> ExprParser::parse_args() {
  expect_punct("(");
  std::vector<ExprPtr> args;
  if (!peek_punct(")")) {
    args.push_back(parse());
    while (peek_punct(",")) {
      next();
      args.push_back(parse());
    }
  }
  expect_punct(")");
  return args;
}

ExprPtr ExprParser::parse_primary() {
  const Token t = peek();
  if (t.kind == Token::Kind::Number) {
    next();
    return mk::num(t.value);
  }
  if (peek_punct("(")) {
    next();
    ExprPtr e = parse();
    expect_punct(")");
    return e;
  }
  if (t.kind != Token::Kind::Ident) fail(t, "expected expression, found '" + t.text + "'");
  next();
  const std::string& id = t.text;

  if (auto f = flag_of(id); f && peek_ident("Flag")) {
    next();
    return mk::flag(*f);
  }
  if (id == "Memory") {
    expect_punct("[");
    ExprPtr addr = parse();
    expect_punct(",");
    const Token sz = next();
    if (sz.kind != Token::Kind::Number || (sz.value != 1 && sz.value != 2 && sz.value != 4))
      fail(sz, "memory access size must be 1, 2 or 4");
    expect_punct("]");
    return mk::mem(addr, sz.value);
  }
  if (id == "CPSR") return mk::psr(Psr::Cpsr);
  if (id == "SPSR") return mk::psr(Psr::Spsr);
  if (id == "PC") return mk::reg(mk::num(15));
  if (id == "LR") return mk::reg(mk::num(14));
  if (id == "SP") return mk::reg(mk::num(13));
  if (id == "R" && peek_punct("[")) {
    next();
    ExprPtr index = parse();
    ExprPtr mode;
    if (peek_punct(",")) {
      next();
      mode = parse();
    }
    expect_punct("]");
    return mk::reg(index, mode);
  }
  if (id.size() >= 2 && id[0] == 'R' &&
      id.find_first_not_of("0123456789", 1) == std::string::npos) {
    const unsigned long n = std::stoul(id.substr(1));
    if (n > 15) fail(t, "no register " + id);
    return mk::reg(mk::num(static_cast<uint32_t>(n)));
  }
  if (is_register_field(id)) return mk::reg(mk::var(id.substr(1)));
  if (peek_punct("(")) {
    const BuiltinInfo* b = find_builtin(id);
    if (!b || b->kind == BuiltinInfo::Kind::Statement) fail(t, "unknown builtin function " + id);
    auto args = parse_args();
    if (args.size() != b->arity)
      fail(t, id + " expects " + std::to_string(b->arity) + " argument(s), got " +
                  std::to_string(args.size()));
    return mk::call(id, std::move(args));
  }
  return mk::var(id);
}

const Token& ExprParser::peek() const { return toks_[pos_]; }

Token ExprParser::next() {
  Token t = toks_[pos_];
  if (pos_ + 1 < toks_.size()) ++pos_;
  return t;
}

bool ExprParser::peek_punct(const char* p) const {
  return peek().kind == Token::Kind::Punct && peek().text == p;
}

bool ExprParser::peek_ident(const char* p) const {
  return peek().kind == Token::Kind::Ident && peek().text == p;
}

void ExprParser::expect_punct(const char* p) {
  if (!peek_punct(p)) fail(peek(), std::string("expected '") + p + "'");
  next();
}

[[noreturn]] void ExprParser::fail(const Token& t, const std::string& msg) const {
  throw ParseError(file_, line_, t.column, unit_, msg);
}

}  // namespace detail

// ------------------------------------------------------------------ statements

namespace {

using detail::ExprParser;
using detail::LogicalLine;
using detail::Token;

struct BodyLine {
  const LogicalLine* line;
  std::vector<Token> toks;
};

class BlockParser {
 public:
  BlockParser(std::vector<BodyLine> lines, std::string file, std::string unit)
      : lines_(std::move(lines)), file_(std::move(file)), unit_(std::move(unit)) {}

  Ast parse_unit() {
    if (lines_.empty()) throw ParseError(file_, 0, 0, unit_, "empty unit");
    Block body = parse_block(0);
    if (pos_ < lines_.size()) indentation_error(lines_[pos_]);
    return body;
  }

 private:
  [[noreturn]] void indentation_error(const BodyLine& l) {
    throw ParseError(file_, l.line->number, l.line->indent + 1, unit_,
                     "inconsistent indentation");
  }

  ExprParser expr_parser(const BodyLine& l, size_t start) {
    return ExprParser(l.toks, start, file_, l.line->number, unit_);
  }

  Block parse_block(int parent_indent) {
    if (pos_ >= lines_.size() || lines_[pos_].line->indent <= parent_indent) {
      const int line = pos_ < lines_.size() ? lines_[pos_].line->number
                                            : (pos_ ? lines_[pos_ - 1].line->number : 0);
      throw ParseError(file_, line, 0, unit_, "expected an indented block");
    }
    const int indent = lines_[pos_].line->indent;
    Block block;
    while (pos_ < lines_.size()) {
      const int cur = lines_[pos_].line->indent;
      if (cur < indent) {
        if (cur > parent_indent) indentation_error(lines_[pos_]);
        break;
      }
      if (cur > indent) indentation_error(lines_[pos_]);
      block.push_back(parse_statement(indent));
    }
    return block;
  }

  StmtPtr parse_if(const BodyLine& l, size_t start, int indent) {
    auto p = expr_parser(l, start);
    ExprPtr cond = p.parse();
    if (p.peek_ident("then")) p.next();
    p.expect_end();
    ++pos_;
    Block then_block = parse_block(indent);
    Block else_block;
    if (pos_ < lines_.size() && lines_[pos_].line->indent == indent) {
      const BodyLine& e = lines_[pos_];
      if (e.toks[0].kind == Token::Kind::Ident && e.toks[0].text == "else") {
        if (e.toks[1].kind == Token::Kind::Ident && e.toks[1].text == "if") {
          else_block.push_back(parse_if(e, 2, indent));
        } else {
          if (e.toks[1].kind != Token::Kind::End)
            throw ParseError(file_, e.line->number, e.toks[1].column, unit_,
                             "unexpected token after else");
          ++pos_;
          else_block = parse_block(indent);
        }
      }
    }
    return mk::if_(cond, std::move(then_block), std::move(else_block));
  }

  StmtPtr parse_statement(int indent) {
    const BodyLine& l = lines_[pos_];
    const Token& first = l.toks[0];
    auto error = [&](const Token& t, const std::string& msg) -> ParseError {
      return ParseError(file_, l.line->number, t.column, unit_, msg);
    };
    if (first.kind == Token::Kind::Ident) {
      if (first.text == "if") return parse_if(l, 1, indent);
      if (first.text == "else") throw error(first, "else without if");
      if (first.text == "UNPREDICTABLE" || first.text == "Nop") {
        if (l.toks[1].kind != Token::Kind::End) throw error(l.toks[1], "unexpected token");
        ++pos_;
        return first.text == "Nop" ? mk::nop() : mk::unpredictable();
      }
      if (first.text == "for") {
        const Token& var = l.toks[1];
        if (var.kind != Token::Kind::Ident) throw error(var, "expected loop variable");
        auto p = expr_parser(l, 2);
        p.expect_punct("=");
        const Token a = p.next();
        if (a.kind != Token::Kind::Number) throw error(a, "loop bound must be a number");
        if (!p.peek_ident("to")) throw error(p.peek(), "expected 'to'");
        p.next();
        const Token b = p.next();
        if (b.kind != Token::Kind::Number) throw error(b, "loop bound must be a number");
        p.expect_end();
        ++pos_;
        Block body = parse_block(indent);
        return mk::for_(var.text, a.value, b.value, std::move(body));
      }
      if (const BuiltinInfo* bi = find_builtin(first.text);
          bi && bi->kind == BuiltinInfo::Kind::Statement) {
        auto p = expr_parser(l, 1);
        auto args = p.parse_args();
        p.expect_end();
        if (args.size() != bi->arity) throw error(first, first.text + ": wrong argument count");
        ++pos_;
        return mk::call_stmt(first.text, std::move(args));
      }
    }
    auto p = expr_parser(l, 0);
    ExprPtr lhs = p.parse();
    if (!p.peek_punct("=")) throw error(p.peek(), "expected '=' in assignment");
    p.next();
    ExprPtr rhs = p.parse();
    p.expect_end();
    if (!is_lvalue(*lhs)) throw error(first, "invalid assignment target " + to_string(lhs));
    ++pos_;
    return mk::assign(lhs, rhs);
  }

  static bool is_lvalue(const Expr& e) {
    if (e.is<expr::Var>() || e.is<expr::Reg>() || e.is<expr::FlagRef>() ||
        e.is<expr::Memory>() || e.is<expr::StatusReg>())
      return true;
    if (auto* b = e.as<expr::BitRange>()) return is_lvalue(*b->base);
    return false;
  }

  std::vector<BodyLine> lines_;
  std::string file_;
  std::string unit_;
  size_t pos_ = 0;
};

}  // namespace

namespace detail {

void ExprParser::expect_end() {
  if (peek().kind != Token::Kind::End) fail(peek(), "unexpected '" + peek().text + "'");
}

std::vector<UnitText> split_units(const std::vector<LogicalLine>& lines,
                                  const std::string& file) {
  std::vector<UnitText> units;
  for (const auto& l : lines) {
    if (l.indent == 0) {
      auto toks = tokenize(l, file, "");
      units.push_back(UnitText{&l, std::move(toks), {}});
    } else {
      if (units.empty())
        throw ParseError(file, l.number, l.indent + 1, "", "indented line outside a unit");
      units.back().body.push_back(&l);
    }
  }
  return units;
}

}  // namespace detail

PseudoFile parse_pseudocode_file(std::string_view text, const std::string& file) {
  const auto lines = detail::split_logical_lines(text, file);
  PseudoFile out;
  std::set<std::string> seen;
  for (const auto& u : detail::split_units(lines, file)) {
    const auto& t = u.header_toks;
    auto err = [&](const Token& tok, const std::string& msg) {
      return ParseError(file, u.header->number, tok.column, "", msg);
    };
    if (t[0].kind == Token::Kind::Punct && t[0].text == "@") {
      if (t[1].text != "abort_vector" || t[2].kind != Token::Kind::Number ||
          t[3].kind != Token::Kind::End)
        throw err(t[1], "unknown directive");
      if (!u.body.empty()) throw err(t[0], "directive takes no body");
      out.abort_vector = t[2].value;
      continue;
    }
    PseudoUnit unit;
    unit.line = u.header->number;
    size_t i = 0;
    if (t[0].text == "Instruction") {
      unit.kind = PseudoUnit::Kind::Instruction;
    } else if (t[0].text == "Mode") {
      unit.kind = PseudoUnit::Kind::Mode;
    } else {
      throw err(t[0], "expected 'Instruction' or 'Mode' header");
    }
    ++i;
    if (t[i].kind != Token::Kind::Ident) throw err(t[i], "expected unit name");
    unit.name = t[i++].text;
    if (unit.kind == PseudoUnit::Kind::Mode) {
      if (t[i].text != "in" || t[i + 1].kind != Token::Kind::Ident)
        throw err(t[i], "expected 'in FAMILY' after mode name");
      unit.family = t[i + 1].text;
      i += 2;
    } else if (t[i].kind == Token::Kind::Ident && t[i].text == "patch") {
      if (t[i + 1].kind != Token::Kind::Ident) throw err(t[i + 1], "expected patch name");
      unit.patch = t[i + 1].text;
      i += 2;
    }
    if (t[i].text != ":" || t[i + 1].kind != Token::Kind::End)
      throw err(t[i], "expected ':' at end of header");
    if (!seen.insert(unit.name).second) throw err(t[1], "duplicate unit " + unit.name);

    std::vector<BodyLine> body;
    for (const LogicalLine* l : u.body) body.push_back({l, detail::tokenize(*l, file, unit.name)});
    unit.ast = BlockParser(std::move(body), file, unit.name).parse_unit();
    out.units.push_back(std::move(unit));
  }
  return out;
}

std::map<std::string, Ast> parse_pseudocode(std::string_view text) {
  std::map<std::string, Ast> out;
  for (auto& u : parse_pseudocode_file(text).units) out.emplace(u.name, std::move(u.ast));
  return out;
}

ExprPtr parse_expression(std::string_view text) {
  detail::LogicalLine line{0, 1, std::string(text), 0};
  auto toks = detail::tokenize(line, "<expr>", "");
  detail::ExprParser p(toks, 0, "<expr>", 1, "");
  ExprPtr e = p.parse();
  p.expect_end();
  return e;
}

std::map<std::string, Patch> parse_patches(std::string_view text, const std::string& file) {
  std::map<std::string, Patch> out;
  const auto lines = detail::split_logical_lines(text, file);
  for (const auto& u : detail::split_units(lines, file)) {
    const auto& t = u.header_toks;
    if (t[0].text != "Patch" || t[1].kind != Token::Kind::Ident || t[2].text != ":" ||
        t[3].kind != Token::Kind::End)
      throw ParseError(file, u.header->number, t[0].column, "", "expected 'Patch NAME:'");
    Patch patch{t[1].text, {}};
    for (const LogicalLine* l : u.body) {
      auto toks = detail::tokenize(*l, file, patch.name);
      if (toks[0].text != "replace")
        throw ParseError(file, l->number, toks[0].column, patch.name, "expected 'replace'");
      detail::ExprParser p(toks, 1, file, l->number, patch.name);
      ExprPtr pattern = p.parse();
      if (!p.peek_ident("with"))
        throw ParseError(file, l->number, p.peek().column, patch.name, "expected 'with'");
      p.next();
      ExprPtr replacement = p.parse();
      p.expect_end();
      patch.steps.push_back({pattern, replacement});
    }
    if (patch.steps.empty())
      throw ParseError(file, u.header->number, 0, patch.name, "empty unit");
    if (!out.emplace(patch.name, patch).second)
      throw ParseError(file, u.header->number, 0, patch.name, "duplicate patch");
  }
  return out;
}

}  // namespace issforge
