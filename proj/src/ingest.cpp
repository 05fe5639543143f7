#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "issforge/error.hpp"
#include "issforge/ingest.hpp"
#include "issforge/ir.hpp"

namespace issforge {

namespace {

std::string trim(std::string_view s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

struct Entry {
  int line;
  std::string name;
  std::string body;
  int body_column;
};

// `NAME: body` lines with `//` comments.
std::vector<Entry> split_entries(std::string_view text, const std::string& file) {
  std::vector<Entry> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto c = raw.find("//"); c != std::string::npos) raw.erase(c);
    if (trim(raw).empty()) continue;
    const size_t colon = raw.find(':');
    if (colon == std::string::npos)
      throw ParseError(file, line, 1, "", "expected 'NAME: ...'");
    std::string name = trim(std::string_view(raw).substr(0, colon));
    if (name != "*" && !is_identifier(name))
      throw ParseError(file, line, 1, "", "invalid unit name '" + name + "'");
    const size_t body_start = raw.find_first_not_of(" \t", colon + 1);
    out.push_back(Entry{line, name, trim(std::string_view(raw).substr(colon + 1)),
                        static_cast<int>(body_start == std::string::npos ? colon + 2
                                                                         : body_start + 1)});
  }
  return out;
}

uint32_t parse_number(const std::string& s, const std::string& file, int line,
                      const std::string& unit) {
  try {
    size_t used = 0;
    const unsigned long long v = std::stoull(s, &used, 0);
    if (used != s.size() || v > 0xFFFFFFFFull) throw std::invalid_argument(s);
    return static_cast<uint32_t>(v);
  } catch (const std::logic_error&) {
    throw ParseError(file, line, 0, unit, "malformed number '" + s + "'");
  }
}

}  // namespace

// ------------------------------------------------------------------ encodings

EncodingTable parse_encoding_row(std::string_view row, const std::string& unit) {
  EncodingTable t;
  std::string rest(row);
  size_t start = 0;
  while (start <= rest.size()) {
    size_t bar = rest.find('|', start);
    if (bar == std::string::npos) bar = rest.size();
    const std::string part = trim(std::string_view(rest).substr(start, bar - start));
    start = bar + 1;
    std::istringstream ps(part);
    std::string range, content, extra;
    ps >> range >> content >> extra;
    if (range.empty() || content.empty() || !extra.empty())
      throw Error(unit + ": malformed field '" + part + "'");
    EncodingField f;
    try {
      if (auto dots = range.find(".."); dots != std::string::npos) {
        f.hi = static_cast<unsigned>(std::stoul(range.substr(0, dots)));
        f.lo = static_cast<unsigned>(std::stoul(range.substr(dots + 2)));
      } else {
        f.hi = f.lo = static_cast<unsigned>(std::stoul(range));
      }
    } catch (const std::logic_error&) {
      throw Error(unit + ": malformed bit range '" + range + "'");
    }
    if (f.hi > 31) throw Error(unit + ": bit " + std::to_string(f.hi) + " out of range");
    if (content.find_first_not_of("01") == std::string::npos) {
      f.is_constant = true;
    } else if (!is_identifier(content)) {
      throw Error(unit + ": invalid field content '" + content + "'");
    }
    f.content = content;
    t.fields.push_back(std::move(f));
    if (bar == rest.size()) break;
  }
  check_encoding(t, unit);
  return t;
}

std::map<std::string, EncodingTable> parse_encodings(std::string_view text, const std::string& file) {
  std::map<std::string, EncodingTable> out;
  for (const auto& e : split_entries(text, file)) {
    EncodingTable t;
    try {
      t = parse_encoding_row(e.body, e.name);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      std::string msg = err.what();
      if (msg.rfind(e.name + ": ", 0) == 0) msg.erase(0, e.name.size() + 2);
      throw ParseError(file, e.line, e.body_column, e.name, msg);
    }
    if (!out.emplace(e.name, std::move(t)).second)
      throw ParseError(file, e.line, 1, e.name, "duplicate encoding");
  }
  return out;
}

// ------------------------------------------------------------------ syntax

namespace {

class SyntaxParser {
 public:
  SyntaxParser(std::string_view text, std::string unit) : s_(text), unit_(std::move(unit)) {}

  SyntaxTemplate parse() {
    SyntaxTemplate t;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      t.mnemonic += s_[pos_++];
    t.elements = elements(false);
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(unit_ + ": column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  std::vector<SyntaxElement> elements(bool in_group) {
    std::vector<SyntaxElement> out;
    std::string literal;
    auto flush = [&] {
      if (literal.empty()) return;
      out.push_back({SyntaxElement::Kind::Literal, literal, {}, {}});
      literal.clear();
    };
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '<') {
        flush();
        const size_t close = s_.find('>', pos_);
        if (close == std::string_view::npos) fail("unterminated placeholder");
        std::string name(s_.substr(pos_ + 1, close - pos_ - 1));
        if (name != kSignPlaceholder && !is_identifier(name))
          fail("invalid placeholder <" + name + ">");
        out.push_back({SyntaxElement::Kind::Placeholder, name, {}, {}});
        pos_ = close + 1;
      } else if (c == '{') {
        flush();
        ++pos_;
        SyntaxElement g{SyntaxElement::Kind::Optional, {}, elements(true), {}};
        if (pos_ < s_.size() && s_[pos_] == '|') {
          const size_t close = s_.find('}', pos_);
          if (close == std::string_view::npos) fail("unterminated optional group");
          g.control = trim(s_.substr(pos_ + 1, close - pos_ - 1));
          if (!is_identifier(g.control)) fail("invalid control field '" + g.control + "'");
          pos_ = close;
        } else if (g.group.size() == 1 &&
                   (g.group[0].kind == SyntaxElement::Kind::Placeholder ||
                    is_identifier(g.group[0].text))) {
          g.control = g.group[0].text;
        } else {
          fail("optional group needs a controlling field");
        }
        if (pos_ >= s_.size() || s_[pos_] != '}') fail("unterminated optional group");
        ++pos_;
        if (g.group.empty()) fail("empty optional group");
        out.push_back(std::move(g));
      } else if (c == '}' || c == '|') {
        if (!in_group) fail(std::string("unbalanced '") + c + "'");
        break;
      } else if (c == '>') {
        fail("unbalanced '>'");
      } else {
        literal += c;
        ++pos_;
      }
    }
    flush();
    return out;
  }

  std::string_view s_;
  std::string unit_;
  size_t pos_ = 0;
};

}  // namespace

SyntaxTemplate parse_syntax_template(std::string_view text, const std::string& unit) {
  return SyntaxParser(text, unit).parse();
}

std::map<std::string, SyntaxTemplate> parse_syntax(std::string_view text, const std::string& file) {
  std::map<std::string, SyntaxTemplate> out;
  for (const auto& e : split_entries(text, file)) {
    SyntaxTemplate t;
    try {
      t = parse_syntax_template(e.body, e.name);
    } catch (const Error& err) {
      std::string msg = err.what();
      if (msg.rfind(e.name + ": ", 0) == 0) msg.erase(0, e.name.size() + 2);
      throw ParseError(file, e.line, e.body_column, e.name, msg);
    }
    if (!out.emplace(e.name, std::move(t)).second)
      throw ParseError(file, e.line, 1, e.name, "duplicate syntax template");
  }
  return out;
}

// ------------------------------------------------------------------ constraints

std::vector<ValidityConstraint> parse_constraints(std::string_view text, const std::string& file) {
  std::vector<ValidityConstraint> out;
  for (const auto& e : split_entries(text, file)) {
    auto err = [&](const std::string& msg) {
      return ParseError(file, e.line, e.body_column, e.name, msg);
    };
    ValidityConstraint c;
    c.subject = e.name;
    std::istringstream in(e.body);
    std::string op;
    in >> c.param_a >> op;
    if (!is_identifier(c.param_a)) throw err("expected a field name");
    if (op == "!=") {
      std::string rhs, extra;
      in >> rhs >> extra;
      if (rhs.empty() || !extra.empty()) throw err("expected 'F != value' or 'F != G'");
      if (std::isdigit(static_cast<unsigned char>(rhs[0]))) {
        c.kind = ValidityConstraint::Kind::NotEqualValue;
        c.values.push_back(parse_number(rhs, file, e.line, e.name));
      } else if (is_identifier(rhs)) {
        c.kind = ValidityConstraint::Kind::ParamsDiffer;
        c.param_b = rhs;
      } else {
        throw err("invalid operand '" + rhs + "'");
      }
    } else if (op == "notin") {
      std::string rest;
      std::getline(in, rest);
      rest = trim(rest);
      if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}')
        throw err("expected '{v, ...}' after notin");
      c.kind = ValidityConstraint::Kind::NotIn;
      std::istringstream vs(rest.substr(1, rest.size() - 2));
      std::string v;
      while (std::getline(vs, v, ',')) {
        v = trim(v);
        if (v.empty()) throw err("empty value in notin set");
        c.values.push_back(parse_number(v, file, e.line, e.name));
      }
      if (c.values.empty()) throw err("empty notin set");
    } else {
      throw err("expected '!=' or 'notin'");
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ------------------------------------------------------------------ files

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

SourceSet load_sources(const std::filesystem::path& dir, std::string stem) {
  if (stem.empty()) stem = std::filesystem::path(dir).lexically_normal().filename().string();
  if (stem.empty()) stem = dir.parent_path().filename().string();
  SourceSet s;
  s.pseudocode_text = read_file(dir / (stem + ".pc"));
  s.encodings_text = read_file(dir / (stem + ".enc"));
  s.syntax_text = read_file(dir / (stem + ".syn"));
  s.constraints_text = read_file(dir / (stem + ".vc"));
  if (auto p = dir / (stem + ".patch.pc"); std::filesystem::exists(p)) s.patches_text = read_file(p);
  return s;
}

// ------------------------------------------------------------------ link

namespace {

void collect_controls(const std::vector<SyntaxElement>& elems, std::vector<std::string>& out) {
  for (const auto& e : elems) {
    if (e.kind == SyntaxElement::Kind::Optional) {
      out.push_back(e.control);
      collect_controls(e.group, out);
    }
  }
}

std::set<std::string> param_names_of(const EncodingTable& enc) {
  std::set<std::string> out;
  for (const auto& f : enc.param_names()) out.insert(param_name(f));
  return out;
}

}  // namespace

IsaDescription link(const SourceSet& src) {
  IsaDescription desc;
  PseudoFile pc = parse_pseudocode_file(src.pseudocode_text, "pseudocode");
  auto encodings = parse_encodings(src.encodings_text, "encodings");
  auto syntaxes = parse_syntax(src.syntax_text, "syntax");
  auto constraints = parse_constraints(src.constraints_text, "constraints");
  if (!src.patches_text.empty()) desc.patches = parse_patches(src.patches_text, "patches");
  if (pc.abort_vector) desc.abort_vector = *pc.abort_vector;

  std::set<std::string> unit_names;
  std::map<std::string, std::vector<std::string>> families;
  for (const auto& u : pc.units) {
    unit_names.insert(u.name);
    if (!encodings.count(u.name))
      throw ParseError("encodings", 0, 0, u.name, "no encoding for unit");
    if (!syntaxes.count(u.name)) throw ParseError("syntax", 0, 0, u.name, "no syntax for unit");
    if (u.kind == PseudoUnit::Kind::Mode) families[u.family].push_back(u.name);
  }
  for (const auto& [name, t] : encodings)
    if (!unit_names.count(name)) throw ParseError("encodings", 0, 0, name, "encoding for unknown unit");
  for (const auto& [name, t] : syntaxes)
    if (!unit_names.count(name)) throw ParseError("syntax", 0, 0, name, "syntax for unknown unit");

  std::set<std::string> used_modes;
  for (const auto& u : pc.units) {
    const EncodingTable& enc = encodings.at(u.name);
    const SyntaxTemplate& syn = syntaxes.at(u.name);
    std::string family;
    for (const auto& p : placeholders(syn)) {
      if (u.kind == PseudoUnit::Kind::Instruction && families.count(p)) {
        if (!family.empty() && family != p)
          throw ParseError("syntax", 0, 0, u.name, "more than one mode hole");
        family = p;
        continue;
      }
      if (p == kSignPlaceholder) {
        if (!enc.has_param("U") && family.empty())
          throw ParseError("syntax", 0, 0, u.name, "<+/-> needs a U field");
        continue;
      }
      if (!enc.has_param(p))
        throw ParseError("syntax", 0, 0, u.name, "dangling placeholder <" + p + ">");
    }
    std::vector<std::string> controls;
    collect_controls(syn.elements, controls);
    for (const auto& c : controls) {
      const EncodingField* f = enc.find(c);
      if (!f) throw ParseError("syntax", 0, 0, u.name, "optional group controlled by unknown field " + c);
    }

    if (u.kind == PseudoUnit::Kind::Mode) {
      ModeCase m{u.name, u.family, u.ast, enc, syn, {}};
      check_bound(m.ast, param_names_of(enc), m.name);
      desc.modes.push_back(std::move(m));
    } else {
      InstrUnit i{u.name, u.ast, enc, syn, {}, family, {}, u.patch};
      if (!family.empty()) {
        i.modes = families.at(family);
        used_modes.insert(i.modes.begin(), i.modes.end());
      } else {
        check_bound(i.ast, param_names_of(enc), i.name);
      }
      if (i.patch && !desc.patches.count(*i.patch))
        throw ParseError("pseudocode", u.line, 0, u.name, "unknown patch " + *i.patch);
      desc.instructions.push_back(std::move(i));
    }
  }

  for (const auto& m : desc.modes)
    if (!used_modes.count(m.name)) desc.warnings.push_back("mode " + m.name + " is used by no instruction");

  for (const auto& c : constraints) {
    auto applies = [&](const EncodingTable& enc) {
      return enc.has_param(c.param_a) &&
             (c.kind != ValidityConstraint::Kind::ParamsDiffer || enc.has_param(c.param_b));
    };
    if (c.subject == "*") {
      for (auto& i : desc.instructions)
        if (applies(i.encoding)) i.constraints.push_back(c);
      continue;
    }
    EncodingTable* enc = nullptr;
    std::vector<ValidityConstraint>* list = nullptr;
    for (auto& i : desc.instructions)
      if (i.name == c.subject) enc = &i.encoding, list = &i.constraints;
    for (auto& m : desc.modes)
      if (m.name == c.subject) enc = &m.encoding, list = &m.constraints;
    if (!enc) throw ParseError("constraints", 0, 0, c.subject, "constraint on unknown unit");
    if (!applies(*enc))
      throw ParseError("constraints", 0, 0, c.subject, "constraint on unknown field in '" + to_string(c) + "'");
    list->push_back(c);
  }
  return desc;
}

}  // namespace issforge
