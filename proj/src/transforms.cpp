#include "issforge/transforms.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "issforge/error.hpp"
#include "issforge/ingest.hpp"
#include "issforge/ir.hpp"

namespace issforge {

// ------------------------------------------------------------------ symbolic rewrite

namespace {

// Flattens a left-leaning chain a op b op c into its operands.
bool chain(const ExprPtr& e, BinaryOp op, std::vector<ExprPtr>& out) {
  auto* b = e->as<expr::Binary>();
  if (!b || b->op != op) return false;
  if (!chain(b->lhs, op, out)) out.push_back(b->lhs);
  out.push_back(b->rhs);
  return true;
}

ExprPtr rewrite_symbolic_call(const expr::Call& c, const std::string& unit) {
  const std::string& f = c.name;
  auto fail = [&]() -> ExprPtr {
    throw Error("in " + unit + ": cannot rewrite " + to_string(mk::call(f, c.args)) +
                ": argument must be a sum or difference of two or three terms");
  };
  std::vector<ExprPtr> ops;
  if (f == "SignedSat") {
    if (chain(c.args[0], BinaryOp::Add, ops) && ops.size() == 2)
      return mk::call("SignedSatAdd2", {ops[0], ops[1], c.args[1]});
    ops.clear();
    if (chain(c.args[0], BinaryOp::Sub, ops) && ops.size() == 2)
      return mk::call("SignedSatSub2", {ops[0], ops[1], c.args[1]});
    return fail();
  }
  const bool add = chain(c.args[0], BinaryOp::Add, ops);
  if (!add) {
    ops.clear();
    if (!chain(c.args[0], BinaryOp::Sub, ops)) return fail();
  }
  if (ops.size() != 2 && ops.size() != 3) return fail();
  std::string name;
  if (f == "CarryFrom" && add) name = "CarryFromAdd";
  else if (f == "BorrowFrom" && !add) name = "BorrowFromSub";
  else if (f == "OverflowFrom") name = add ? "OverflowFromAdd" : "OverflowFromSub";
  else return fail();
  return mk::call(name + std::to_string(ops.size()), ops);
}

}  // namespace

Block symbolic_rewrite(const Block& b, const std::string& unit) {
  return rewrite(b, [&](const ExprPtr& e) -> ExprPtr {
    auto* c = e->as<expr::Call>();
    if (!c) return nullptr;
    const BuiltinInfo* info = find_builtin(c->name);
    if (!info || info->kind != BuiltinInfo::Kind::Symbolic) return nullptr;
    return rewrite_symbolic_call(*c, unit);
  });
}

void symbolic_rewrite(IsaDescription& desc) {
  for (auto& i : desc.instructions) i.ast = symbolic_rewrite(i.ast, i.name);
  for (auto& m : desc.modes) m.ast = symbolic_rewrite(m.ast, m.name);
  for (auto& [name, p] : desc.patches)
    for (auto& s : p.steps) {
      Block tmp{mk::assign(mk::var("_"), s.replacement)};
      s.replacement = symbolic_rewrite(tmp, "patch " + name)[0]->as<stmt::Assign>()->rhs;
    }
}

// ------------------------------------------------------------------ patches

ModeCase apply_patch(const ModeCase& mode, const Patch& patch) {
  ModeCase out = mode;
  for (const auto& step : patch.steps) {
    size_t count = 0;
    out.ast = replace_exp(out.ast, step.pattern, step.replacement, count);
    if (count == 0)
      throw Error("stale patch " + patch.name + ": 'replace " + to_string(step.pattern) + " with " +
                  to_string(step.replacement) + "' matches nothing in mode " + mode.name);
  }
  return out;
}

// ------------------------------------------------------------------ flatten

namespace {

struct BitSource {
  bool constant = false;
  char value = '0';
  std::string name;
  // Parent fields covering the bit; constant runs break where either changes.
  const EncodingField* from_instr = nullptr;
  const EncodingField* from_mode = nullptr;
};

const EncodingField* field_at(const EncodingTable& t, unsigned bit) {
  for (const auto& f : t.fields)
    if (f.lo <= bit && bit <= f.hi) return &f;
  return nullptr;
}

EncodingTable merge_encodings(const EncodingTable& instr, const EncodingTable& mode,
                              const std::string& flat) {
  BitSource bits[32];
  for (unsigned b = 0; b < 32; ++b) {
    const EncodingField* fi = field_at(instr, b);
    const EncodingField* fm = field_at(mode, b);
    auto const_bit = [&](const EncodingField* f) { return f->content[f->hi - b]; };
    BitSource& s = bits[b];
    s.from_instr = fi;
    s.from_mode = fm;
    if (fi->is_constant && fm->is_constant) {
      if (const_bit(fi) != const_bit(fm))
        throw Error(flat + ": conflicting constant bit " + std::to_string(b));
      s.constant = true, s.value = const_bit(fi);
    } else if (fi->is_constant) {
      s.constant = true, s.value = const_bit(fi);
    } else if (fm->is_constant) {
      s.constant = true, s.value = const_bit(fm);
    } else if (fi->content == fm->content || fm->width() <= fi->width()) {
      s.name = fm->content;
    } else {
      s.name = fi->content;
    }
  }
  EncodingTable out;
  std::set<std::string> seen;
  for (int b = 31; b >= 0; --b) {
    const BitSource& s = bits[b];
    if (!out.fields.empty()) {
      EncodingField& last = out.fields.back();
      const BitSource& prev = bits[b + 1];
      if (s.constant && last.is_constant && s.from_instr == prev.from_instr && s.from_mode == prev.from_mode) {
        last.lo = static_cast<unsigned>(b);
        last.content += s.value;
        continue;
      }
      if (!s.constant && !last.is_constant && last.content == s.name) {
        last.lo = static_cast<unsigned>(b);
        continue;
      }
    }
    if (!s.constant && !seen.insert(s.name).second)
      throw Error(flat + ": field " + s.name + " is split by the merge");
    out.fields.push_back(EncodingField{static_cast<unsigned>(b), static_cast<unsigned>(b),
                                       s.constant, s.constant ? std::string(1, s.value) : s.name});
  }
  check_encoding(out, flat);
  return out;
}

enum class FieldState { Present, Fixed, Absent };

struct FieldInfo {
  FieldState state = FieldState::Absent;
  uint32_t value = 0;
};

FieldInfo classify(const EncodingField& src, const EncodingTable& merged) {
  if (merged.has_param(src.content)) return {FieldState::Present, 0};
  uint32_t v = 0;
  for (unsigned b = src.hi + 1; b-- > src.lo;) {
    const EncodingField* f = field_at(merged, b);
    if (!f->is_constant) return {FieldState::Absent, 0};
    v = (v << 1) | (f->content[f->hi - b] == '1' ? 1u : 0u);
  }
  return {FieldState::Fixed, v};
}

std::vector<SyntaxElement> merge_literals(std::vector<SyntaxElement> in) {
  std::vector<SyntaxElement> out;
  for (auto& e : in) {
    if (e.kind == SyntaxElement::Kind::Literal && !out.empty() &&
        out.back().kind == SyntaxElement::Kind::Literal) {
      out.back().text += e.text;
    } else {
      out.push_back(std::move(e));
    }
  }
  return out;
}

void collect_syntax_names(const std::vector<SyntaxElement>& elems, std::vector<std::string>& out) {
  for (const auto& e : elems) {
    if (e.kind == SyntaxElement::Kind::Placeholder) out.push_back(e.text);
    if (e.kind == SyntaxElement::Kind::Optional) {
      out.push_back(e.control);
      collect_syntax_names(e.group, out);
    }
  }
}

std::vector<Param> params_of(const EncodingTable& enc) {
  std::vector<Param> out;
  for (const auto& f : enc.fields)
    if (!f.is_constant) out.push_back(Param{param_name(f.content), f.width(), false});
  return out;
}

std::set<std::string> names_of(const std::vector<Param>& ps) {
  std::set<std::string> out;
  for (const auto& p : ps) out.insert(p.name);
  return out;
}

std::vector<std::string> locals_of(const Block& ast, const std::vector<Param>& params) {
  const auto params_set = names_of(params);
  std::vector<std::string> out;
  for (const auto& n : collect_names(ast).assigned)
    if (!params_set.count(n)) out.push_back(n);
  return out;
}

FlatInstruction flatten_one(const InstrUnit& instr, const ModeCase* mode) {
  FlatInstruction flat;
  flat.instruction = instr.name;
  if (!mode) {
    flat.name = instr.name;
    flat.ast = instr.ast;
    flat.encoding = instr.encoding;
    flat.syntax = instr.syntax;
    flat.constraints = instr.constraints;
    flat.params = params_of(flat.encoding);
    flat.locals = locals_of(flat.ast, flat.params);
    return flat;
  }

  flat.mode = mode->name;
  flat.name = instr.name + "_" + mode->name;
  flat.encoding = merge_encodings(instr.encoding, mode->encoding, flat.name);

  std::map<std::string, FieldInfo> info;
  for (const EncodingTable* t : {&instr.encoding, &mode->encoding}) {
    for (const auto& f : t->fields) {
      if (f.is_constant) continue;
      FieldInfo fi = classify(f, flat.encoding);
      auto [it, inserted] = info.emplace(f.content, fi);
      if (!inserted && it->second.state != FieldState::Present) {
        if (fi.state == FieldState::Present ||
            (fi.state == FieldState::Fixed && it->second.state == FieldState::Absent))
          it->second = fi;
      }
    }
  }

  std::map<std::string, ExprPtr> subst;
  for (const auto& [name, fi] : info) {
    if (fi.state != FieldState::Fixed) continue;
    flat.fixed[name] = fi.value;
    subst[param_name(name)] = mk::num(fi.value);
  }

  Block ast = fold(substitute(mode->ast, subst));
  flat.mode_prefix = ast.size();
  const Block body = fold(substitute(instr.ast, subst));
  ast.insert(ast.end(), body.begin(), body.end());
  flat.ast = std::move(ast);

  flat.params = params_of(flat.encoding);
  const NameUse use = collect_names(flat.ast);
  for (const auto& [name, fi] : info) {
    const std::string p = param_name(name);
    if (fi.state == FieldState::Absent && use.read.count(p) && !use.assigned.count(p))
      throw Error("in " + flat.name + ": field " + name + " is only partially encoded");
  }
  check_bound(flat.ast, names_of(flat.params), flat.name);
  flat.locals = locals_of(flat.ast, flat.params);

  // Constraints on fields that became constant are decided here.
  std::vector<ValidityConstraint> all = instr.constraints;
  all.insert(all.end(), mode->constraints.begin(), mode->constraints.end());
  for (auto c : all) {
    const FieldInfo a = info.at(c.param_a);
    const bool two = c.kind == ValidityConstraint::Kind::ParamsDiffer;
    const FieldInfo b = two ? info.at(c.param_b) : FieldInfo{FieldState::Fixed, 0};
    if (a.state == FieldState::Absent || b.state == FieldState::Absent)
      throw Error("in " + flat.name + ": constraint '" + to_string(c) + "' on a field that is not encoded");
    if (a.state == FieldState::Fixed && b.state == FieldState::Fixed) {
      if (!c.holds(a.value, b.value))
        throw Error("in " + flat.name + ": constraint '" + to_string(c) + "' violated by fixed encoding");
      continue;
    }
    if (two && a.state == FieldState::Fixed) {
      c = ValidityConstraint{ValidityConstraint::Kind::NotEqualValue, c.subject, c.param_b, {}, {a.value}};
    } else if (two && b.state == FieldState::Fixed) {
      c = ValidityConstraint{ValidityConstraint::Kind::NotEqualValue, c.subject, c.param_a, {}, {b.value}};
    }
    if (std::find(flat.constraints.begin(), flat.constraints.end(), c) == flat.constraints.end())
      flat.constraints.push_back(c);
  }

  std::vector<SyntaxElement> elems;
  for (const auto& e : instr.syntax.elements) {
    if (e.kind == SyntaxElement::Kind::Placeholder && e.text == instr.family) {
      if (!mode->syntax.mnemonic.empty())
        elems.push_back({SyntaxElement::Kind::Literal, mode->syntax.mnemonic, {}, {}});
      elems.insert(elems.end(), mode->syntax.elements.begin(), mode->syntax.elements.end());
    } else {
      elems.push_back(e);
    }
  }
  flat.syntax = SyntaxTemplate{instr.syntax.mnemonic, merge_literals(std::move(elems))};
  std::vector<std::string> names;
  collect_syntax_names(flat.syntax.elements, names);
  for (auto n : names) {
    if (n == kSignPlaceholder) n = "U";
    auto it = info.find(n);
    if (it == info.end() || it->second.state == FieldState::Absent)
      throw Error("in " + flat.name + ": syntax refers to field " + n + " that is not encoded");
  }
  return flat;
}

}  // namespace

std::vector<FlatInstruction> flatten(const IsaDescription& desc) {
  std::vector<FlatInstruction> out;
  for (const auto& instr : desc.instructions) {
    if (instr.modes.empty()) {
      out.push_back(flatten_one(instr, nullptr));
      continue;
    }
    for (const auto& mname : instr.modes) {
      const ModeCase* mode = desc.find_mode(mname);
      if (!mode) throw Error("in " + instr.name + ": unknown mode " + mname);
      if (instr.patch) {
        const ModeCase patched = apply_patch(*mode, desc.patches.at(*instr.patch));
        out.push_back(flatten_one(instr, &patched));
      } else {
        out.push_back(flatten_one(instr, mode));
      }
    }
  }
  return out;
}

// ------------------------------------------------------------------ write-back

namespace {

bool has_memory(const Block& b) {
  bool found = false;
  visit(b, [&](const Expr& e) { found |= e.is<expr::Memory>(); });
  return found;
}

bool assigns_cpsr(const Block& b) {
  bool found = false;
  visit_stmts(b, [&](const Stmt& s) {
    if (auto* a = s.as<stmt::Assign>())
      if (auto* p = a->lhs->as<expr::StatusReg>(); p && p->which == Psr::Cpsr) found = true;
  });
  return found;
}

Block capture_register_writes(const Block& b, ExprPtr& target, const std::string& flat) {
  Block out;
  for (const auto& s : b) {
    if (auto* a = s->as<stmt::Assign>(); a && a->lhs->is<expr::Reg>()) {
      if (target && !equal(target, a->lhs))
        throw Error("in " + flat + ": mode writes more than one register");
      target = a->lhs;
      out.push_back(mk::assign(mk::var("wb_value"), a->rhs));
      out.push_back(mk::assign(mk::var("wb_enable"), mk::num(1)));
    } else if (auto* i = s->as<stmt::If>()) {
      out.push_back(mk::if_(i->cond, capture_register_writes(i->then_block, target, flat),
                            capture_register_writes(i->else_block, target, flat)));
    } else if (auto* f = s->as<stmt::For>()) {
      out.push_back(mk::for_(f->var, f->first, f->last, capture_register_writes(f->body, target, flat)));
    } else if (auto* q = s->as<stmt::Seq>()) {
      out.push_back(mk::seq(capture_register_writes(q->body, target, flat)));
    } else {
      out.push_back(s);
    }
  }
  return out;
}

}  // namespace

void move_writeback(FlatInstruction& flat) {
  if (flat.mode.empty() || flat.mode_prefix == 0) return;
  const Block prefix(flat.ast.begin(), flat.ast.begin() + static_cast<long>(flat.mode_prefix));
  const Block body(flat.ast.begin() + static_cast<long>(flat.mode_prefix), flat.ast.end());
  if (!has_memory(body)) return;

  ExprPtr target;
  Block captured = capture_register_writes(prefix, target, flat.name);
  if (!target) return;

  size_t last_mem = 0;
  for (size_t i = 0; i < body.size(); ++i)
    if (has_memory(Block{body[i]})) last_mem = i;

  const auto* reg = target->as<expr::Reg>();
  ExprPtr dest = target;
  Block out;
  if (!reg->mode && assigns_cpsr(body)) {
    out.push_back(mk::assign(mk::var("wb_mode"), mk::bits(mk::psr(Psr::Cpsr), mk::num(4), mk::num(0))));
    dest = mk::reg(reg->index, mk::var("wb_mode"));
  }
  out.push_back(mk::assign(mk::var("wb_enable"), mk::num(0)));
  out.insert(out.end(), captured.begin(), captured.end());
  const size_t new_prefix = out.size();
  for (size_t i = 0; i < body.size(); ++i) {
    out.push_back(body[i]);
    if (i == last_mem)
      out.push_back(mk::if_(mk::bin(BinaryOp::Eq, mk::var("wb_enable"), mk::num(1)),
                            {mk::assign(dest, mk::var("wb_value"))}));
  }
  flat.ast = std::move(out);
  flat.mode_prefix = new_prefix;
  flat.locals = locals_of(flat.ast, flat.params);
}

// ------------------------------------------------------------------ .opt files

OptSpec parse_opt(std::string_view text, const std::string& file) {
  OptSpec spec;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto c = raw.find("//"); c != std::string::npos) raw.erase(c);
    std::istringstream ls(raw);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw == "precompute") {
      std::string name, eq;
      ls >> name >> eq;
      std::string rest;
      std::getline(ls, rest);
      if (name.empty() || eq != "=" || rest.find_first_not_of(" \t") == std::string::npos)
        throw ParseError(file, line, 1, "", "expected 'precompute NAME = EXPR'");
      ExprPtr e;
      try {
        e = parse_expression(rest);
      } catch (const Error& err) {
        throw ParseError(file, line, 1, name, err.what());
      }
      spec.precompute.push_back({name, e});
    } else if (kw == "specialize") {
      SpecializeRule r;
      ls >> r.param;
      std::string v;
      while (ls >> v) r.values.push_back(static_cast<uint32_t>(std::stoul(v, nullptr, 0)));
      if (r.param.empty() || r.values.empty())
        throw ParseError(file, line, 1, "", "expected 'specialize PARAM v ...'");
      spec.specialize.push_back(std::move(r));
    } else {
      throw ParseError(file, line, 1, "", "unknown directive '" + kw + "'");
    }
  }
  return spec;
}

// ------------------------------------------------------------------ precompute

void precompute(std::vector<FlatInstruction>& flats, const std::vector<PrecomputeRule>& rules) {
  for (const auto& rule : rules)
    if (!is_static(rule.pattern, {}))
      throw Error("precompute " + rule.name + " = " + to_string(rule.pattern) + " is not static");
  for (auto& flat : flats) {
    for (const auto& rule : rules) {
      size_t count = 0;
      Block ast = replace_exp(flat.ast, rule.pattern, mk::var(rule.name), count);
      if (count == 0) continue;
      const std::set<std::string> locals(flat.locals.begin(), flat.locals.end());
      if (!is_static(rule.pattern, locals))
        throw Error("in " + flat.name + ": precompute " + rule.name + " = " + to_string(rule.pattern) +
                    " is not static");
      if (flat.param_index(rule.name) >= 0)
        throw Error("in " + flat.name + ": precompute name " + rule.name + " clashes with a parameter");
      check_bound({mk::assign(mk::var("_"), rule.pattern)}, names_of(flat.params), flat.name);
      flat.ast = std::move(ast);
      flat.decode_rules.push_back({rule.name, rule.pattern});
      flat.params.push_back(Param{rule.name, 32, false});
    }
  }
}

// ------------------------------------------------------------------ specialize

std::vector<FlatInstruction> specialize(const std::vector<FlatInstruction>& flats,
                                        const std::vector<SpecializeRule>& rules, uint64_t threshold) {
  std::vector<FlatInstruction> out;
  for (const auto& flat : flats) {
    out.push_back(flat);
    if (flat.is_variant() || flat.weight < threshold) continue;

    // Each dimension is a list of choices; nullopt keeps the parameter generic.
    std::vector<std::pair<std::string, std::vector<std::optional<uint32_t>>>> dims;
    for (const auto& r : rules) {
      if (flat.param_index(r.param) < 0) continue;
      std::vector<std::optional<uint32_t>> vs(r.values.begin(), r.values.end());
      dims.push_back({r.param, vs});
    }
    if (flat.param_index("cond") >= 0) dims.push_back({"cond", {std::nullopt, 14u}});
    if (dims.empty()) continue;

    std::vector<size_t> idx(dims.size(), 0);
    std::vector<FlatInstruction> variants;
    while (true) {
      std::vector<std::pair<std::string, uint32_t>> sel;
      for (size_t d = 0; d < dims.size(); ++d)
        if (auto v = dims[d].second[idx[d]]) sel.push_back({dims[d].first, *v});
      if (!sel.empty()) {
        FlatInstruction v = flat;
        v.generic = flat.name;
        v.selection = sel;
        v.name = flat.name + "_";
        std::map<std::string, ExprPtr> subst;
        for (const auto& [p, val] : sel) {
          subst[p] = mk::num(val);
          v.name += "_" + (p == "cond" && val == 14 ? std::string("AL") : p + std::to_string(val));
        }
        v.ast = fold(substitute(flat.ast, subst));
        for (auto& rule : v.decode_rules) rule.expr = substitute(rule.expr, subst);
        v.locals = locals_of(v.ast, v.params);
        v.weight = 0;
        variants.push_back(std::move(v));
      }
      size_t d = 0;
      for (; d < dims.size(); ++d) {
        if (++idx[d] < dims[d].second.size()) break;
        idx[d] = 0;
      }
      if (d == dims.size()) break;
    }
    // Most specialized first.
    std::stable_sort(variants.begin(), variants.end(), [](const auto& a, const auto& b) {
      return a.selection.size() > b.selection.size();
    });
    for (auto& v : variants) out.push_back(std::move(v));
  }
  return out;
}

// ------------------------------------------------------------------ profile

Profile parse_profile(std::string_view text) {
  Profile p;
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("profile", n, 1, "", "expected 'name<TAB>count'");
    try {
      p[line.substr(0, tab)] += std::stoull(line.substr(tab + 1));
    } catch (const std::logic_error&) {
      throw ParseError("profile", n, static_cast<int>(tab) + 2, "", "malformed count");
    }
  }
  return p;
}

std::string format_profile(const Profile& p) {
  std::ostringstream os;
  for (const auto& [name, count] : p) os << name << '\t' << count << '\n';
  return os.str();
}

std::vector<std::string> ingest_profile(std::vector<FlatInstruction>& flats, const Profile& profile) {
  std::map<std::string, uint64_t> by_generic;
  for (const auto& [name, count] : profile) {
    const size_t sep = name.find("__");
    by_generic[sep == std::string::npos ? name : name.substr(0, sep)] += count;
  }
  std::vector<std::string> warnings;
  for (const auto& [name, count] : by_generic) {
    const bool known = std::any_of(flats.begin(), flats.end(), [&](const FlatInstruction& f) { return f.name == name; });
    if (!known) warnings.push_back("profile names unknown instruction " + name);
  }
  for (auto& f : flats) {
    auto it = by_generic.find(f.name);
    f.weight = it == by_generic.end() ? 0 : it->second;
  }
  return warnings;
}

void prune_params(FlatInstruction& flat) {
  const NameUse use = collect_names(flat.ast);
  std::vector<Param> kept;
  for (const auto& p : flat.params)
    if (use.read.count(p.name)) kept.push_back(p);
  flat.params = std::move(kept);
  std::vector<DecodeRule> rules;
  for (const auto& r : flat.decode_rules)
    if (use.read.count(r.param)) rules.push_back(r);
  flat.decode_rules = std::move(rules);
}

}  // namespace issforge
