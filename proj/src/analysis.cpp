#include "issforge/analysis.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

#include "issforge/error.hpp"
#include "issforge/ingest.hpp"
#include "issforge/ir.hpp"

namespace issforge {

// ------------------------------------------------------------------ simplify

namespace {

struct Facts {
  std::map<std::string, std::set<uint32_t>> excluded;  // param -> values it cannot take
  std::set<std::pair<std::string, std::string>> distinct;

  explicit Facts(const std::vector<ValidityConstraint>& cs) {
    for (const auto& c : cs) {
      const std::string a = param_name(c.param_a);
      switch (c.kind) {
        case ValidityConstraint::Kind::NotEqualValue:
        case ValidityConstraint::Kind::NotIn:
          excluded[a].insert(c.values.begin(), c.values.end());
          break;
        case ValidityConstraint::Kind::ParamsDiffer: {
          const std::string b = param_name(c.param_b);
          distinct.insert({a, b});
          distinct.insert({b, a});
          break;
        }
      }
    }
  }
};

// `x == k` or `x != k` with x a variable; normalizes `k == x`.
struct Atom {
  std::string var;
  uint32_t value;
  bool equal;
};

std::optional<Atom> atom_of(const ExprPtr& e) {
  auto* b = e->as<expr::Binary>();
  if (!b || (b->op != BinaryOp::Eq && b->op != BinaryOp::Ne)) return std::nullopt;
  auto* v = b->lhs->as<expr::Var>();
  auto* n = b->rhs->as<expr::Num>();
  if (!v || !n) {
    v = b->rhs->as<expr::Var>();
    n = b->lhs->as<expr::Num>();
  }
  if (!v || !n) return std::nullopt;
  return Atom{v->name, n->value, b->op == BinaryOp::Eq};
}

ExprPtr atom_expr(const Atom& a) {
  return mk::bin(a.equal ? BinaryOp::Eq : BinaryOp::Ne, mk::var(a.var), mk::num(a.value));
}

void flatten_op(const ExprPtr& e, BinaryOp op, std::vector<ExprPtr>& out) {
  if (auto* b = e->as<expr::Binary>(); b && b->op == op) {
    flatten_op(b->lhs, op, out);
    flatten_op(b->rhs, op, out);
  } else {
    out.push_back(e);
  }
}

const uint32_t* num_of(const ExprPtr& e) {
  auto* n = e->as<expr::Num>();
  return n ? &n->value : nullptr;
}

// Two atoms on the same variable: can both hold (conj) / must one hold (disj).
bool contradict(const Atom& a, const Atom& b) {
  if (a.var != b.var) return false;
  if (a.equal && b.equal) return a.value != b.value;
  if (a.equal != b.equal) return a.value == b.value;
  return false;
}

ExprPtr simplify_rec(const ExprPtr& e, const Facts& facts) {
  ExprPtr f = fold(e);
  if (auto a = atom_of(f)) {
    auto it = facts.excluded.find(a->var);
    if (it != facts.excluded.end() && it->second.count(a->value)) return mk::num(a->equal ? 0 : 1);
    return atom_expr(*a);
  }
  if (auto* b = f->as<expr::Binary>()) {
    if ((b->op == BinaryOp::Eq || b->op == BinaryOp::Ne) && b->lhs->is<expr::Var>() &&
        b->rhs->is<expr::Var>()) {
      const auto& x = b->lhs->as<expr::Var>()->name;
      const auto& y = b->rhs->as<expr::Var>()->name;
      if (facts.distinct.count({x, y})) return mk::num(b->op == BinaryOp::Eq ? 0 : 1);
      return f;
    }
    if (b->op != BinaryOp::LogAnd && b->op != BinaryOp::LogOr) return f;
    const bool conj = b->op == BinaryOp::LogAnd;
    std::vector<ExprPtr> parts, kept;
    flatten_op(f, b->op, parts);
    std::vector<Atom> atoms;
    for (const auto& p : parts) {
      ExprPtr s = simplify_rec(p, facts);
      if (const uint32_t* v = num_of(s)) {
        if ((*v != 0) == conj) continue;  // identity element
        return mk::num(conj ? 0 : 1);     // absorbing element
      }
      if (std::any_of(kept.begin(), kept.end(), [&](const ExprPtr& k) { return equal(k, s); }))
        continue;
      if (auto a = atom_of(s)) {
        for (const auto& o : atoms) {
          // x==k and x!=k / x==k and x==j are unsatisfiable; x==k or x!=k is valid.
          if (conj && contradict(*a, o)) return mk::num(0);
          if (!conj && a->var == o.var && a->equal != o.equal && a->value == o.value)
            return mk::num(1);
        }
        atoms.push_back(*a);
      }
      kept.push_back(s);
    }
    if (kept.empty()) return mk::num(conj ? 1 : 0);
    ExprPtr out = kept[0];
    for (size_t i = 1; i < kept.size(); ++i) out = mk::bin(b->op, out, kept[i]);
    return out;
  }
  return f;
}

}  // namespace

ExprPtr simplify(const ExprPtr& e, const std::vector<ValidityConstraint>& facts) {
  return simplify_rec(e, Facts(facts));
}

// ------------------------------------------------------------------ may-branch

namespace {

class MayBranch {
 public:
  MayBranch(const FlatInstruction& flat, std::vector<std::string>* warnings)
      : flat_(flat), warnings_(warnings) {
    for (const auto& p : flat.params) params_.insert(p.name);
    for (const auto& r : flat.decode_rules) params_.insert(r.param);
  }

  ExprPtr run() {
    walk(flat_.ast, {});
    ExprPtr out = mk::num(0);
    for (const auto& c : contributions_) out = mk::bin(BinaryOp::LogOr, out, c);
    return simplify(out, flat_.constraints);
  }

 private:
  using Path = std::vector<ExprPtr>;

  // Expression over parameters only, after substituting bound loop variables.
  bool over_params(const ExprPtr& e) const {
    bool ok = true;
    visit(e, [&](const Expr& x) {
      if (x.is<expr::Reg>() || x.is<expr::FlagRef>() || x.is<expr::Memory>() ||
          x.is<expr::StatusReg>())
        ok = false;
      if (auto* v = x.as<expr::Var>(); v && !params_.count(v->name)) ok = false;
      if (auto* c = x.as<expr::Call>()) {
        const BuiltinInfo* b = find_builtin(c->name);
        if (!b || b->kind != BuiltinInfo::Kind::Pure) ok = false;
      }
    });
    return ok;
  }

  ExprPtr bind(const ExprPtr& e) const { return fold(substitute(e, loop_env_)); }

  // Sound abstraction of a branch condition: implied by `cond` (or by its
  // negation when `positive` is false).
  ExprPtr abstract(const ExprPtr& cond, bool positive) const {
    if (const uint32_t* v = num_of(cond)) return mk::num(((*v != 0) == positive) ? 1 : 0);
    if (auto* u = cond->as<expr::Unary>(); u && u->op == UnaryOp::LogNot)
      return abstract(u->operand, !positive);
    if (auto* b = cond->as<expr::Binary>()) {
      if (b->op == BinaryOp::LogAnd || b->op == BinaryOp::LogOr) {
        const bool as_and = (b->op == BinaryOp::LogAnd) == positive;
        return mk::bin(as_and ? BinaryOp::LogAnd : BinaryOp::LogOr, abstract(b->lhs, positive),
                       abstract(b->rhs, positive));
      }
      if (over_params(cond)) return positive ? cond : fold(mk::un(UnaryOp::LogNot, cond));
      return mk::num(1);
    }
    if (over_params(cond)) {
      return mk::bin(positive ? BinaryOp::Ne : BinaryOp::Eq, cond, mk::num(0));
    }
    return mk::num(1);
  }

  void contribute(const Path& path, ExprPtr atom) {
    ExprPtr c = atom;
    for (const auto& p : path) c = mk::bin(BinaryOp::LogAnd, p, c);
    contributions_.push_back(c);
  }

  void walk(const Block& b, const Path& path) {
    for (const auto& s : b) {
      if (auto* a = s->as<stmt::Assign>()) {
        auto* reg = a->lhs->as<expr::Reg>();
        if (!reg) continue;
        ExprPtr index = bind(reg->index);
        if (const uint32_t* v = num_of(index)) {
          if (*v == 15) contribute(path, mk::num(1));
        } else if (auto* var = index->as<expr::Var>(); var && narrow_loops_.count(var->name)) {
          // loop counter whose range excludes 15
        } else if (over_params(index)) {
          contribute(path, mk::bin(BinaryOp::Eq, index, mk::num(15)));
        } else {
          if (warnings_)
            warnings_->push_back(flat_.name + ": cannot classify register index " +
                                 to_string(reg->index) + "; assuming it may be PC");
          contribute(path, mk::num(1));
        }
      } else if (auto* i = s->as<stmt::If>()) {
        ExprPtr cond = bind(i->cond);
        Path then_path = path, else_path = path;
        then_path.push_back(abstract(cond, true));
        else_path.push_back(abstract(cond, false));
        walk(i->then_block, then_path);
        walk(i->else_block, else_path);
      } else if (auto* q = s->as<stmt::Seq>()) {
        walk(q->body, path);
      } else if (auto* f = s->as<stmt::For>()) {
        // Only the iteration that can name R15 matters.
        if (f->first <= 15 && 15 <= f->last) {
          loop_env_[f->var] = mk::num(15);
          walk(f->body, path);
          loop_env_.erase(f->var);
        } else {
          narrow_loops_.insert(f->var);
          walk(f->body, path);
          narrow_loops_.erase(f->var);
        }
      }
    }
  }

  const FlatInstruction& flat_;
  std::vector<std::string>* warnings_;
  std::set<std::string> params_;
  std::map<std::string, ExprPtr> loop_env_;
  std::set<std::string> narrow_loops_;
  std::vector<ExprPtr> contributions_;
};

}  // namespace

ExprPtr may_branch(const FlatInstruction& flat, std::vector<std::string>* warnings) {
  return MayBranch(flat, warnings).run();
}

std::map<std::string, ExprPtr> parse_overrides(std::string_view text, const std::string& file) {
  std::map<std::string, ExprPtr> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto c = raw.find("//"); c != std::string::npos) raw.erase(c);
    std::istringstream ls(raw);
    std::string name;
    if (!(ls >> name)) continue;
    std::string rest;
    std::getline(ls, rest);
    const size_t b = rest.find_first_not_of(" \t");
    if (b == std::string::npos) throw ParseError(file, line, 1, name, "expected always, never or an expression");
    rest = rest.substr(b);
    ExprPtr e;
    if (rest == "always") {
      e = mk::num(1);
    } else if (rest == "never") {
      e = mk::num(0);
    } else {
      try {
        e = parse_expression(rest);
      } catch (const Error& err) {
        throw ParseError(file, line, 1, name, err.what());
      }
    }
    if (!out.emplace(name, e).second) throw ParseError(file, line, 1, name, "duplicate override");
  }
  return out;
}

void annotate_may_branch(std::vector<FlatInstruction>& flats,
                         const std::map<std::string, ExprPtr>& overrides,
                         std::vector<std::string>* warnings) {
  for (auto& f : flats) {
    auto it = overrides.find(f.name);
    if (it == overrides.end() && f.is_variant()) it = overrides.find(f.generic);
    if (it == overrides.end()) it = overrides.find(f.instruction);
    f.may_branch = it != overrides.end() ? it->second : may_branch(f, warnings);
  }
}

}  // namespace issforge
