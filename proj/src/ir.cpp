#include "issforge/ir.hpp"

#include <type_traits>

#include "issforge/error.hpp"
#include "issforge/isa.hpp"
#include "issforge/runtime/builtins.hpp"

namespace issforge {

// ------------------------------------------------------------------ traversal

ExprPtr rewrite(const ExprPtr& e, const ExprRewrite& post) {
  if (!e) return e;
  ExprPtr rebuilt = std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, expr::Reg>) {
          auto i = rewrite(n.index, post);
          auto m = rewrite(n.mode, post);
          if (i == n.index && m == n.mode) return e;
          return mk::reg(i, m);
        } else if constexpr (std::is_same_v<T, expr::Binary>) {
          auto l = rewrite(n.lhs, post);
          auto r = rewrite(n.rhs, post);
          if (l == n.lhs && r == n.rhs) return e;
          return mk::bin(n.op, l, r);
        } else if constexpr (std::is_same_v<T, expr::Unary>) {
          auto o = rewrite(n.operand, post);
          if (o == n.operand) return e;
          return mk::un(n.op, o);
        } else if constexpr (std::is_same_v<T, expr::Call>) {
          std::vector<ExprPtr> args;
          bool changed = false;
          for (const auto& a : n.args) {
            args.push_back(rewrite(a, post));
            changed |= args.back() != a;
          }
          if (!changed) return e;
          return mk::call(n.name, std::move(args));
        } else if constexpr (std::is_same_v<T, expr::BitRange>) {
          auto b = rewrite(n.base, post);
          auto h = rewrite(n.hi, post);
          auto l = rewrite(n.lo, post);
          if (b == n.base && h == n.hi && l == n.lo) return e;
          return mk::bits(b, h, l);
        } else if constexpr (std::is_same_v<T, expr::Memory>) {
          auto a = rewrite(n.address, post);
          if (a == n.address) return e;
          return mk::mem(a, n.size);
        } else {
          return e;
        }
      },
      e->node);
  if (ExprPtr r = post(rebuilt)) return r;
  return rebuilt;
}

Block rewrite(const Block& b, const ExprRewrite& post) {
  Block out;
  out.reserve(b.size());
  for (const auto& s : b) {
    out.push_back(std::visit(
        [&](const auto& n) -> StmtPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, stmt::Assign>) {
            return mk::assign(rewrite(n.lhs, post), rewrite(n.rhs, post));
          } else if constexpr (std::is_same_v<T, stmt::If>) {
            return mk::if_(rewrite(n.cond, post), rewrite(n.then_block, post),
                           rewrite(n.else_block, post));
          } else if constexpr (std::is_same_v<T, stmt::Seq>) {
            return mk::seq(rewrite(n.body, post));
          } else if constexpr (std::is_same_v<T, stmt::Call>) {
            std::vector<ExprPtr> args;
            for (const auto& a : n.args) args.push_back(rewrite(a, post));
            return mk::call_stmt(n.name, std::move(args));
          } else if constexpr (std::is_same_v<T, stmt::For>) {
            return mk::for_(n.var, n.first, n.last, rewrite(n.body, post));
          } else {
            return s;
          }
        },
        s->node));
  }
  return out;
}

void visit(const ExprPtr& e, const std::function<void(const Expr&)>& fn) {
  if (!e) return;
  fn(*e);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, expr::Reg>) {
          visit(n.index, fn);
          visit(n.mode, fn);
        } else if constexpr (std::is_same_v<T, expr::Binary>) {
          visit(n.lhs, fn);
          visit(n.rhs, fn);
        } else if constexpr (std::is_same_v<T, expr::Unary>) {
          visit(n.operand, fn);
        } else if constexpr (std::is_same_v<T, expr::Call>) {
          for (const auto& a : n.args) visit(a, fn);
        } else if constexpr (std::is_same_v<T, expr::BitRange>) {
          visit(n.base, fn);
          visit(n.hi, fn);
          visit(n.lo, fn);
        } else if constexpr (std::is_same_v<T, expr::Memory>) {
          visit(n.address, fn);
        }
      },
      e->node);
}

void visit_stmts(const Block& b, const std::function<void(const Stmt&)>& fn) {
  for (const auto& s : b) {
    fn(*s);
    if (auto* i = s->as<stmt::If>()) {
      visit_stmts(i->then_block, fn);
      visit_stmts(i->else_block, fn);
    } else if (auto* q = s->as<stmt::Seq>()) {
      visit_stmts(q->body, fn);
    } else if (auto* f = s->as<stmt::For>()) {
      visit_stmts(f->body, fn);
    }
  }
}

void visit(const Block& b, const std::function<void(const Expr&)>& fn) {
  visit_stmts(b, [&](const Stmt& s) {
    if (auto* a = s.as<stmt::Assign>()) {
      visit(a->lhs, fn);
      visit(a->rhs, fn);
    } else if (auto* i = s.as<stmt::If>()) {
      visit(i->cond, fn);
    } else if (auto* c = s.as<stmt::Call>()) {
      for (const auto& x : c->args) visit(x, fn);
    }
  });
}

// ------------------------------------------------------------------ replacement

ExprPtr replace_exp(const ExprPtr& e, const ExprPtr& pattern, const ExprPtr& replacement,
                    size_t& count) {
  if (!e) return e;
  if (equal(e, pattern)) {
    ++count;
    return replacement;
  }
  // Top-down so that an enclosing match wins over matches inside it.
  return std::visit(
      [&](const auto& n) -> ExprPtr {
        using T = std::decay_t<decltype(n)>;
        auto r = [&](const ExprPtr& x) { return replace_exp(x, pattern, replacement, count); };
        if constexpr (std::is_same_v<T, expr::Reg>) {
          return mk::reg(r(n.index), r(n.mode));
        } else if constexpr (std::is_same_v<T, expr::Binary>) {
          return mk::bin(n.op, r(n.lhs), r(n.rhs));
        } else if constexpr (std::is_same_v<T, expr::Unary>) {
          return mk::un(n.op, r(n.operand));
        } else if constexpr (std::is_same_v<T, expr::Call>) {
          std::vector<ExprPtr> args;
          for (const auto& a : n.args) args.push_back(r(a));
          return mk::call(n.name, std::move(args));
        } else if constexpr (std::is_same_v<T, expr::BitRange>) {
          return mk::bits(r(n.base), r(n.hi), r(n.lo));
        } else if constexpr (std::is_same_v<T, expr::Memory>) {
          return mk::mem(r(n.address), n.size);
        } else {
          return e;
        }
      },
      e->node);
}

namespace {

Block map_exprs(const Block& b, const std::function<ExprPtr(const ExprPtr&)>& f) {
  Block out;
  for (const auto& s : b) {
    out.push_back(std::visit(
        [&](const auto& n) -> StmtPtr {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, stmt::Assign>) {
            return mk::assign(f(n.lhs), f(n.rhs));
          } else if constexpr (std::is_same_v<T, stmt::If>) {
            return mk::if_(f(n.cond), map_exprs(n.then_block, f), map_exprs(n.else_block, f));
          } else if constexpr (std::is_same_v<T, stmt::Seq>) {
            return mk::seq(map_exprs(n.body, f));
          } else if constexpr (std::is_same_v<T, stmt::Call>) {
            std::vector<ExprPtr> args;
            for (const auto& a : n.args) args.push_back(f(a));
            return mk::call_stmt(n.name, std::move(args));
          } else if constexpr (std::is_same_v<T, stmt::For>) {
            return mk::for_(n.var, n.first, n.last, map_exprs(n.body, f));
          } else {
            return s;
          }
        },
        s->node));
  }
  return out;
}

}  // namespace

Block replace_exp(const Block& b, const ExprPtr& pattern, const ExprPtr& replacement,
                  size_t& count) {
  return map_exprs(b, [&](const ExprPtr& e) { return replace_exp(e, pattern, replacement, count); });
}

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& vars) {
  return rewrite(e, [&](const ExprPtr& x) -> ExprPtr {
    if (auto* v = x->as<expr::Var>()) {
      auto it = vars.find(v->name);
      if (it != vars.end()) return it->second;
    }
    return nullptr;
  });
}

Block substitute(const Block& b, const std::map<std::string, ExprPtr>& vars) {
  return map_exprs(b, [&](const ExprPtr& e) { return substitute(e, vars); });
}

// ------------------------------------------------------------------ names

NameUse collect_names(const Block& b) {
  NameUse use;
  auto reads = [&](const ExprPtr& e) {
    visit(e, [&](const Expr& x) {
      if (auto* v = x.as<expr::Var>()) use.read.insert(v->name);
      if (auto* c = x.as<expr::Call>()) use.calls.insert(c->name);
    });
  };
  visit_stmts(b, [&](const Stmt& s) {
    if (auto* a = s.as<stmt::Assign>()) {
      reads(a->rhs);
      ExprPtr target = a->lhs;
      while (auto* br = target->as<expr::BitRange>()) {
        reads(br->hi);
        reads(br->lo);
        target = br->base;
      }
      if (auto* v = target->as<expr::Var>())
        use.assigned.insert(v->name);
      else
        reads(target);
    } else if (auto* i = s.as<stmt::If>()) {
      reads(i->cond);
    } else if (auto* c = s.as<stmt::Call>()) {
      use.calls.insert(c->name);
      for (const auto& x : c->args) reads(x);
    } else if (auto* f = s.as<stmt::For>()) {
      use.loop_vars.insert(f->var);
    }
  });
  return use;
}

void check_bound(const Block& b, const std::set<std::string>& params, const std::string& unit) {
  const NameUse use = collect_names(b);
  for (const auto& n : use.read) {
    if (params.count(n) || use.assigned.count(n) || use.loop_vars.count(n)) continue;
    throw Error("in " + unit + ": unbound identifier '" + n + "'");
  }
}

bool is_static(const ExprPtr& e, const std::set<std::string>& locals) {
  bool ok = true;
  visit(e, [&](const Expr& x) {
    if (x.is<expr::Reg>() || x.is<expr::FlagRef>() || x.is<expr::Memory>() ||
        x.is<expr::StatusReg>())
      ok = false;
    if (auto* v = x.as<expr::Var>(); v && locals.count(v->name)) ok = false;
    if (auto* c = x.as<expr::Call>()) {
      const BuiltinInfo* b = find_builtin(c->name);
      if (!b || b->kind != BuiltinInfo::Kind::Pure) ok = false;
    }
  });
  return ok;
}

// ------------------------------------------------------------------ evaluation

std::optional<uint32_t> call_pure_builtin(const std::string& name,
                                          const std::vector<uint32_t>& a) {
  using namespace rt;
  const BuiltinInfo* b = find_builtin(name);
  if (!b || b->kind != BuiltinInfo::Kind::Pure || a.size() != b->arity) return std::nullopt;
  if (name == "NbOfSetBitsIn") return NbOfSetBitsIn(a[0]);
  if (name == "SignExtend") return SignExtend(a[0], a[1]);
  if (name == "Logical_Shift_Left") return Logical_Shift_Left(a[0], a[1]);
  if (name == "Logical_Shift_Right") return Logical_Shift_Right(a[0], a[1]);
  if (name == "Arithmetic_Shift_Right") return Arithmetic_Shift_Right(a[0], a[1]);
  if (name == "Rotate_Right") return Rotate_Right(a[0], a[1]);
  if (name == "CarryFromAdd2") return CarryFromAdd2(a[0], a[1]);
  if (name == "CarryFromAdd3") return CarryFromAdd3(a[0], a[1], a[2]);
  if (name == "BorrowFromSub2") return BorrowFromSub2(a[0], a[1]);
  if (name == "BorrowFromSub3") return BorrowFromSub3(a[0], a[1], a[2]);
  if (name == "OverflowFromAdd2") return OverflowFromAdd2(a[0], a[1]);
  if (name == "OverflowFromAdd3") return OverflowFromAdd3(a[0], a[1], a[2]);
  if (name == "OverflowFromSub2") return OverflowFromSub2(a[0], a[1]);
  if (name == "OverflowFromSub3") return OverflowFromSub3(a[0], a[1], a[2]);
  if (name == "SignedSatAdd2") return SignedSatAdd2(a[0], a[1], a[2]);
  if (name == "SignedSatSub2") return SignedSatSub2(a[0], a[1], a[2]);
  return std::nullopt;
}

static uint32_t apply(BinaryOp op, uint32_t a, uint32_t b) {
  switch (op) {
    case BinaryOp::Add: return a + b;
    case BinaryOp::Sub: return a - b;
    case BinaryOp::Mul: return a * b;
    case BinaryOp::BitAnd: return a & b;
    case BinaryOp::BitOr: return a | b;
    case BinaryOp::BitXor: return a ^ b;
    case BinaryOp::Eq: return a == b;
    case BinaryOp::Ne: return a != b;
    case BinaryOp::Lt: return a < b;
    case BinaryOp::Le: return a <= b;
    case BinaryOp::Gt: return a > b;
    case BinaryOp::Ge: return a >= b;
    case BinaryOp::LogAnd: return a != 0 && b != 0;
    case BinaryOp::LogOr: return a != 0 || b != 0;
  }
  return 0;
}

std::optional<uint32_t> evaluate(const ExprPtr& e, const std::map<std::string, uint32_t>& env) {
  if (!e) return std::nullopt;
  if (auto* n = e->as<expr::Num>()) return n->value;
  if (auto* v = e->as<expr::Var>()) {
    auto it = env.find(v->name);
    if (it == env.end()) return std::nullopt;
    return it->second;
  }
  if (auto* b = e->as<expr::Binary>()) {
    auto l = evaluate(b->lhs, env);
    if (!l) return std::nullopt;
    if (b->op == BinaryOp::LogAnd && *l == 0) return 0u;
    if (b->op == BinaryOp::LogOr && *l != 0) return 1u;
    auto r = evaluate(b->rhs, env);
    if (!r) return std::nullopt;
    return apply(b->op, *l, *r);
  }
  if (auto* u = e->as<expr::Unary>()) {
    auto o = evaluate(u->operand, env);
    if (!o) return std::nullopt;
    return u->op == UnaryOp::LogNot ? uint32_t{*o == 0} : ~*o;
  }
  if (auto* r = e->as<expr::BitRange>()) {
    auto base = evaluate(r->base, env);
    auto hi = evaluate(r->hi, env);
    if (!base || !hi) return std::nullopt;
    if (!r->lo) return rt::bit(*base, *hi);
    auto lo = evaluate(r->lo, env);
    if (!lo) return std::nullopt;
    return rt::bits(*base, *hi, *lo);
  }
  if (auto* c = e->as<expr::Call>()) {
    std::vector<uint32_t> args;
    for (const auto& a : c->args) {
      auto v = evaluate(a, env);
      if (!v) return std::nullopt;
      args.push_back(*v);
    }
    return call_pure_builtin(c->name, args);
  }
  return std::nullopt;
}

// ------------------------------------------------------------------ folding

namespace {

bool is_boolean(const ExprPtr& e) {
  if (auto* b = e->as<expr::Binary>()) {
    switch (b->op) {
      case BinaryOp::Eq: case BinaryOp::Ne: case BinaryOp::Lt: case BinaryOp::Le:
      case BinaryOp::Gt: case BinaryOp::Ge: case BinaryOp::LogAnd: case BinaryOp::LogOr:
        return true;
      default:
        return false;
    }
  }
  if (auto* u = e->as<expr::Unary>()) return u->op == UnaryOp::LogNot;
  if (auto* n = e->as<expr::Num>()) return n->value <= 1;
  if (auto* c = e->as<expr::Call>()) {
    return c->name == "ConditionPassed" || c->name == "CurrentModeHasSPSR" ||
           c->name == "InAPrivilegedMode";
  }
  return false;
}

ExprPtr as_boolean(const ExprPtr& e) {
  return is_boolean(e) ? e : mk::bin(BinaryOp::Ne, e, mk::num(0));
}

std::optional<BinaryOp> negated(BinaryOp op) {
  switch (op) {
    case BinaryOp::Eq: return BinaryOp::Ne;
    case BinaryOp::Ne: return BinaryOp::Eq;
    case BinaryOp::Lt: return BinaryOp::Ge;
    case BinaryOp::Ge: return BinaryOp::Lt;
    case BinaryOp::Gt: return BinaryOp::Le;
    case BinaryOp::Le: return BinaryOp::Gt;
    default: return std::nullopt;
  }
}

const uint32_t* num_of(const ExprPtr& e) {
  auto* n = e ? e->as<expr::Num>() : nullptr;
  return n ? &n->value : nullptr;
}

ExprPtr fold_node(const ExprPtr& e) {
  if (auto* b = e->as<expr::Binary>()) {
    const uint32_t* l = num_of(b->lhs);
    const uint32_t* r = num_of(b->rhs);
    if (l && r) return mk::num(apply(b->op, *l, *r));
    switch (b->op) {
      case BinaryOp::LogAnd:
        if (l) return *l ? as_boolean(b->rhs) : mk::num(0);
        if (r && *r) return as_boolean(b->lhs);
        break;
      case BinaryOp::LogOr:
        if (l) return *l ? mk::num(1) : as_boolean(b->rhs);
        if (r && !*r) return as_boolean(b->lhs);
        break;
      case BinaryOp::Add:
      case BinaryOp::BitOr:
      case BinaryOp::BitXor:
        if (r && *r == 0) return b->lhs;
        if (l && *l == 0) return b->rhs;
        break;
      case BinaryOp::Sub:
        if (r && *r == 0) return b->lhs;
        break;
      case BinaryOp::Mul:
        if (r && *r == 1) return b->lhs;
        if (l && *l == 1) return b->rhs;
        break;
      default:
        break;
    }
    return nullptr;
  }
  if (auto* u = e->as<expr::Unary>()) {
    if (const uint32_t* o = num_of(u->operand))
      return mk::num(u->op == UnaryOp::LogNot ? uint32_t{*o == 0} : ~*o);
    if (u->op == UnaryOp::LogNot) {
      if (auto* inner = u->operand->as<expr::Binary>()) {
        if (auto neg = negated(inner->op)) return mk::bin(*neg, inner->lhs, inner->rhs);
      }
      if (auto* inner = u->operand->as<expr::Unary>(); inner && inner->op == UnaryOp::LogNot)
        return as_boolean(inner->operand);
    }
    return nullptr;
  }
  if (auto* c = e->as<expr::Call>()) {
    if (c->name == "ConditionPassed") {
      if (const uint32_t* cond = num_of(c->args[0]); cond && *cond >= 14) return mk::num(1);
      return nullptr;
    }
    std::vector<uint32_t> args;
    for (const auto& a : c->args) {
      const uint32_t* v = num_of(a);
      if (!v) return nullptr;
      args.push_back(*v);
    }
    if (auto v = call_pure_builtin(c->name, args)) return mk::num(*v);
    return nullptr;
  }
  if (auto* r = e->as<expr::BitRange>()) {
    const uint32_t* base = num_of(r->base);
    const uint32_t* hi = num_of(r->hi);
    if (!base || !hi) return nullptr;
    if (!r->lo) return mk::num(rt::bit(*base, *hi));
    if (const uint32_t* lo = num_of(r->lo)) return mk::num(rt::bits(*base, *hi, *lo));
    return nullptr;
  }
  return nullptr;
}

bool has_memory(const ExprPtr& e) {
  bool found = false;
  visit(e, [&](const Expr& x) { found |= x.is<expr::Memory>(); });
  return found;
}

void fold_into(const Block& in, Block& out) {
  for (const auto& s : in) {
    if (auto* a = s->as<stmt::Assign>()) {
      out.push_back(mk::assign(fold(a->lhs), fold(a->rhs)));
    } else if (auto* i = s->as<stmt::If>()) {
      ExprPtr cond = fold(i->cond);
      if (const uint32_t* v = num_of(cond)) {
        fold_into(*v ? i->then_block : i->else_block, out);
        continue;
      }
      Block then_b = fold(i->then_block);
      Block else_b = fold(i->else_block);
      if (then_b.empty() && else_b.empty()) {
        if (!has_memory(cond)) continue;
        out.push_back(mk::if_(cond, {}, {}));
      } else if (then_b.empty()) {
        out.push_back(mk::if_(fold(mk::un(UnaryOp::LogNot, cond)), std::move(else_b)));
      } else {
        out.push_back(mk::if_(cond, std::move(then_b), std::move(else_b)));
      }
    } else if (auto* q = s->as<stmt::Seq>()) {
      fold_into(q->body, out);
    } else if (s->is<stmt::Nop>()) {
      continue;
    } else if (auto* f = s->as<stmt::For>()) {
      Block body = fold(f->body);
      if (body.empty() || f->first > f->last) continue;
      out.push_back(mk::for_(f->var, f->first, f->last, std::move(body)));
    } else if (auto* c = s->as<stmt::Call>()) {
      std::vector<ExprPtr> args;
      for (const auto& x : c->args) args.push_back(fold(x));
      out.push_back(mk::call_stmt(c->name, std::move(args)));
    } else {
      out.push_back(s);
    }
  }
}

}  // namespace

ExprPtr fold(const ExprPtr& e) { return rewrite(e, fold_node); }

Block fold(const Block& b) {
  Block out;
  fold_into(b, out);
  return out;
}

}  // namespace issforge
