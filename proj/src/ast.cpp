#include "issforge/ast.hpp"

#include <cctype>
#include <sstream>

namespace issforge {

namespace mk {

ExprPtr var(std::string name) {
  return std::make_shared<Expr>(Expr{expr::Var{std::move(name)}});
}
ExprPtr num(uint32_t value) { return std::make_shared<Expr>(Expr{expr::Num{value}}); }
ExprPtr reg(ExprPtr index, ExprPtr mode) {
  return std::make_shared<Expr>(Expr{expr::Reg{std::move(index), std::move(mode)}});
}
ExprPtr bin(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<Expr>(Expr{expr::Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr un(UnaryOp op, ExprPtr operand) {
  return std::make_shared<Expr>(Expr{expr::Unary{op, std::move(operand)}});
}
ExprPtr call(std::string name, std::vector<ExprPtr> args) {
  return std::make_shared<Expr>(Expr{expr::Call{std::move(name), std::move(args)}});
}
ExprPtr bits(ExprPtr base, ExprPtr hi, ExprPtr lo) {
  return std::make_shared<Expr>(
      Expr{expr::BitRange{std::move(base), std::move(hi), std::move(lo)}});
}
ExprPtr flag(Flag f) { return std::make_shared<Expr>(Expr{expr::FlagRef{f}}); }
ExprPtr mem(ExprPtr address, unsigned size) {
  return std::make_shared<Expr>(Expr{expr::Memory{std::move(address), size}});
}
ExprPtr psr(Psr which) { return std::make_shared<Expr>(Expr{expr::StatusReg{which}}); }
ExprPtr truth(bool b) { return num(b ? 1 : 0); }

StmtPtr assign(ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<Stmt>(Stmt{stmt::Assign{std::move(lhs), std::move(rhs)}});
}
StmtPtr if_(ExprPtr cond, Block then_block, Block else_block) {
  return std::make_shared<Stmt>(
      Stmt{stmt::If{std::move(cond), std::move(then_block), std::move(else_block)}});
}
StmtPtr seq(Block body) { return std::make_shared<Stmt>(Stmt{stmt::Seq{std::move(body)}}); }
StmtPtr call_stmt(std::string name, std::vector<ExprPtr> args) {
  return std::make_shared<Stmt>(Stmt{stmt::Call{std::move(name), std::move(args)}});
}
StmtPtr unpredictable() { return std::make_shared<Stmt>(Stmt{stmt::Unpredictable{}}); }
StmtPtr nop() { return std::make_shared<Stmt>(Stmt{stmt::Nop{}}); }
StmtPtr for_(std::string var, uint32_t first, uint32_t last, Block body) {
  return std::make_shared<Stmt>(
      Stmt{stmt::For{std::move(var), first, last, std::move(body)}});
}

}  // namespace mk

// ------------------------------------------------------------------ equality

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return a == b || equal(*a, *b);
}

static bool equal_args(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!equal(a[i], b[i])) return false;
  return true;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, expr::Var>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, expr::Num>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, expr::Reg>) {
          return equal(x.index, y.index) && equal(x.mode, y.mode);
        } else if constexpr (std::is_same_v<T, expr::Binary>) {
          return x.op == y.op && equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, expr::Unary>) {
          return x.op == y.op && equal(x.operand, y.operand);
        } else if constexpr (std::is_same_v<T, expr::Call>) {
          return x.name == y.name && equal_args(x.args, y.args);
        } else if constexpr (std::is_same_v<T, expr::BitRange>) {
          return equal(x.base, y.base) && equal(x.hi, y.hi) && equal(x.lo, y.lo);
        } else if constexpr (std::is_same_v<T, expr::FlagRef>) {
          return x.flag == y.flag;
        } else if constexpr (std::is_same_v<T, expr::Memory>) {
          return x.size == y.size && equal(x.address, y.address);
        } else {
          return x.which == y.which;
        }
      },
      a.node);
}

bool equal(const Block& a, const Block& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!equal(*a[i], *b[i])) return false;
  return true;
}

bool equal(const Stmt& a, const Stmt& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, stmt::Assign>) {
          return equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, stmt::If>) {
          return equal(x.cond, y.cond) && equal(x.then_block, y.then_block) &&
                 equal(x.else_block, y.else_block);
        } else if constexpr (std::is_same_v<T, stmt::Seq>) {
          return equal(x.body, y.body);
        } else if constexpr (std::is_same_v<T, stmt::Call>) {
          return x.name == y.name && equal_args(x.args, y.args);
        } else if constexpr (std::is_same_v<T, stmt::For>) {
          return x.var == y.var && x.first == y.first && x.last == y.last &&
                 equal(x.body, y.body);
        } else {
          return true;
        }
      },
      a.node);
}

// ------------------------------------------------------------------ printing

const char* op_token(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::BitAnd: return "AND";
    case BinaryOp::BitOr: return "OR";
    case BinaryOp::BitXor: return "EOR";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::LogAnd: return "and";
    case BinaryOp::LogOr: return "or";
  }
  return "?";
}

// Larger binds tighter. Unary `not` sits at 3, unary NOT at 9, postfix at 10.
int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::LogOr: return 1;
    case BinaryOp::LogAnd: return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge: return 4;
    case BinaryOp::BitOr:
    case BinaryOp::BitXor: return 5;
    case BinaryOp::BitAnd: return 6;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 7;
    case BinaryOp::Mul: return 8;
  }
  return 0;
}

const char* flag_name(Flag f) {
  switch (f) {
    case Flag::N: return "N";
    case Flag::Z: return "Z";
    case Flag::C: return "C";
    case Flag::V: return "V";
  }
  return "?";
}

bool is_register_field(const std::string& field) {
  return field.size() == 2 && field[0] == 'R' && std::islower(static_cast<unsigned char>(field[1]));
}

std::string param_name(const std::string& field) {
  return is_register_field(field) ? field.substr(1) : field;
}

namespace {

constexpr int kPostfixPrec = 10;

int expr_prec(const Expr& e) {
  if (auto* b = e.as<expr::Binary>()) return precedence(b->op);
  if (auto* u = e.as<expr::Unary>()) return u->op == UnaryOp::LogNot ? 3 : 9;
  return kPostfixPrec;
}

void print_num(std::ostream& os, uint32_t v) {
  if (v < 0x10000) {
    os << v;
  } else {
    std::ostringstream hex;
    hex << std::hex << std::uppercase << v;
    os << "0x" << hex.str();
  }
}

void print_expr(std::ostream& os, const Expr& e, int ctx);

void print_args(std::ostream& os, const std::vector<ExprPtr>& args) {
  os << '(';
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) os << ", ";
    print_expr(os, *args[i], 0);
  }
  os << ')';
}

void print_expr(std::ostream& os, const Expr& e, int ctx) {
  const bool parens = expr_prec(e) < ctx;
  if (parens) os << '(';
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, expr::Var>) {
          os << x.name;
        } else if constexpr (std::is_same_v<T, expr::Num>) {
          print_num(os, x.value);
        } else if constexpr (std::is_same_v<T, expr::Reg>) {
          const auto* v = x.index->template as<expr::Var>();
          const auto* n = x.index->template as<expr::Num>();
          if (!x.mode && v && is_register_field("R" + v->name)) {
            os << 'R' << v->name;
          } else if (!x.mode && n && n->value == 15) {
            os << "PC";
          } else if (!x.mode && n && n->value < 15) {
            os << 'R' << n->value;
          } else {
            os << "R[";
            print_expr(os, *x.index, 0);
            if (x.mode) {
              os << ", ";
              print_expr(os, *x.mode, 0);
            }
            os << ']';
          }
        } else if constexpr (std::is_same_v<T, expr::Binary>) {
          const int p = precedence(x.op);
          const bool cmp = p == 4;
          print_expr(os, *x.lhs, cmp ? p + 1 : p);
          os << ' ' << op_token(x.op) << ' ';
          print_expr(os, *x.rhs, p + 1);
        } else if constexpr (std::is_same_v<T, expr::Unary>) {
          if (x.op == UnaryOp::LogNot) {
            os << "not ";
            print_expr(os, *x.operand, 3);
          } else {
            os << "NOT ";
            print_expr(os, *x.operand, 9);
          }
        } else if constexpr (std::is_same_v<T, expr::Call>) {
          os << x.name;
          print_args(os, x.args);
        } else if constexpr (std::is_same_v<T, expr::BitRange>) {
          print_expr(os, *x.base, kPostfixPrec);
          os << '[';
          print_expr(os, *x.hi, 0);
          if (x.lo) {
            os << ':';
            print_expr(os, *x.lo, 0);
          }
          os << ']';
        } else if constexpr (std::is_same_v<T, expr::FlagRef>) {
          os << flag_name(x.flag) << " Flag";
        } else if constexpr (std::is_same_v<T, expr::Memory>) {
          os << "Memory[";
          print_expr(os, *x.address, 0);
          os << ", " << x.size << ']';
        } else {
          os << (x.which == Psr::Cpsr ? "CPSR" : "SPSR");
        }
      },
      e.node);
  if (parens) os << ')';
}

void print_block(std::ostream& os, const Block& block, int indent);

void print_stmt(std::ostream& os, const Stmt& s, int indent) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, stmt::Assign>) {
          os << pad;
          print_expr(os, *x.lhs, 0);
          os << " = ";
          print_expr(os, *x.rhs, 0);
          os << '\n';
        } else if constexpr (std::is_same_v<T, stmt::If>) {
          os << pad << "if ";
          print_expr(os, *x.cond, 0);
          os << " then\n";
          print_block(os, x.then_block, indent + 1);
          const stmt::If* chain = &x;
          while (!chain->else_block.empty()) {
            const auto* nested = chain->else_block.size() == 1
                                     ? chain->else_block[0]->template as<stmt::If>()
                                     : nullptr;
            if (!nested) {
              os << pad << "else\n";
              print_block(os, chain->else_block, indent + 1);
              break;
            }
            os << pad << "else if ";
            print_expr(os, *nested->cond, 0);
            os << " then\n";
            print_block(os, nested->then_block, indent + 1);
            chain = nested;
          }
        } else if constexpr (std::is_same_v<T, stmt::Seq>) {
          for (const auto& inner : x.body) print_stmt(os, *inner, indent);
        } else if constexpr (std::is_same_v<T, stmt::Call>) {
          os << pad << x.name;
          print_args(os, x.args);
          os << '\n';
        } else if constexpr (std::is_same_v<T, stmt::Unpredictable>) {
          os << pad << "UNPREDICTABLE\n";
        } else if constexpr (std::is_same_v<T, stmt::Nop>) {
          os << pad << "Nop\n";
        } else {
          os << pad << "for " << x.var << " = " << x.first << " to " << x.last << '\n';
          print_block(os, x.body, indent + 1);
        }
      },
      s.node);
}

void print_block(std::ostream& os, const Block& block, int indent) {
  if (block.empty()) {
    os << std::string(static_cast<size_t>(indent) * 2, ' ') << "Nop\n";
    return;
  }
  for (const auto& s : block) print_stmt(os, *s, indent);
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e, 0);
  return os.str();
}

std::string to_string(const ExprPtr& e) { return e ? to_string(*e) : std::string("<null>"); }

std::string to_string(const Block& block, int indent) {
  std::ostringstream os;
  print_block(os, block, indent);
  return os.str();
}

}  // namespace issforge
