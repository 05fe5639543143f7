#pragma once

// Statement/expression tree for instruction pseudo-code. Nodes are immutable
// and shared; transforms build new trees.

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace issforge {

enum class BinaryOp {
  Add, Sub, Mul,
  BitAnd, BitOr, BitXor,
  Eq, Ne, Lt, Le, Gt, Ge,
  LogAnd, LogOr,
};

enum class UnaryOp { LogNot, BitNot };

enum class Flag { N, Z, C, V };

enum class Psr { Cpsr, Spsr };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

namespace expr {

struct Var {
  std::string name;
};

struct Num {
  uint32_t value;
};

// General-purpose register. A null mode means the current processor mode.
struct Reg {
  ExprPtr index;
  ExprPtr mode;
};

struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Unary {
  UnaryOp op;
  ExprPtr operand;
};

struct Call {
  std::string name;
  std::vector<ExprPtr> args;
};

// base[hi:lo]; lo is null for a single-bit selection base[hi].
struct BitRange {
  ExprPtr base;
  ExprPtr hi;
  ExprPtr lo;
};

struct FlagRef {
  Flag flag;
};

struct Memory {
  ExprPtr address;
  unsigned size;
};

struct StatusReg {
  Psr which;
};

}  // namespace expr

struct Expr {
  using Node = std::variant<expr::Var, expr::Num, expr::Reg, expr::Binary,
                            expr::Unary, expr::Call, expr::BitRange,
                            expr::FlagRef, expr::Memory, expr::StatusReg>;
  Node node;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
};

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;
using Block = std::vector<StmtPtr>;

namespace stmt {

struct Assign {
  ExprPtr lhs;
  ExprPtr rhs;
};

struct If {
  ExprPtr cond;
  Block then_block;
  Block else_block;
};

struct Seq {
  Block body;
};

struct Call {
  std::string name;
  std::vector<ExprPtr> args;
};

struct Unpredictable {};

struct Nop {};

// for var = first to last (inclusive)
struct For {
  std::string var;
  uint32_t first;
  uint32_t last;
  Block body;
};

}  // namespace stmt

struct Stmt {
  using Node = std::variant<stmt::Assign, stmt::If, stmt::Seq, stmt::Call,
                            stmt::Unpredictable, stmt::Nop, stmt::For>;
  Node node;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
  template <class T>
  bool is() const {
    return std::holds_alternative<T>(node);
  }
};

// The code of one instruction or addressing-mode case.
using Ast = Block;

// Node constructors.
namespace mk {
ExprPtr var(std::string name);
ExprPtr num(uint32_t value);
ExprPtr reg(ExprPtr index, ExprPtr mode = nullptr);
ExprPtr bin(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr un(UnaryOp op, ExprPtr operand);
ExprPtr call(std::string name, std::vector<ExprPtr> args);
ExprPtr bits(ExprPtr base, ExprPtr hi, ExprPtr lo = nullptr);
ExprPtr flag(Flag f);
ExprPtr mem(ExprPtr address, unsigned size);
ExprPtr psr(Psr which);
ExprPtr truth(bool b);

StmtPtr assign(ExprPtr lhs, ExprPtr rhs);
StmtPtr if_(ExprPtr cond, Block then_block, Block else_block = {});
StmtPtr seq(Block body);
StmtPtr call_stmt(std::string name, std::vector<ExprPtr> args);
StmtPtr unpredictable();
StmtPtr nop();
StmtPtr for_(std::string var, uint32_t first, uint32_t last, Block body);
}  // namespace mk

// Structural equality (source locations are not part of the tree).
bool equal(const Expr& a, const Expr& b);
bool equal(const ExprPtr& a, const ExprPtr& b);
bool equal(const Stmt& a, const Stmt& b);
bool equal(const Block& a, const Block& b);

// Canonical text, re-parseable by the pseudo-code parser.
std::string to_string(const Expr& e);
std::string to_string(const ExprPtr& e);
std::string to_string(const Block& block, int indent = 0);

const char* op_token(BinaryOp op);
int precedence(BinaryOp op);
const char* flag_name(Flag f);

// Maps a register-field name (`Rd`) to its index parameter (`d`); any other
// name maps to itself.
std::string param_name(const std::string& field);
bool is_register_field(const std::string& field);

}  // namespace issforge
