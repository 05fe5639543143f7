#pragma once

// Tree utilities used by the linker, the transforms and the analyses.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "issforge/ast.hpp"

namespace issforge {

// Rebuilds `e` bottom-up, calling `post` on every node after its children.
// Returning null from `post` keeps the rebuilt node.
using ExprRewrite = std::function<ExprPtr(const ExprPtr&)>;
ExprPtr rewrite(const ExprPtr& e, const ExprRewrite& post);
// Applies `rewrite` to every expression of a block, assignment targets included.
Block rewrite(const Block& b, const ExprRewrite& post);

// Calls `fn` on every expression node, pre-order.
void visit(const ExprPtr& e, const std::function<void(const Expr&)>& fn);
void visit(const Block& b, const std::function<void(const Expr&)>& fn);
// Calls `fn` on every statement, pre-order.
void visit_stmts(const Block& b, const std::function<void(const Stmt&)>& fn);

// Structural replacement; `count` is incremented once per replaced occurrence.
ExprPtr replace_exp(const ExprPtr& e, const ExprPtr& pattern, const ExprPtr& replacement,
                    size_t& count);
Block replace_exp(const Block& b, const ExprPtr& pattern, const ExprPtr& replacement,
                  size_t& count);

// Replaces free variables (Var nodes) by expressions.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& vars);
Block substitute(const Block& b, const std::map<std::string, ExprPtr>& vars);

struct NameUse {
  std::set<std::string> read;      // Var nodes outside assignment targets
  std::set<std::string> assigned;  // Var assignment targets
  std::set<std::string> loop_vars;
  std::set<std::string> calls;     // builtin names
};
NameUse collect_names(const Block& b);

// Throws Error naming `unit` for a variable that is neither in `params`, an
// assigned local nor a loop variable.
void check_bound(const Block& b, const std::set<std::string>& params, const std::string& unit);

// True if the expression reads no processor state and no local in `locals`.
bool is_static(const ExprPtr& e, const std::set<std::string>& locals);

// Evaluates a state-free expression given values for its variables.
std::optional<uint32_t> evaluate(const ExprPtr& e, const std::map<std::string, uint32_t>& env);

// Constant folding and algebraic identities that preserve the value.
ExprPtr fold(const ExprPtr& e);
// Folds every expression, resolves constant conditions and removes empty
// branches and no-ops.
Block fold(const Block& b);

// Calls a pure builtin. Returns nullopt for a name that is not pure.
std::optional<uint32_t> call_pure_builtin(const std::string& name, const std::vector<uint32_t>& args);

}  // namespace issforge
