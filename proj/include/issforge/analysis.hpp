#pragma once

// Static analyses over flattened instructions.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "issforge/ast.hpp"
#include "issforge/isa.hpp"

namespace issforge {

// Simplifies a boolean expression over parameters, using constraint facts to
// decide equalities (`n == 15` is false under `Rn != 15`).
ExprPtr simplify(const ExprPtr& e, const std::vector<ValidityConstraint>& facts = {});

// Condition over the parameters under which executing `flat` may write the
// program counter. Never false when a write is possible. Indices the analysis
// cannot classify yield `true` and a warning.
ExprPtr may_branch(const FlatInstruction& flat, std::vector<std::string>* warnings = nullptr);

// `NAME always|never|<expr>` lines; NAME is an instruction or flat name.
std::map<std::string, ExprPtr> parse_overrides(std::string_view text,
                                               const std::string& file = "<overrides>");

// Sets `may_branch` on every flat, applying overrides by flat or instruction name.
void annotate_may_branch(std::vector<FlatInstruction>& flats,
                         const std::map<std::string, ExprPtr>& overrides,
                         std::vector<std::string>* warnings = nullptr);

}  // namespace issforge
