#pragma once

// IR transformations applied between linking and code generation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "issforge/ast.hpp"
#include "issforge/isa.hpp"

namespace issforge {

// Rewrites CarryFrom/BorrowFrom/OverflowFrom/SignedSat over a symbolic sum or
// difference into operand-taking helpers. Throws Error naming `unit` on any
// other argument shape.
Block symbolic_rewrite(const Block& b, const std::string& unit);
void symbolic_rewrite(IsaDescription& desc);

// Applies every step of `patch` to the mode code. A step that matches nothing
// is reported as a stale patch.
ModeCase apply_patch(const ModeCase& mode, const Patch& patch);

// Combines every instruction with each case of its mode family.
// The result has exactly sum(max(1, |modes|)) entries.
std::vector<FlatInstruction> flatten(const IsaDescription& desc);

// Delays base-register updates made by the mode code until after the last
// memory access, so a data abort leaves the base register untouched.
void move_writeback(FlatInstruction& flat);

struct PrecomputeRule {
  std::string name;
  ExprPtr pattern;
};

struct SpecializeRule {
  std::string param;
  std::vector<uint32_t> values;
};

// Contents of a `.opt` file.
struct OptSpec {
  std::vector<PrecomputeRule> precompute;
  std::vector<SpecializeRule> specialize;
};

OptSpec parse_opt(std::string_view text, const std::string& file = "<opt>");

// Replaces each pattern by a fresh decode-time parameter.
void precompute(std::vector<FlatInstruction>& flats, const std::vector<PrecomputeRule>& rules);

// Adds constant-folded clones of instructions whose weight reaches
// `threshold`; each clone follows its generic instruction.
std::vector<FlatInstruction> specialize(const std::vector<FlatInstruction>& flats,
                                        const std::vector<SpecializeRule>& rules,
                                        uint64_t threshold);

// Execution counts keyed by flat instruction name.
using Profile = std::map<std::string, uint64_t>;
Profile parse_profile(std::string_view text);
std::string format_profile(const Profile& p);
// Sets weights by flat name (variant counts go to their generic); returns a
// warning per name that matches no instruction.
std::vector<std::string> ingest_profile(std::vector<FlatInstruction>& flats, const Profile& profile);

// Drops run-time parameters the code no longer reads.
void prune_params(FlatInstruction& flat);

}  // namespace issforge
