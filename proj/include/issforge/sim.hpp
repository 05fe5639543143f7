#pragma once

// Decoder tables, assembly printing and the reference interpreter built
// directly from flat instructions.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "issforge/isa.hpp"
#include "issforge/runtime/asm.hpp"
#include "issforge/runtime/run.hpp"

namespace issforge {

// ------------------------------------------------------------------ decoder

struct DecoderCandidate {
  uint32_t mask = 0;
  uint32_t value = 0;
  size_t generic = 0;             // flat index
  std::vector<size_t> variants;   // flat indices, most specialized first
};

// Two-phase decoder: bits 27..20 select a bucket, then candidates are tried
// most-specific first.
struct DecoderSpec {
  static constexpr unsigned kKeyShift = 20;
  static constexpr uint32_t kKeyMask = 0xFFu << kKeyShift;

  std::vector<DecoderCandidate> candidates;
  std::array<std::vector<uint32_t>, 256> buckets;  // candidate indices

  // Throws Error on ambiguous encodings.
  static DecoderSpec build(const std::vector<FlatInstruction>& flats);

  struct Match {
    rt::DecodeStatus status = rt::DecodeStatus::Undefined;
    size_t flat = 0;
    // Field values by parameter name, plus decode-time parameters.
    std::map<std::string, uint32_t> env;
  };
  Match decode(const std::vector<FlatInstruction>& flats, uint32_t word) const;
};

// Field values by parameter name (`Rd` -> `d`) for `word`.
std::map<std::string, uint32_t> field_env(const FlatInstruction& flat, uint32_t word);
bool constraints_hold(const FlatInstruction& flat, uint32_t word);

// ------------------------------------------------------------------ assembly

struct AsmProgram {
  std::vector<rt::AsmElem> elems;
  std::vector<std::unique_ptr<std::string>> strings;  // backing store for text
};

AsmProgram compile_syntax(const FlatInstruction& flat);
std::string print_asm(const FlatInstruction& flat, uint32_t word);
// Renders from field values keyed by encoding field name.
std::string print_asm(const FlatInstruction& flat, const std::map<std::string, uint32_t>& fields);

// ------------------------------------------------------------------ interpreter

// Executes flat instruction trees directly. Serves as the reference the
// generated simulator is checked against.
class Interpreter {
 public:
  explicit Interpreter(std::vector<FlatInstruction> flats);
  ~Interpreter();
  Interpreter(Interpreter&&) noexcept;

  rt::DecodeStatus decode(uint32_t word, uint32_t addr, rt::DecodedInstr& out) const;
  void execute(rt::CpuState& s, const rt::DecodedInstr& di) const;

  size_t flat_count() const { return flats_.size(); }
  const std::string& flat_name(size_t i) const { return flats_[i].name; }
  const std::vector<FlatInstruction>& flats() const { return flats_; }
  std::string disassemble(uint32_t word) const;
  std::string print(const rt::DecodedInstr& di) const { return print_asm(flats_[di.id], di.word); }
  uint32_t abort_vector() const { return abort_vector_; }
  void set_abort_vector(uint32_t v) { abort_vector_ = v; }

  struct Program;

 private:
  std::vector<FlatInstruction> flats_;
  DecoderSpec decoder_;
  std::vector<std::unique_ptr<Program>> programs_;
  uint32_t abort_vector_ = 0x10;
};

}  // namespace issforge
