#pragma once

// A small assembler over flat-instruction encodings and the shipped
// benchmark programs.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "issforge/image.hpp"
#include "issforge/isa.hpp"

namespace issforge {

enum Cond : uint32_t { EQ, NE, CS, CC, MI, PL, VS, VC, HI, LS, GE, LT, GT, LE, AL };

class ProgramBuilder {
 public:
  // `flats` must contain the generic flat instructions that are referenced.
  explicit ProgramBuilder(const std::vector<FlatInstruction>& flats);

  // Appends `flat` encoded with the given field values (by encoding field
  // name); missing fields are zero and `cond` defaults to AL.
  ProgramBuilder& op(const std::string& flat, std::map<std::string, uint32_t> fields, Cond cond = AL);
  ProgramBuilder& word(uint32_t w);
  ProgramBuilder& label(const std::string& name);
  ProgramBuilder& branch(const std::string& target, Cond cond = AL, bool link = false);
  // Pads with NOP up to `addr`.
  ProgramBuilder& pad_to(uint32_t addr);

  // Data processing with an immediate (must be an 8-bit rotated value).
  ProgramBuilder& dp_imm(const std::string& op, uint32_t rd, uint32_t rn, uint32_t imm, bool s = false, Cond c = AL);
  // Data processing with `Rm, LSL #shift`.
  ProgramBuilder& dp_reg(const std::string& op, uint32_t rd, uint32_t rn, uint32_t rm, uint32_t shift = 0,
                         bool s = false, Cond c = AL);
  ProgramBuilder& mov_imm(uint32_t rd, uint32_t imm, Cond c = AL);
  ProgramBuilder& mov_reg(uint32_t rd, uint32_t rm, Cond c = AL);
  ProgramBuilder& cmp_imm(uint32_t rn, uint32_t imm, Cond c = AL);
  ProgramBuilder& cmp_reg(uint32_t rn, uint32_t rm, Cond c = AL);
  // Load/store with a signed immediate offset; `mode` is off, pre or post.
  ProgramBuilder& mem(const std::string& op, uint32_t rd, uint32_t rn, int32_t offset,
                      const std::string& mode = "off", Cond c = AL);
  ProgramBuilder& push(uint32_t reglist);
  ProgramBuilder& pop(uint32_t reglist);
  ProgramBuilder& halt();

  uint32_t here() const { return static_cast<uint32_t>(words_.size() * 4); }
  Image finish(uint32_t entry = 0) const;

 private:
  const FlatInstruction& find(const std::string& name) const;

  std::map<std::string, const FlatInstruction*> flats_;
  std::vector<uint32_t> words_;
  std::map<std::string, uint32_t> labels_;
  struct Fixup {
    size_t index;
    std::string target;
  };
  std::vector<Fixup> fixups_;
};

// Encodes `imm` as (rotate_imm, immed_8); throws Error if not representable.
std::pair<uint32_t, uint32_t> encode_rotated(uint32_t imm);

// Program layout shared by the benchmarks: a branch to `main` at 0, the
// abort vector (a halt) at 0x10, code from 0x20, data from 0x8000 and the
// stack below 0xF000.
inline constexpr uint32_t kDataBase = 0x8000;
inline constexpr uint32_t kStackTop = 0xF000;

std::vector<std::string> benchmark_names();
// `scale` multiplies the outer iteration count.
Image make_benchmark(const std::string& name, const std::vector<FlatInstruction>& flats, uint32_t scale = 1);

}  // namespace issforge
