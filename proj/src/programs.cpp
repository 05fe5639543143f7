#include "issforge/programs.hpp"

#include <bit>

#include "issforge/error.hpp"

namespace issforge {

std::pair<uint32_t, uint32_t> encode_rotated(uint32_t imm) {
  for (uint32_t rot = 0; rot < 16; ++rot) {
    const uint32_t v = std::rotl(imm, static_cast<int>(2 * rot));
    if (v <= 0xFF) return {rot, v};
  }
  throw Error("immediate " + std::to_string(imm) + " is not an 8-bit rotated value");
}

ProgramBuilder::ProgramBuilder(const std::vector<FlatInstruction>& flats) {
  for (const auto& f : flats)
    if (!f.is_variant()) flats_[f.name] = &f;
}

const FlatInstruction& ProgramBuilder::find(const std::string& name) const {
  auto it = flats_.find(name);
  if (it == flats_.end()) throw Error("no instruction " + name);
  return *it->second;
}

ProgramBuilder& ProgramBuilder::op(const std::string& flat, std::map<std::string, uint32_t> fields, Cond cond) {
  const FlatInstruction& f = find(flat);
  fields.emplace("cond", cond);
  for (const auto& [name, v] : fields) {
    const EncodingField* fld = f.encoding.find(name);
    if (!fld) {
      if (name == "cond") continue;
      throw Error(flat + " has no field " + name);
    }
    if (fld->width() < 32 && (v >> fld->width()) != 0)
      throw Error(flat + ": value " + std::to_string(v) + " does not fit field " + name);
  }
  words_.push_back(f.encoding.encode(fields));
  return *this;
}

ProgramBuilder& ProgramBuilder::word(uint32_t w) {
  words_.push_back(w);
  return *this;
}

ProgramBuilder& ProgramBuilder::label(const std::string& name) {
  if (!labels_.emplace(name, here()).second) throw Error("duplicate label " + name);
  return *this;
}

ProgramBuilder& ProgramBuilder::branch(const std::string& target, Cond cond, bool link) {
  fixups_.push_back({words_.size(), target});
  return op("B", {{"L", link ? 1u : 0u}}, cond);
}

ProgramBuilder& ProgramBuilder::pad_to(uint32_t addr) {
  if (here() > addr) throw Error("code already past " + std::to_string(addr));
  while (here() < addr) op("NOP", {});
  return *this;
}

ProgramBuilder& ProgramBuilder::dp_imm(const std::string& name, uint32_t rd, uint32_t rn, uint32_t imm, bool s,
                                       Cond c) {
  const auto [rot, imm8] = encode_rotated(imm);
  return op(name + "_imm", {{"Rd", rd}, {"Rn", rn}, {"S", s}, {"rotate_imm", rot}, {"immed_8", imm8}}, c);
}

ProgramBuilder& ProgramBuilder::dp_reg(const std::string& name, uint32_t rd, uint32_t rn, uint32_t rm,
                                       uint32_t shift, bool s, Cond c) {
  return op(name + "_lsl_imm", {{"Rd", rd}, {"Rn", rn}, {"Rm", rm}, {"S", s}, {"shift_imm", shift}}, c);
}

ProgramBuilder& ProgramBuilder::mov_imm(uint32_t rd, uint32_t imm, Cond c) {
  const auto [rot, imm8] = encode_rotated(imm);
  return op("MOV_imm", {{"Rd", rd}, {"rotate_imm", rot}, {"immed_8", imm8}}, c);
}

ProgramBuilder& ProgramBuilder::mov_reg(uint32_t rd, uint32_t rm, Cond c) {
  return op("MOV_lsl_imm", {{"Rd", rd}, {"Rm", rm}}, c);
}

ProgramBuilder& ProgramBuilder::cmp_imm(uint32_t rn, uint32_t imm, Cond c) {
  const auto [rot, imm8] = encode_rotated(imm);
  return op("CMP_imm", {{"Rn", rn}, {"rotate_imm", rot}, {"immed_8", imm8}}, c);
}

ProgramBuilder& ProgramBuilder::cmp_reg(uint32_t rn, uint32_t rm, Cond c) {
  return op("CMP_lsl_imm", {{"Rn", rn}, {"Rm", rm}}, c);
}

ProgramBuilder& ProgramBuilder::mem(const std::string& name, uint32_t rd, uint32_t rn, int32_t offset,
                                    const std::string& mode, Cond c) {
  const uint32_t mag = static_cast<uint32_t>(offset < 0 ? -offset : offset);
  return op(name + "_imm_" + mode, {{"Rd", rd}, {"Rn", rn}, {"U", offset >= 0}, {"offset_12", mag}}, c);
}

ProgramBuilder& ProgramBuilder::push(uint32_t reglist) { return op("STM_db", {{"Rn", 13}, {"W", 1}, {"reglist", reglist}}); }
ProgramBuilder& ProgramBuilder::pop(uint32_t reglist) { return op("LDM_ia", {{"Rn", 13}, {"W", 1}, {"reglist", reglist}}); }
ProgramBuilder& ProgramBuilder::halt() { return op("HLT", {}); }

Image ProgramBuilder::finish(uint32_t entry) const {
  Image img;
  img.entry = entry;
  img.words = words_;
  for (const auto& fx : fixups_) {
    auto it = labels_.find(fx.target);
    if (it == labels_.end()) throw Error("undefined label " + fx.target);
    const int64_t delta = (int64_t{it->second} - (int64_t{static_cast<uint32_t>(fx.index * 4)} + 8)) / 4;
    img.words[fx.index] |= static_cast<uint32_t>(delta) & 0xFFFFFFu;
  }
  return img;
}

namespace {

constexpr uint32_t kSP = 13, kLR = 14, kPC = 15;

void prologue(ProgramBuilder& b) {
  b.branch("main");
  b.pad_to(0x10);
  b.halt();  // abort vector
  b.pad_to(0x20);
  b.label("main");
  b.mov_imm(kSP, kStackTop);
}

// Add/xor/shift mix in a tight counted loop.
void loop(ProgramBuilder& b, uint32_t scale) {
  prologue(b);
  b.mov_imm(0, 0x100000u * scale);
  b.mov_imm(1, 0);
  b.mov_imm(2, 1);
  b.mov_imm(3, 0);
  b.label("loop");
  b.dp_reg("ADD", 1, 1, 2);
  b.dp_reg("EOR", 2, 2, 1, 3);
  b.dp_reg("ADD", 3, 3, 1, 1);
  b.dp_imm("SUB", 0, 0, 1, true);
  b.branch("loop", NE);
  b.halt();
}

// Repeated bubble sort of a pseudo-random array, with a checksum subroutine.
void sorting(ProgramBuilder& b, uint32_t scale) {
  constexpr uint32_t n = 256;
  prologue(b);
  b.mov_imm(8, 8 * scale);
  b.mov_imm(2, 0x5A);
  b.mov_imm(9, 0);
  b.label("rep");
  b.mov_imm(0, kDataBase);
  b.mov_imm(1, n);
  b.label("fill");
  b.dp_reg("ADD", 2, 2, 2, 5);
  b.dp_imm("ADD", 2, 2, 59);
  b.mem("STR", 2, 0, 4, "post");
  b.dp_imm("SUB", 1, 1, 1, true);
  b.branch("fill", NE);
  b.mov_imm(4, n - 1);
  b.label("pass");
  b.mov_imm(0, kDataBase);
  b.mov_reg(5, 4);
  b.label("inner");
  b.mem("LDR", 6, 0, 0);
  b.mem("LDR", 7, 0, 4);
  b.cmp_reg(6, 7);
  b.mem("STR", 7, 0, 0, "off", HI);
  b.mem("STR", 6, 0, 4, "off", HI);
  b.dp_imm("ADD", 0, 0, 4);
  b.dp_imm("SUB", 5, 5, 1, true);
  b.branch("inner", NE);
  b.dp_imm("SUB", 4, 4, 1, true);
  b.branch("pass", NE);
  b.branch("checksum", AL, true);
  b.dp_imm("SUB", 8, 8, 1, true);
  b.branch("rep", NE);
  b.halt();

  b.label("checksum");
  b.push((1u << 0) | (1u << 1) | (1u << 2) | (1u << kLR));
  b.mov_imm(0, kDataBase);
  b.mov_imm(1, n);
  b.label("cs");
  b.mem("LDR", 2, 0, 4, "post");
  b.dp_reg("EOR", 9, 9, 2);
  b.dp_reg("ADD", 9, 9, 9, 1);
  b.dp_imm("SUB", 1, 1, 1, true);
  b.branch("cs", NE);
  b.pop((1u << 0) | (1u << 1) | (1u << 2) | (1u << kPC));
}

// RC4 key schedule followed by keystream encryption of a buffer.
void crypto(ProgramBuilder& b, uint32_t scale) {
  constexpr uint32_t sbox = 0x9000, key = 0x9100, buf = 0xA000, len = 4096;
  prologue(b);
  b.mov_imm(0, key);
  b.mov_imm(1, 0);
  b.label("key");
  b.dp_reg("ADD", 2, 1, 1, 3);
  b.dp_imm("ADD", 2, 2, 3);
  b.mem("STRB", 2, 0, 1, "post");
  b.dp_imm("ADD", 1, 1, 1);
  b.cmp_imm(1, 16);
  b.branch("key", NE);
  b.mov_imm(0, sbox);
  b.mov_imm(1, 0);
  b.label("init");
  b.mem("STRB", 1, 0, 1, "post");
  b.dp_imm("ADD", 1, 1, 1);
  b.cmp_imm(1, 256);
  b.branch("init", NE);

  b.mov_imm(1, 0);
  b.mov_imm(3, 0);
  b.mov_imm(10, sbox);
  b.mov_imm(11, key);
  b.label("ksa");
  b.dp_reg("ADD", 4, 10, 1);
  b.mem("LDRB", 5, 4, 0);
  b.dp_imm("AND", 6, 1, 15);
  b.dp_reg("ADD", 6, 11, 6);
  b.mem("LDRB", 6, 6, 0);
  b.dp_reg("ADD", 3, 3, 5);
  b.dp_reg("ADD", 3, 3, 6);
  b.dp_imm("AND", 3, 3, 255);
  b.dp_reg("ADD", 7, 10, 3);
  b.mem("LDRB", 8, 7, 0);
  b.mem("STRB", 8, 4, 0);
  b.mem("STRB", 5, 7, 0);
  b.dp_imm("ADD", 1, 1, 1);
  b.cmp_imm(1, 256);
  b.branch("ksa", NE);

  b.mov_imm(1, 0);
  b.mov_imm(3, 0);
  b.mov_imm(12, 64 * scale);
  b.label("rep");
  b.mov_imm(0, buf);
  b.mov_imm(2, len);
  b.label("prga");
  b.dp_imm("ADD", 1, 1, 1);
  b.dp_imm("AND", 1, 1, 255);
  b.dp_reg("ADD", 4, 10, 1);
  b.mem("LDRB", 5, 4, 0);
  b.dp_reg("ADD", 3, 3, 5);
  b.dp_imm("AND", 3, 3, 255);
  b.dp_reg("ADD", 7, 10, 3);
  b.mem("LDRB", 8, 7, 0);
  b.mem("STRB", 8, 4, 0);
  b.mem("STRB", 5, 7, 0);
  b.dp_reg("ADD", 9, 5, 8);
  b.dp_imm("AND", 9, 9, 255);
  b.dp_reg("ADD", 9, 10, 9);
  b.mem("LDRB", 9, 9, 0);
  b.mem("LDRB", 6, 0, 0);
  b.dp_reg("EOR", 6, 6, 9);
  b.mem("STRB", 6, 0, 1, "post");
  b.dp_imm("SUB", 2, 2, 1, true);
  b.branch("prga", NE);
  b.dp_imm("SUB", 12, 12, 1, true);
  b.branch("rep", NE);
  b.halt();
}

}  // namespace

std::vector<std::string> benchmark_names() { return {"loop", "sorting", "crypto"}; }

Image make_benchmark(const std::string& name, const std::vector<FlatInstruction>& flats, uint32_t scale) {
  ProgramBuilder b(flats);
  if (name == "loop")
    loop(b, scale);
  else if (name == "sorting")
    sorting(b, scale);
  else if (name == "crypto")
    crypto(b, scale);
  else
    throw Error("unknown benchmark " + name);
  return b.finish();
}

}  // namespace issforge
