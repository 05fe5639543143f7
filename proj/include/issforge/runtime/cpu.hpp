#pragma once

// Architectural state of the simulated processor. Header-only so that the
// generated simulators can inline every access.

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace issforge::rt {

// A load or store to unmapped memory.
struct DataAbort : std::exception {
  uint32_t address;
  explicit DataAbort(uint32_t a) : address(a) {}
  const char* what() const noexcept override { return "data abort"; }
};

// Behaviour the architecture leaves unpredictable; the simulation stops.
struct UnpredictableFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModeBits : uint32_t { Usr = 0x10, Irq = 0x12, Svc = 0x13, Abt = 0x17, Sys = 0x1F };

inline constexpr uint32_t kPageBits = 12;
inline constexpr uint32_t kPageSize = 1u << kPageBits;

class Memory {
 public:
  // Maps a zero-filled region; regions must not overlap.
  void map(uint32_t base, uint32_t size) {
    for (const auto& r : regions_)
      if (base < r.base + r.bytes.size() && r.base < base + size)
        throw std::invalid_argument("overlapping memory regions");
    regions_.push_back(Region{base, std::vector<uint8_t>(size)});
    last_ = 0;
  }

  bool mapped(uint32_t addr, uint32_t size) const { return find(addr, size) != nullptr; }

  uint32_t read(uint32_t addr, uint32_t size) {
    const uint8_t* p = find(addr, size);
    if (!p) throw DataAbort(addr);
    uint32_t v = 0;
    for (uint32_t i = 0; i < size; ++i) v |= uint32_t{p[i]} << (8 * i);
    return v;
  }

  void write(uint32_t addr, uint32_t size, uint32_t value) {
    uint8_t* p = find(addr, size);
    if (!p) throw DataAbort(addr);
    for (uint32_t i = 0; i < size; ++i) p[i] = static_cast<uint8_t>(value >> (8 * i));
    if (!watched_.empty()) note_store(addr, size);
  }

  // Instruction fetch; false when unmapped.
  bool fetch(uint32_t addr, uint32_t& word) {
    const uint8_t* p = find(addr, 4);
    if (!p) return false;
    word = uint32_t{p[0]} | uint32_t{p[1]} << 8 | uint32_t{p[2]} << 16 | uint32_t{p[3]} << 24;
    return true;
  }

  // Copies bytes in without touching the code watch.
  void load(uint32_t addr, const uint8_t* data, size_t n) {
    for (size_t i = 0; i < n; ++i) {
      uint8_t* p = find(addr + static_cast<uint32_t>(i), 1);
      if (!p) throw DataAbort(addr + static_cast<uint32_t>(i));
      *p = data[i];
    }
  }

  // Stores into a watched page bump the epoch and record the page.
  void watch_page(uint32_t page) {
    if (watched_.empty()) watched_.assign(size_t{1} << (32 - kPageBits), 0);
    watched_[page] = 1;
  }
  void unwatch_all() { watched_.clear(); }
  uint64_t epoch() const { return epoch_; }
  std::vector<uint32_t> take_dirty_pages() { return std::exchange(dirty_, {}); }

  friend bool operator==(const Memory& a, const Memory& b) {
    if (a.regions_.size() != b.regions_.size()) return false;
    for (size_t i = 0; i < a.regions_.size(); ++i)
      if (a.regions_[i].base != b.regions_[i].base || a.regions_[i].bytes != b.regions_[i].bytes)
        return false;
    return true;
  }

  struct Region {
    uint32_t base;
    std::vector<uint8_t> bytes;
  };
  const std::vector<Region>& regions() const { return regions_; }

 private:
  uint8_t* find(uint32_t addr, uint32_t size) {
    return const_cast<uint8_t*>(static_cast<const Memory*>(this)->find(addr, size));
  }
  const uint8_t* find(uint32_t addr, uint32_t size) const {
    if (last_ < regions_.size()) {
      const Region& r = regions_[last_];
      if (addr - r.base < r.bytes.size() && size <= r.bytes.size() - (addr - r.base))
        return r.bytes.data() + (addr - r.base);
    }
    for (size_t i = 0; i < regions_.size(); ++i) {
      const Region& r = regions_[i];
      if (addr - r.base < r.bytes.size() && size <= r.bytes.size() - (addr - r.base)) {
        last_ = i;
        return r.bytes.data() + (addr - r.base);
      }
    }
    return nullptr;
  }

  void note_store(uint32_t addr, uint32_t size) {
    const uint32_t first = addr >> kPageBits;
    const uint32_t last = (addr + size - 1) >> kPageBits;
    for (uint32_t pg = first;; ++pg) {
      if (watched_[pg]) {
        watched_[pg] = 0;
        dirty_.push_back(pg);
        ++epoch_;
      }
      if (pg == last) break;
    }
  }

  std::vector<Region> regions_;
  mutable size_t last_ = 0;
  std::vector<uint8_t> watched_;
  std::vector<uint32_t> dirty_;
  uint64_t epoch_ = 0;
};

enum FlagBit : uint32_t { kN = 31, kZ = 30, kC = 29, kV = 28 };

class CpuState {
 public:
  static constexpr uint32_t kIrqDisable = 1u << 7;

  CpuState() { cpsr_ = static_cast<uint32_t>(ModeBits::Svc) | kIrqDisable; }

  // ----- registers

  // Architectural read: R15 reads as the current instruction address plus 8.
  uint32_t reg(uint32_t i) const { return i == 15 ? r_[15] + 8 : r_[i & 15]; }

  void set_reg(uint32_t i, uint32_t v) {
    if (i == 15) {
      next_pc_ = v & ~3u;
      branched_ = true;
    } else {
      r_[i & 15] = v;
    }
  }

  // Register as seen from processor mode `mode` (banked R13/R14).
  uint32_t reg_mode(uint32_t i, uint32_t mode) const {
    const int b = checked_bank(mode);
    if ((i == 13 || i == 14) && b != bank_of(cpsr_ & 0x1F)) return i == 13 ? r13_[b] : r14_[b];
    return reg(i);
  }

  void set_reg_mode(uint32_t i, uint32_t mode, uint32_t v) {
    const int b = checked_bank(mode);
    if ((i == 13 || i == 14) && b != bank_of(cpsr_ & 0x1F)) {
      (i == 13 ? r13_ : r14_)[b] = v;
      return;
    }
    set_reg(i, v);
  }

  uint32_t pc() const { return r_[15]; }
  void set_pc(uint32_t v) { r_[15] = v; }
  // Raw register file view, R15 holding the current instruction address.
  uint32_t raw(uint32_t i) const { return r_[i & 15]; }
  void set_raw(uint32_t i, uint32_t v) { r_[i & 15] = v; }

  // ----- status registers

  uint32_t flag(FlagBit f) const { return (cpsr_ >> f) & 1u; }
  void set_flag(FlagBit f, uint32_t v) { cpsr_ = (cpsr_ & ~(1u << f)) | ((v != 0 ? 1u : 0u) << f); }

  uint32_t cpsr() const { return cpsr_; }

  void set_cpsr(uint32_t v) {
    const uint32_t mode = v & 0x1F;
    if (bank_of(mode) < 0) throw UnpredictableFault("invalid processor mode " + std::to_string(mode));
    switch_bank(mode);
    cpsr_ = v;
  }

  bool current_mode_has_spsr() const { return spsr_slot(cpsr_ & 0x1F) >= 0; }
  bool in_privileged_mode() const { return (cpsr_ & 0x1F) != static_cast<uint32_t>(ModeBits::Usr); }

  uint32_t spsr() const {
    const int s = spsr_slot(cpsr_ & 0x1F);
    if (s < 0) throw UnpredictableFault("SPSR accessed in a mode without one");
    return spsr_[s];
  }

  void set_spsr(uint32_t v) {
    const int s = spsr_slot(cpsr_ & 0x1F);
    if (s < 0) throw UnpredictableFault("SPSR accessed in a mode without one");
    spsr_[s] = v;
  }

  uint32_t spsr_of(ModeBits m) const { return spsr_[spsr_slot(static_cast<uint32_t>(m))]; }

  bool condition_passed(uint32_t cond) const {
    const bool n = flag(kN), z = flag(kZ), c = flag(kC), v = flag(kV);
    switch (cond & 15) {
      case 0: return z;
      case 1: return !z;
      case 2: return c;
      case 3: return !c;
      case 4: return n;
      case 5: return !n;
      case 6: return v;
      case 7: return !v;
      case 8: return c && !z;
      case 9: return !c || z;
      case 10: return n == v;
      case 11: return n != v;
      case 12: return !z && n == v;
      case 13: return z || n != v;
      default: return true;  // AL, and the unconditional space
    }
  }

  uint32_t address_of_current_instruction() const { return r_[15]; }
  uint32_t address_of_next_instruction() const { return r_[15] + 4; }

  // ----- memory

  uint32_t mem_read(uint32_t addr, uint32_t size) { return mem.read(addr, size); }
  void mem_write(uint32_t addr, uint32_t size, uint32_t v) { mem.write(addr, size, v); }

  // ----- control

  [[noreturn]] void unpredictable() const { throw UnpredictableFault("UNPREDICTABLE"); }
  void halt() { halted_ = true; }
  bool halted() const { return halted_; }

  void begin_instruction(uint32_t addr) {
    r_[15] = addr;
    branched_ = false;
  }
  bool branched() const { return branched_; }
  uint32_t next_pc() const { return next_pc_; }

  // Data-abort exception entry.
  void enter_abort(uint32_t vector) {
    const uint32_t old = cpsr_;
    const uint32_t ret = r_[15] + 8;
    set_cpsr((cpsr_ & ~0x1Fu) | static_cast<uint32_t>(ModeBits::Abt) | kIrqDisable);
    spsr_[spsr_slot(static_cast<uint32_t>(ModeBits::Abt))] = old;
    r_[14] = ret;
    r_[15] = vector;
    branched_ = false;
  }

  friend bool operator==(const CpuState& a, const CpuState& b) {
    return a.r_ == b.r_ && a.cpsr_ == b.cpsr_ && a.r13_ == b.r13_ && a.r14_ == b.r14_ &&
           a.spsr_ == b.spsr_ && a.halted_ == b.halted_ && a.mem == b.mem;
  }

  // Human-readable register dump.
  std::string describe() const {
    std::string s;
    char buf[48];
    for (int i = 0; i < 16; ++i) {
      std::snprintf(buf, sizeof buf, "R%-2d=%08x%s", i, r_[i], i % 4 == 3 ? "\n" : " ");
      s += buf;
    }
    std::snprintf(buf, sizeof buf, "CPSR=%08x%s\n", cpsr_, halted_ ? " halted" : "");
    s += buf;
    return s;
  }

  Memory mem;

 private:
  // usr/sys share a bank; irq, svc and abt have their own. -1 for invalid modes.
  static int bank_of(uint32_t mode) {
    switch (mode & 0x1F) {
      case 0x10: case 0x1F: return 0;
      case 0x12: return 1;
      case 0x13: return 2;
      case 0x17: return 3;
      default: return -1;
    }
  }
  static int checked_bank(uint32_t mode) {
    const int b = bank_of(mode);
    if (b < 0) throw UnpredictableFault("invalid processor mode " + std::to_string(mode & 0x1F));
    return b;
  }
  static int spsr_slot(uint32_t mode) {
    const int b = bank_of(mode);
    return b > 0 ? b - 1 : -1;
  }

  void switch_bank(uint32_t new_mode) {
    const int from = bank_of(cpsr_ & 0x1F);
    const int to = bank_of(new_mode);
    if (from == to) return;
    r13_[from] = r_[13];
    r14_[from] = r_[14];
    r_[13] = r13_[to];
    r_[14] = r14_[to];
  }

  std::array<uint32_t, 16> r_{};
  uint32_t cpsr_;
  // Saved R13/R14 of banks other than the current one.
  std::array<uint32_t, 4> r13_{};
  std::array<uint32_t, 4> r14_{};
  std::array<uint32_t, 3> spsr_{};
  uint32_t next_pc_ = 0;
  bool branched_ = false;
  bool halted_ = false;
};

}  // namespace issforge::rt
