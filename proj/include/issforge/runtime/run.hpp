#pragma once

// Decoded-instruction representation, block cache and the simulation loop.
// The loop is a template over the back-end so the generated simulator and
// the interpreter share it.

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "issforge/runtime/cpu.hpp"

namespace issforge::rt {

inline constexpr size_t kMaxParams = 12;

struct DecodedInstr;
using ExecFn = void (*)(CpuState&, const DecodedInstr&);

struct DecodedInstr {
  uint32_t id = 0;  // index into the back-end's instruction table
  ExecFn exec = nullptr;
  uint32_t word = 0;
  uint32_t addr = 0;
  bool is_terminator = false;
  std::array<uint32_t, kMaxParams> params{};
};

enum class DecodeStatus { Ok, Undefined, Unpredictable };

inline const char* to_string(DecodeStatus s) {
  switch (s) {
    case DecodeStatus::Ok: return "ok";
    case DecodeStatus::Undefined: return "undefined";
    case DecodeStatus::Unpredictable: return "unpredictable";
  }
  return "?";
}

inline constexpr size_t kMaxBlockInsns = 256;

struct Block {
  std::vector<DecodedInstr> insns;
};

// Decoded blocks keyed by start address. Stores into a page holding cached
// code drop every block that starts in that page.
class BlockCache {
 public:
  const Block* find(uint32_t pc) const {
    auto it = blocks_.find(pc);
    return it == blocks_.end() ? nullptr : &it->second;
  }

  const Block& insert(uint32_t pc, Block b, Memory& mem) {
    const uint32_t page = pc >> kPageBits;
    pages_[page].push_back(pc);
    mem.watch_page(page);
    return blocks_[pc] = std::move(b);
  }

  void invalidate_page(uint32_t page) {
    auto it = pages_.find(page);
    if (it == pages_.end()) return;
    for (uint32_t pc : it->second) blocks_.erase(pc);
    pages_.erase(it);
    ++invalidations_;
  }

  void clear() {
    blocks_.clear();
    pages_.clear();
  }

  size_t size() const { return blocks_.size(); }
  uint64_t invalidations() const { return invalidations_; }

 private:
  std::unordered_map<uint32_t, Block> blocks_;
  std::unordered_map<uint32_t, std::vector<uint32_t>> pages_;
  uint64_t invalidations_ = 0;
};

enum class StopReason { Limit, Halted, Undefined, Unpredictable, FetchAbort };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Limit: return "limit";
    case StopReason::Halted: return "halted";
    case StopReason::Undefined: return "undefined instruction";
    case StopReason::Unpredictable: return "unpredictable";
    case StopReason::FetchAbort: return "fetch from unmapped memory";
  }
  return "?";
}

struct RunOptions {
  uint64_t max_insns = 100'000'000;
  bool use_cache = true;
  uint32_t abort_vector = 0x10;
  std::vector<uint64_t>* profile = nullptr;  // per-instruction execution counts
  std::function<void(const DecodedInstr&, const CpuState&)> trace;
};

struct RunResult {
  StopReason reason = StopReason::Limit;
  uint64_t executed = 0;
  uint64_t data_aborts = 0;
  uint32_t fault_pc = 0;
  std::string message;
};

namespace detail {

// Decodes from `pc` up to a terminator, the block size limit or the end of
// the page. An empty block carries the fault of its first instruction.
template <class Backend>
Block build_block(const Backend& be, Memory& mem, uint32_t pc, DecodeStatus& first_status,
                  bool& fetch_fault, size_t max_insns = kMaxBlockInsns) {
  Block b;
  first_status = DecodeStatus::Ok;
  fetch_fault = false;
  uint32_t addr = pc;
  const uint32_t page = pc >> kPageBits;
  while (b.insns.size() < max_insns && (addr >> kPageBits) == page) {
    uint32_t word;
    if (!mem.fetch(addr, word)) {
      if (b.insns.empty()) fetch_fault = true;
      break;
    }
    DecodedInstr di;
    const DecodeStatus st = be.decode(word, addr, di);
    if (st != DecodeStatus::Ok) {
      if (b.insns.empty()) first_status = st;
      break;
    }
    b.insns.push_back(di);
    if (di.is_terminator) break;
    addr += 4;
  }
  return b;
}

}  // namespace detail

template <class Backend>
RunResult run(const Backend& be, CpuState& s, const RunOptions& opt, BlockCache* cache = nullptr) {
  RunResult res;
  BlockCache local;
  if (opt.use_cache && !cache) cache = &local;
  if (!opt.use_cache) cache = nullptr;
  Block scratch;

  while (res.executed < opt.max_insns) {
    if (s.halted()) {
      res.reason = StopReason::Halted;
      return res;
    }
    const uint32_t pc = s.pc();
    const Block* blk = cache ? cache->find(pc) : nullptr;
    if (!blk) {
      DecodeStatus st;
      bool fetch_fault;
      // Without a cache nothing is watched, so decode one instruction at a
      // time and every fetch sees earlier stores.
      Block b = detail::build_block(be, s.mem, pc, st, fetch_fault, cache ? kMaxBlockInsns : 1);
      if (b.insns.empty()) {
        res.fault_pc = pc;
        res.reason = fetch_fault ? StopReason::FetchAbort
                     : st == DecodeStatus::Undefined ? StopReason::Undefined
                                                     : StopReason::Unpredictable;
        res.message = std::string(to_string(res.reason)) + " at " + std::to_string(pc);
        return res;
      }
      if (cache) {
        blk = &cache->insert(pc, std::move(b), s.mem);
      } else {
        scratch = std::move(b);
        blk = &scratch;
      }
    }

    const uint64_t epoch = s.mem.epoch();
    for (const DecodedInstr& di : blk->insns) {
      s.begin_instruction(di.addr);
      if (opt.trace) opt.trace(di, s);
      try {
        be.execute(s, di);
      } catch (const DataAbort&) {
        ++res.executed;
        ++res.data_aborts;
        if (opt.profile) ++(*opt.profile)[di.id];
        s.enter_abort(opt.abort_vector);
        break;
      } catch (const UnpredictableFault& e) {
        res.reason = StopReason::Unpredictable;
        res.fault_pc = di.addr;
        res.message = e.what();
        return res;
      }
      ++res.executed;
      if (opt.profile) ++(*opt.profile)[di.id];
      if (s.branched()) {
        s.set_pc(s.next_pc());
        break;
      }
      s.set_pc(di.addr + 4);
      if (s.halted() || res.executed >= opt.max_insns || s.mem.epoch() != epoch) break;
    }
    if (cache && s.mem.epoch() != epoch)
      for (uint32_t page : s.mem.take_dirty_pages()) cache->invalidate_page(page);
  }
  res.reason = s.halted() ? StopReason::Halted : StopReason::Limit;
  return res;
}

}  // namespace issforge::rt
