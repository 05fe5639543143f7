#pragma once

// Shared fixtures: the bundled corpus run through the pipeline once, random
// processor states and single-instruction stepping.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "issforge/error.hpp"
#include "issforge/pipeline.hpp"
#include "issforge/sim.hpp"

namespace testutil {

using namespace issforge;

inline const Corpus& corpus() {
  static const Corpus c = load_corpus(default_corpus_dir());
  return c;
}

inline const IsaDescription& description() {
  static const IsaDescription d = link(corpus().sources);
  return d;
}

// Specialized with every pass recorded.
inline const PipelineResult& uarm() {
  static const PipelineResult r = [] {
    TransformConfig cfg = default_config(corpus());
    cfg.record_passes = true;
    return run_pipeline(corpus().sources, cfg);
  }();
  return r;
}

inline const PipelineResult& uarm_nospec() {
  static const PipelineResult r = [] {
    TransformConfig cfg = default_config(corpus());
    cfg.specialize = false;
    return run_pipeline(corpus().sources, cfg);
  }();
  return r;
}

inline const Interpreter& interp() {
  static const Interpreter i(uarm().flats);
  return i;
}

inline const FlatInstruction& flat(const std::string& name) {
  const FlatInstruction* f = uarm().find(name);
  if (!f) throw Error("no flat " + name);
  return *f;
}

inline std::vector<const FlatInstruction*> generics() {
  std::vector<const FlatInstruction*> out;
  for (const auto& f : uarm().flats)
    if (!f.is_variant()) out.push_back(&f);
  return out;
}

// Message of the exception `fn` throws; empty when it does not throw.
inline std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

inline bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

inline constexpr uint32_t kRandBase = 0x8000;
inline constexpr uint32_t kRandSize = 0x1000;

inline uint32_t random_psr(std::mt19937_64& rng) {
  static const uint32_t modes[] = {0x10, 0x12, 0x13, 0x17, 0x1F};
  return (static_cast<uint32_t>(rng()) & 0xF0000000u) | (rng() & 1 ? 0x80u : 0u) | modes[rng() % 5];
}

// Mostly addresses inside the mapped window, sometimes arbitrary words.
inline uint32_t random_value(std::mt19937_64& rng) {
  switch (rng() % 4) {
    case 0: return static_cast<uint32_t>(rng());
    case 1: return static_cast<uint32_t>(rng() % 32);
    default: return kRandBase + (static_cast<uint32_t>(rng()) & (kRandSize - 1) & ~3u);
  }
}

// Random registers in every bank, random SPSRs and a 4 KiB window of random
// memory at kRandBase.
inline rt::CpuState random_state(std::mt19937_64& rng) {
  rt::CpuState s;
  s.mem.map(kRandBase, kRandSize);
  std::vector<uint8_t> bytes(kRandSize);
  for (auto& b : bytes) b = static_cast<uint8_t>(rng());
  s.mem.load(kRandBase, bytes.data(), bytes.size());
  for (uint32_t mode : {0x12u, 0x13u, 0x17u, 0x10u}) {
    s.set_cpsr(mode);
    if (s.current_mode_has_spsr()) s.set_spsr(random_psr(rng));
    for (uint32_t r = 13; r < 15; ++r) s.set_raw(r, random_value(rng));
  }
  for (uint32_t r = 0; r < 13; ++r) s.set_raw(r, random_value(rng));
  s.set_cpsr(random_psr(rng));
  s.begin_instruction(0x1000 + (static_cast<uint32_t>(rng()) & 0xFFC));
  return s;
}

struct Step {
  enum Kind { Ok, Abort, Unpredictable, Undecodable } kind = Ok;
  rt::CpuState state;
  bool branched = false;
  uint32_t next_pc = 0;
  uint32_t id = 0;
  bool terminator = false;
};

// Decodes and executes one word at the state's current pc.
template <class Backend>
Step step(const Backend& be, rt::CpuState s, uint32_t word) {
  Step r;
  rt::DecodedInstr di;
  const uint32_t pc = s.pc();
  if (be.decode(word, pc, di) != rt::DecodeStatus::Ok) {
    r.kind = Step::Undecodable;
    r.state = std::move(s);
    return r;
  }
  r.id = di.id;
  r.terminator = di.is_terminator;
  s.begin_instruction(pc);
  try {
    be.execute(s, di);
  } catch (const rt::DataAbort&) {
    r.kind = Step::Abort;
  } catch (const rt::UnpredictableFault&) {
    r.kind = Step::Unpredictable;
  }
  r.branched = s.branched();
  r.next_pc = s.next_pc();
  r.state = std::move(s);
  return r;
}

inline bool same_step(const Step& a, const Step& b) {
  if (a.kind != b.kind) return false;
  if (a.kind != Step::Ok) return true;
  return a.state == b.state && a.branched == b.branched && (!a.branched || a.next_pc == b.next_pc);
}

}  // namespace testutil
