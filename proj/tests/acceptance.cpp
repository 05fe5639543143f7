// Acceptance run: one PASS/FAIL line per criterion. Exit status is the
// number of failures.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "issforge/analysis.hpp"
#include "issforge/harness.hpp"
#include "issforge/ingest.hpp"
#include "issforge/ir.hpp"
#include "issforge/programs.hpp"
#include "issforge/testgen.hpp"
#include "issforge/transforms.hpp"
#include "json.hpp"
#include "nospec/iss.hpp"
#include "spec/iss.hpp"

using namespace issforge;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << id << ". " << title << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 2) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

// ------------------------------------------------------------ round trip

struct RoundtripRun {
  TestCorpus corpus;
  RoundtripReport report;
  double seconds = 0;
};

template <class Iss>
RoundtripRun roundtrip_via_files(const std::vector<FlatInstruction>& flats, const std::string& tag) {
  const auto t0 = std::chrono::steady_clock::now();
  RoundtripRun r;
  r.corpus = build_test_corpus(flats);
  const auto dir = std::filesystem::temp_directory_path() / ("issforge_acceptance_" + tag);
  std::filesystem::remove_all(dir);
  write_test_corpus(r.corpus, dir);
  const Image img = read_image(dir / "corpus.uisa");
  const auto expected = read_lines(dir / "corpus.expected.asm");
  const Iss iss;
  r.report = roundtrip(img, expected, [&](uint32_t w) { return iss.disassemble(w); });
  r.seconds = seconds_since(t0);
  std::filesystem::remove_all(dir);
  return r;
}

// ------------------------------------------------------------ write-back faults

// Loads and stores that assign their base register.
bool has_writeback(const FlatInstruction& f) {
  bool memory = false, writes_base = false;
  visit(f.ast, [&](const Expr& e) { memory |= e.is<expr::Memory>(); });
  visit_stmts(f.ast, [&](const Stmt& s) {
    const auto* a = s.as<stmt::Assign>();
    if (!a) return;
    const auto* r = a->lhs->as<expr::Reg>();
    if (!r) return;
    const auto* v = r->index->as<expr::Var>();
    writes_base |= v && v->name == "n";
  });
  const bool captured = std::find(f.locals.begin(), f.locals.end(), "wb_enable") != f.locals.end();
  return memory && (writes_base || captured);
}

// Every register in every bank points at unmapped memory.
rt::CpuState faulting_state(uint32_t cond) {
  rt::CpuState s;
  for (uint32_t mode : {0x10u, 0x12u, 0x13u, 0x17u}) {
    s.set_cpsr(mode);
    if (s.current_mode_has_spsr()) s.set_spsr(0x10);
    for (uint32_t r = 0; r < 15; ++r) s.set_raw(r, 0xF00000);
  }
  s.set_cpsr(0x13);
  for (uint32_t nzcv = 0; nzcv < 16; ++nzcv) {
    s.set_cpsr(nzcv << 28 | 0x13);
    if (s.condition_passed(cond)) break;
  }
  s.begin_instruction(0x1000);
  return s;
}

struct FaultRun {
  size_t flats = 0;       // flats with write-back
  size_t covered = 0;     // of those, flats with at least one faulting test
  size_t tests = 0;       // faulting executions checked
  size_t failed = 0;
  std::string first_failure;
};

template <class Backend>
void fault_tests(const Backend& be, const std::vector<FlatInstruction>& flats, FaultRun& run) {
  std::mt19937_64 rng(0xAB047);
  for (size_t i = 0; i < flats.size(); ++i) {
    const FlatInstruction& f = flats[i];
    if (!has_writeback(f)) continue;
    ++run.flats;
    size_t faulted = 0;
    for (int k = 0; k < 200; ++k) {
      const ValidWord w = sample_valid(f, rng);
      rt::DecodedInstr di;
      if (be.decode(w.word, 0x1000, di) != rt::DecodeStatus::Ok || di.id != i) continue;
      const uint32_t cond = f.encoding.has_param("cond") ? f.encoding.extract("cond", w.word) : 14;
      const rt::CpuState pre = faulting_state(cond);
      const testutil::Step r = testutil::step(be, pre, w.word);
      if (r.kind != testutil::Step::Abort) continue;
      ++faulted;
      ++run.tests;
      const bool base_ok = !f.encoding.has_param("Rn") ||
                           r.state.reg(f.encoding.extract("Rn", w.word)) == pre.reg(f.encoding.extract("Rn", w.word));
      if (!base_ok || !(r.state == pre)) {
        ++run.failed;
        if (run.first_failure.empty()) run.first_failure = f.name + " word " + std::to_string(w.word);
      }
    }
    if (faulted > 0) ++run.covered;
    else if (run.first_failure.empty()) run.first_failure = f.name + " never faulted";
  }
}

bool fault_ok(const FaultRun& r) { return r.failed == 0 && r.covered == r.flats && r.flats > 0; }

std::string fault_detail(const FaultRun& r) {
  std::string s = std::to_string(r.tests) + " faulting executions over " + std::to_string(r.covered) + "/" +
                  std::to_string(r.flats) + " write-back instructions, " + std::to_string(r.failed) + " failures";
  if (!r.first_failure.empty()) s += " (" + r.first_failure + ")";
  return s;
}

// ------------------------------------------------------------ programs

std::vector<Image> programs(const std::vector<FlatInstruction>& flats, std::vector<std::string>& labels) {
  std::vector<Image> out;
  for (const auto& name : benchmark_names()) {
    out.push_back(make_benchmark(name, flats, 1));
    labels.push_back(name);
  }
  for (uint64_t seed = 0; seed < 100; ++seed) {
    out.push_back(random_program(flats, seed));
    labels.push_back("random " + std::to_string(seed));
  }
  return out;
}

rt::RunOptions options_for(const std::string& label, bool cache) {
  rt::RunOptions o;
  o.use_cache = cache;
  if (label.rfind("random", 0) == 0) o.max_insns = 200'000;  // random branches may loop
  return o;
}

// ------------------------------------------------------------ criteria

void roundtrip_criteria(RoundtripRun& spec) {
  spec = roundtrip_via_files<uarm_spec::Iss>(testutil::uarm().flats, "spec");
  const bool ok = spec.report.mismatches.empty() && spec.report.words >= 10000 && spec.seconds < 30;
  report(1, "round-trip decoder validation", ok,
         std::to_string(spec.report.mismatches.size()) + " mismatches out of " + std::to_string(spec.report.words) +
             " words in " + fmt(spec.seconds) + " s");
}

void writeback_criterion(FaultRun& spec_run) {
  fault_tests(testutil::interp(), testutil::uarm().flats, spec_run);
  FaultRun iss;
  fault_tests(uarm_spec::Iss{}, testutil::uarm().flats, iss);
  spec_run.tests += iss.tests;
  spec_run.failed += iss.failed;
  if (spec_run.first_failure.empty()) spec_run.first_failure = iss.first_failure;
  report(2, "write-back cancelled on data abort", fault_ok(spec_run) && fault_ok(iss),
         fault_detail(spec_run) + " (interpreter and generated simulator)");
}

void flatten_count_criterion() {
  const IsaDescription& d = testutil::description();
  size_t expected = 0;
  for (const auto& ins : d.instructions) expected += std::max<size_t>(1, ins.modes.size());
  const size_t flat = flatten(d).size();
  const size_t generics = testutil::generics().size();
  report(3, "flattening count", flat == expected && generics == expected,
         std::to_string(flat) + " flattened, expected " + std::to_string(expected) + " from " +
             std::to_string(d.instructions.size()) + " instructions");
}

void golden_criterion() {
  const auto flats = flatten(testutil::description());
  const auto it = std::find_if(flats.begin(), flats.end(), [](const auto& x) { return x.name == "ADC_lsl_imm"; });
  if (it == flats.end()) return report(4, "merged ADC / LSL-immediate table", false, "no ADC_lsl_imm");
  const FlatInstruction& f = *it;
  const std::string actual = "encoding: " + to_string(f.encoding) + "\nsyntax: " + to_string(f.syntax) + "\n";
  std::ifstream in(std::filesystem::path(ISSFORGE_TEST_DIR) / "golden" / "ADC_lsl_imm.txt");
  std::stringstream golden;
  golden << in.rdbuf();
  const uint32_t mask = f.encoding.mask(), value = f.encoding.value();
  const bool bits = (mask & 0x0FE00070u) == 0x0FE00070u && (value & 0x0FE00070u) == 0x00A00000u &&
                    f.encoding.find("shift_imm") && f.encoding.find("shift_imm")->hi == 11 &&
                    f.encoding.find("shift_imm")->lo == 7 && f.encoding.find("Rm") && f.encoding.find("Rm")->hi == 3;
  report(4, "merged ADC / LSL-immediate table", in && golden.str() == actual && bits,
         golden.str() == actual ? "golden file matches: " + to_string(f.encoding) : "differs: " + actual);
}

void may_branch_criterion() {
  const FlatInstruction& ldr = testutil::flat("LDR_reg_pre");
  const bool precise = equal(ldr.may_branch, parse_expression("d == 15"));
  const Interpreter& in = testutil::interp();
  std::mt19937_64 rng(0x5EED);
  size_t runs = 0, misses = 0;
  std::string first;
  while (runs < 100000) {
    for (const auto& f : testutil::uarm().flats) {
      const ValidWord w = sample_valid(f, rng);
      for (int j = 0; j < 10; ++j) {
        const testutil::Step r = testutil::step(in, testutil::random_state(rng), w.word);
        ++runs;
        if (!r.terminator && r.branched) {
          ++misses;
          if (first.empty()) first = " (" + in.flat_name(r.id) + ")";
        }
      }
    }
  }
  report(5, "may-branch precision and soundness", precise && misses == 0,
         "LDR_reg_pre: " + to_string(ldr.may_branch) + "; " + std::to_string(misses) + " false negatives over " +
             std::to_string(runs) + " interpretations" + first);
}

void preservation_criterion(std::vector<Outcome>& spec_outcomes) {
  std::vector<std::string> labels;
  const auto images = programs(testutil::uarm_nospec().flats, labels);
  size_t same = 0, halted = 0;
  std::string first;
  for (size_t i = 0; i < images.size(); ++i) {
    const Outcome oracle = run_image(testutil::interp(), images[i], options_for(labels[i], false));
    Outcome iss = run_image(uarm_spec::Iss{}, images[i], options_for(labels[i], true));
    if (same_outcome(oracle, iss)) ++same;
    else if (first.empty()) first = " (first difference: " + labels[i] + ")";
    if (i < benchmark_names().size() && oracle.result.reason == rt::StopReason::Halted) ++halted;
    spec_outcomes.push_back(std::move(iss));
  }
  report(6, "semantic preservation", same == images.size() && halted == benchmark_names().size(),
         std::to_string(same) + "/" + std::to_string(images.size()) + " programs identical (" +
             std::to_string(benchmark_names().size()) + " benchmarks, 100 random)" + first);
}

void performance_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string cmd = std::string("\"") + ISSFORGE_CLI + "\" bench --benchmark loop --scale 1 --repeats 5 --json";
  std::string text;
  if (FILE* p = popen(cmd.c_str(), "r")) {
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) text.append(buf, n);
    pclose(p);
  }
  const double secs = seconds_since(t0);
  try {
    const auto j = nlohmann::json::parse(text).at("benchmarks").at(0);
    const double speedup = j.at("speedup"), spec = j.at("specialization_ratio");
    const bool identical = j.at("identical");
    report(7, "performance", speedup >= 3.0 && spec >= 1.0 && identical && secs < 60,
           "loop: interpreter " + fmt(j.at("interpreter_mips").get<double>()) + " Mi/s, ISS " +
               fmt(j.at("iss_mips").get<double>()) + " Mi/s, speedup " + fmt(speedup, 1) + "x, specialization " +
               fmt(spec) + "x, " + fmt(secs, 1) + " s");
  } catch (const std::exception& e) {
    report(7, "performance", false, std::string("no bench report: ") + e.what());
  }
}

void transparency_criterion(const RoundtripRun& spec_rt, const std::vector<Outcome>& spec_outcomes) {
  const auto& flats = testutil::uarm_nospec().flats;
  // 1: same corpus, same verdict.
  const RoundtripRun rt1 = roundtrip_via_files<uarm_nospec::Iss>(flats, "nospec");
  const bool c1 = rt1.report.mismatches.empty() && rt1.corpus.image == spec_rt.corpus.image &&
                  rt1.corpus.expected == spec_rt.corpus.expected;
  // 2: write-back faults on the unspecialized flats.
  FaultRun f;
  fault_tests(Interpreter(flats), flats, f);
  FaultRun fi;
  fault_tests(uarm_nospec::Iss{}, flats, fi);
  const bool c2 = fault_ok(f) && fault_ok(fi);
  // 6: identical final states.
  std::vector<std::string> labels;
  const auto images = programs(flats, labels);
  size_t same = 0;
  for (size_t i = 0; i < images.size(); ++i)
    same += same_outcome(run_image(uarm_nospec::Iss{}, images[i], options_for(labels[i], true)), spec_outcomes.at(i));
  report(8, "specialization transparency", c1 && c2 && same == images.size(),
         "round trip " + std::to_string(rt1.report.mismatches.size()) + " mismatches on an identical corpus; " +
             std::to_string(f.tests + fi.tests) + " write-back faults, " + std::to_string(f.failed + fi.failed) +
             " failures; " + std::to_string(same) + "/" + std::to_string(images.size()) +
             " programs identical to the specialized simulator");
}

void precompute_criterion() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& flats = testutil::uarm().flats;
  const DecoderSpec dec = DecoderSpec::build(flats);
  const FlatInstruction& ldm = testutil::flat("LDM_ia");
  const uarm_spec::Iss iss;
  size_t bad = 0;
  for (uint32_t list = 0; list < 0x10000; ++list) {
    const uint32_t word = ldm.encoding.encode({{"cond", 14}, {"W", 0}, {"Rn", 1}, {"reglist", list}});
    const uint32_t want = 4 * static_cast<uint32_t>(std::popcount(list));
    const auto m = dec.decode(flats, word);
    rt::DecodedInstr di;
    if (m.status != rt::DecodeStatus::Ok || iss.decode(word, 0, di) != rt::DecodeStatus::Ok) {
      ++bad;
      continue;
    }
    const int idx = flats[di.id].param_index("nb_reg_x4");
    const auto it = m.env.find("nb_reg_x4");
    if (it == m.env.end() || it->second != want || idx < 0 || di.params[static_cast<size_t>(idx)] != want) ++bad;
  }
  const double secs = seconds_since(t0);
  report(9, "pre-computation soundness", bad == 0 && secs < 1.0,
         std::to_string(0x10000 - bad) + "/65536 register lists agree in " + fmt(secs, 3) + " s");
}

}  // namespace

int main() {
  try {
    RoundtripRun spec_rt;
    roundtrip_criteria(spec_rt);
    FaultRun faults;
    writeback_criterion(faults);
    flatten_count_criterion();
    golden_criterion();
    may_branch_criterion();
    std::vector<Outcome> outcomes;
    preservation_criterion(outcomes);
    performance_criterion();
    transparency_criterion(spec_rt, outcomes);
    precompute_criterion();
  } catch (const std::exception& e) {
    std::cout << "FAIL  acceptance run aborted: " << e.what() << std::endl;
    return 1;
  }
  return failures;
}
