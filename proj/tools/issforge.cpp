// Command-line front end. Built twice: `issforge-gen` without generated
// simulators (used by the build to emit them) and `issforge` with them.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "issforge/analysis.hpp"
#include "issforge/error.hpp"
#include "issforge/harness.hpp"
#include "issforge/pipeline.hpp"
#include "issforge/programs.hpp"
#include "issforge/sim.hpp"
#include "issforge/simgen.hpp"
#include "issforge/testgen.hpp"
#include "json.hpp"

#ifdef ISSFORGE_WITH_ISS
#include "nospec/iss.hpp"
#include "spec/iss.hpp"
#endif

using namespace issforge;
using json = nlohmann::json;

namespace {

struct Common {
  std::string corpus;
  bool no_specialize = false;
  std::optional<uint64_t> threshold;
  std::string profile;
};

void add_transform_flags(CLI::App* cmd, Common& c) {
  cmd->add_flag("--no-specialize", c.no_specialize, "Skip instruction specialization");
  cmd->add_option("--weight-threshold", c.threshold, "Minimum profile weight for specialization");
  cmd->add_option("--profile", c.profile, "Profile file (name<TAB>count)");
}

PipelineResult pipeline(const Common& c, bool record = false) {
  const std::filesystem::path dir = c.corpus.empty() ? default_corpus_dir() : std::filesystem::path(c.corpus);
  Corpus corpus = load_corpus(dir);
  TransformConfig cfg = default_config(corpus);
  cfg.specialize = !c.no_specialize;
  cfg.weight_threshold = c.threshold;
  cfg.record_passes = record;
  if (!c.profile.empty()) cfg.profile = parse_profile(read_file(c.profile));
  return run_pipeline(corpus.sources, cfg);
}

void print_warnings(const PipelineResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

// Calls f with the selected back-end. The generated simulators are built
// from the bundled corpus.
template <class F>
int with_backend(const std::string& name, const Common& c, F&& f) {
  if (name == "interp") {
    PipelineResult r = pipeline(c);
    print_warnings(r);
    Interpreter in(std::move(r.flats));
    in.set_abort_vector(r.desc.abort_vector);
    return f(in);
  }
  if (name == "iss") {
#ifdef ISSFORGE_WITH_ISS
    if (!c.corpus.empty() || !c.profile.empty() || c.threshold)
      throw Error("the iss back-end is generated from the bundled corpus; use --backend interp");
    if (c.no_specialize) return f(uarm_nospec::Iss{});
    return f(uarm_spec::Iss{});
#else
    throw Error("this build has no generated simulator; use --backend interp");
#endif
  }
  throw Error("unknown back-end " + name);
}

#ifdef ISSFORGE_WITH_ISS
constexpr const char* kDefaultBackend = "iss";
#else
constexpr const char* kDefaultBackend = "interp";
#endif

int cmd_parse(const Common& c, const std::string& out) {
  const std::filesystem::path dir = c.corpus.empty() ? default_corpus_dir() : std::filesystem::path(c.corpus);
  Corpus corpus = load_corpus(dir);
  IsaDescription desc = link(corpus.sources);
  for (const auto& w : desc.warnings) std::cerr << "warning: " << w << '\n';
  std::filesystem::create_directories(out);
  std::ofstream(std::filesystem::path(out) / "description.ir") << dump(desc);
  std::cout << desc.instructions.size() << " instructions, " << desc.modes.size() << " mode cases; IR written to "
            << (std::filesystem::path(out) / "description.ir").string() << '\n';
  return 0;
}

int cmd_pipeline(const Common& c, const std::string& dump_dir, bool dump_mb) {
  PipelineResult r = pipeline(c, !dump_dir.empty());
  print_warnings(r);
  std::cout << r.flats.size() << " flat instructions (" << r.generic_count() << " generic), threshold "
            << r.threshold << '\n';
  if (!dump_dir.empty()) {
    dump_ir(r, dump_dir);
    std::cout << "IR written to " << dump_dir << '\n';
  }
  if (dump_mb)
    for (const auto& f : r.flats)
      std::cout << f.name << '\t' << (f.may_branch ? to_string(f.may_branch) : std::string("1")) << '\n';
  return 0;
}

int cmd_gen_iss(const Common& c, const std::string& out, const std::string& ns) {
  PipelineResult r = pipeline(c);
  print_warnings(r);
  EmitOptions opt;
  opt.ns = ns;
  opt.abort_vector = r.desc.abort_vector;
  GeneratedIss iss = emit_iss(r.flats, opt);
  write_iss(iss, out);
  std::cout << iss.routines << " semantics routines, " << iss.param_lists << " parameter layouts written to " << out
            << '\n';
  return 0;
}

int cmd_gen_tests(const Common& c, const std::string& out, size_t budget, uint64_t seed) {
  PipelineResult r = pipeline(c);
  print_warnings(r);
  TestCorpus tc = build_test_corpus(r.flats, budget, seed);
  write_test_corpus(tc, out);
  std::cout << tc.image.words.size() << " words written to " << out << '\n';
  return 0;
}

int cmd_roundtrip(const Common& c, const std::string& dir, const std::string& backend, size_t budget, bool as_json) {
  Image image;
  std::vector<std::string> expected;
  if (dir.empty()) {
    Common generic = c;
    generic.no_specialize = true;
    TestCorpus tc = build_test_corpus(pipeline(generic).flats, budget);
    image = std::move(tc.image);
    expected = std::move(tc.expected);
  } else {
    image = read_image(std::filesystem::path(dir) / "corpus.uisa");
    expected = read_lines(std::filesystem::path(dir) / "corpus.expected.asm");
  }
  return with_backend(backend, c, [&](const auto& be) {
    const auto t0 = std::chrono::steady_clock::now();
    RoundtripReport rep = roundtrip(image, expected, [&](uint32_t w) { return be.disassemble(w); });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (as_json) {
      json mism = json::array();
      for (const auto& m : rep.mismatches)
        mism.push_back({{"line", m.line}, {"word", m.word}, {"expected", m.expected}, {"actual", m.actual}});
      std::cout << json{{"words", rep.words}, {"mismatches", rep.mismatches.size()}, {"seconds", secs},
                        {"details", mism}}
                       .dump(2)
                << '\n';
    } else {
      std::cout << format_mismatches(rep);
      std::cout << rep.words << " words, " << rep.mismatches.size() << " mismatches\n";
    }
    return rep.mismatches.empty() ? 0 : 1;
  });
}

std::string hex8(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

int cmd_sim(const Common& c, const std::string& image_path, const std::string& backend, uint64_t max_insns,
            const std::string& profile_out, bool trace, bool no_cache) {
  const Image image = read_image(image_path);
  return with_backend(backend, c, [&](const auto& be) {
    rt::RunOptions opt;
    opt.max_insns = max_insns;
    opt.use_cache = !no_cache;
    std::vector<uint64_t> counts(be.flat_count(), 0);
    opt.profile = &counts;
    if (trace)
      opt.trace = [&](const rt::DecodedInstr& di, const rt::CpuState&) {
        std::cout << hex8(di.addr) << ": " << be.print(di) << '\n';
      };
    Outcome o = run_image(be, image, opt);
    std::cout << "stop: " << rt::to_string(o.result.reason);
    if (!o.result.message.empty()) std::cout << " (" << o.result.message << ")";
    std::cout << "\nexecuted: " << o.result.executed << "\ndata aborts: " << o.result.data_aborts << '\n'
              << o.state.describe();
    if (!profile_out.empty()) {
      Profile p;
      for (size_t i = 0; i < counts.size(); ++i)
        if (counts[i]) p[be.flat_name(i)] = counts[i];
      std::ofstream(profile_out) << format_profile(p);
    }
    const auto r = o.result.reason;
    return r == rt::StopReason::Halted || r == rt::StopReason::Limit ? 0 : 2;
  });
}

int cmd_disasm(const Common& c, const std::string& image_path, const std::string& backend, bool addresses) {
  const Image image = read_image(image_path);
  return with_backend(backend, c, [&](const auto& be) {
    for (size_t i = 0; i < image.words.size(); ++i) {
      if (addresses) std::cout << hex8(static_cast<uint32_t>(i * 4)) << ": " << hex8(image.words[i]) << "  ";
      std::cout << be.disassemble(image.words[i]) << '\n';
    }
    return 0;
  });
}

int cmd_bench(const std::vector<std::string>& names, uint32_t scale, int repeats, bool as_json,
              const std::string& images) {
#ifdef ISSFORGE_WITH_ISS
  Common generic;
  generic.no_specialize = true;
  PipelineResult r = pipeline(generic);
  Interpreter interp(r.flats);
  interp.set_abort_vector(r.desc.abort_vector);
  rt::RunOptions pure;
  pure.use_cache = false;
  rt::RunOptions cached;
  json out = json::array();
  bool ok = true;
  for (const auto& name : names) {
    const Image img = make_benchmark(name, r.flats, scale);
    if (!images.empty()) {
      std::filesystem::create_directories(images);
      write_image(img, std::filesystem::path(images) / (name + ".uisa"));
    }
    // The uncached interpreter is slow enough that one run is stable.
    const Outcome a = run_image(interp, img, pure);
    const Outcome ac = best_of(interp, img, cached, repeats);
    const Outcome b = best_of(uarm_nospec::Iss{}, img, cached, repeats);
    const Outcome s = best_of(uarm_spec::Iss{}, img, cached, repeats);
    const bool same = same_outcome(a, ac) && same_outcome(a, b) && same_outcome(a, s);
    ok = ok && same && a.result.reason == rt::StopReason::Halted;
    out.push_back({{"benchmark", name},
                   {"instructions", a.result.executed},
                   {"interpreter_mips", a.mips()},
                   {"interpreter_cached_mips", ac.mips()},
                   {"iss_nospec_mips", b.mips()},
                   {"iss_mips", s.mips()},
                   {"speedup", s.mips() / a.mips()},
                   {"speedup_vs_cached_interpreter", s.mips() / ac.mips()},
                   {"specialization_ratio", s.mips() / b.mips()},
                   {"identical", same}});
    if (!as_json)
      std::printf("%-8s %9llu insns  interpreter %6.2f Mi/s (cached %6.2f)  iss no-spec %7.2f Mi/s  iss %7.2f Mi/s  "
                  "speedup %6.1fx (vs cached %5.1fx)  specialization %4.2fx  %s\n",
                  name.c_str(), static_cast<unsigned long long>(a.result.executed), a.mips(), ac.mips(), b.mips(),
                  s.mips(), s.mips() / a.mips(), s.mips() / ac.mips(), s.mips() / b.mips(),
                  same ? "identical" : "STATES DIFFER");
  }
  if (as_json) std::cout << json{{"benchmarks", out}}.dump(2) << '\n';
  return ok ? 0 : 1;
#else
  (void)names, (void)scale, (void)repeats, (void)as_json, (void)images;
  throw Error("this build has no generated simulator");
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Instruction-set simulator generator"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--corpus", c.corpus, "Description directory (default: bundled corpus or $ISSFORGE_CORPUS)");

  auto* parse = app.add_subcommand("parse", "Validate a description and dump its IR");
  std::string parse_out = "ir";
  parse->add_option("corpus", c.corpus, "Description directory");
  parse->add_option("--out-dir", parse_out, "Where to write description.ir");

  auto* pipe = app.add_subcommand("pipeline", "Run the transformation pipeline");
  std::string dump_dir;
  bool dump_mb = false;
  pipe->add_option("corpus", c.corpus, "Description directory");
  add_transform_flags(pipe, c);
  pipe->add_option("--dump-ir", dump_dir, "Write per-pass IR to this directory");
  pipe->add_flag("--dump-maybranch", dump_mb, "Print every may-branch condition");

  auto* gen = app.add_subcommand("gen-iss", "Emit the C++ simulator sources");
  std::string gen_out = "gen", ns = "iss";
  gen->add_option("corpus", c.corpus, "Description directory");
  add_transform_flags(gen, c);
  gen->add_option("--out-dir", gen_out, "Output directory");
  gen->add_option("--namespace", ns, "Namespace of the generated code");

  auto* tests = app.add_subcommand("gen-tests", "Emit the round-trip test corpus");
  std::string tests_out = "tests-out";
  size_t budget = kDefaultBudget;
  uint64_t seed = kDefaultSeed;
  tests->add_option("--out-dir", tests_out, "Output directory");
  tests->add_option("--budget", budget, "Words per instruction")->check(CLI::PositiveNumber);
  tests->add_option("--seed", seed, "Sampling seed");

  auto* rt_cmd = app.add_subcommand("roundtrip", "Decode and print a test corpus and diff against the expectation");
  std::string rt_dir, backend = kDefaultBackend;
  bool as_json = false;
  rt_cmd->add_option("--dir", rt_dir, "Directory from gen-tests (default: generate in memory)");
  rt_cmd->add_option("--budget", budget, "Words per instruction when generating")->check(CLI::PositiveNumber);
  rt_cmd->add_option("--backend", backend, "iss or interp")->check(CLI::IsMember({"iss", "interp"}));
  rt_cmd->add_flag("--no-specialize", c.no_specialize, "Use the unspecialized simulator");
  rt_cmd->add_flag("--json", as_json, "Machine-readable report");

  auto* sim = app.add_subcommand("sim", "Run a program image");
  std::string image, profile_out;
  uint64_t max_insns = 100'000'000;
  bool trace = false, no_cache = false;
  sim->add_option("--image", image, "UISA image")->required();
  sim->add_option("--max-insns", max_insns, "Instruction limit");
  sim->add_option("--emit-profile", profile_out, "Write execution counts (name<TAB>count)");
  sim->add_flag("--trace", trace, "Print each executed instruction");
  sim->add_option("--backend", backend, "iss or interp")->check(CLI::IsMember({"iss", "interp"}));
  sim->add_flag("--no-cache", no_cache, "Decode every instruction again");
  sim->add_flag("--no-specialize", c.no_specialize, "Use the unspecialized simulator");

  auto* bench = app.add_subcommand("bench", "Compare interpreter and generated simulator throughput");
  std::string bench_name = "all";
  uint32_t scale = 1;
  int repeats = 3;
  std::vector<std::string> choices = benchmark_names();
  choices.push_back("all");
  bench->add_option("--benchmark", bench_name, "loop, sorting, crypto or all")->check(CLI::IsMember(choices));
  bench->add_option("--scale", scale, "Iteration multiplier")->check(CLI::PositiveNumber);
  bench->add_option("--repeats", repeats, "Runs per measurement (fastest is kept)")->check(CLI::PositiveNumber);
  bench->add_flag("--json", as_json, "Machine-readable report");
  std::string images;
  bench->add_option("--emit-images", images, "Also write the benchmark images to this directory");

  auto* dis = app.add_subcommand("disasm", "Disassemble a program image");
  bool addresses = false;
  dis->add_option("--image", image, "UISA image")->required();
  dis->add_option("--backend", backend, "iss or interp")->check(CLI::IsMember({"iss", "interp"}));
  dis->add_flag("--addresses", addresses, "Prefix lines with address and word");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*parse) return cmd_parse(c, parse_out);
    if (*pipe) return cmd_pipeline(c, dump_dir, dump_mb);
    if (*gen) return cmd_gen_iss(c, gen_out, ns);
    if (*tests) return cmd_gen_tests(c, tests_out, budget, seed);
    if (*rt_cmd) return cmd_roundtrip(c, rt_dir, backend, budget, as_json);
    if (*sim) return cmd_sim(c, image, backend, max_insns, profile_out, trace, no_cache);
    if (*dis) return cmd_disasm(c, image, backend, addresses);
    if (*bench) {
      const auto names = bench_name == "all" ? benchmark_names() : std::vector<std::string>{bench_name};
      return cmd_bench(names, scale, repeats, as_json, images);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
