#include "issforge/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "issforge/analysis.hpp"
#include "issforge/error.hpp"

#ifndef ISSFORGE_DEFAULT_CORPUS
#define ISSFORGE_DEFAULT_CORPUS "data/uarm"
#endif

namespace issforge {

std::filesystem::path default_corpus_dir() {
  if (const char* env = std::getenv("ISSFORGE_CORPUS"); env && *env) return env;
  return ISSFORGE_DEFAULT_CORPUS;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  Corpus c;
  const std::string stem = dir.lexically_normal().filename().string();
  c.sources = load_sources(dir, stem);
  if (auto p = dir / (stem + ".opt"); std::filesystem::exists(p))
    c.opt = parse_opt(read_file(p), p.string());
  if (auto p = dir / "overrides.mb"; std::filesystem::exists(p))
    c.overrides = parse_overrides(read_file(p), p.string());
  return c;
}

TransformConfig default_config(const Corpus& corpus) {
  TransformConfig cfg;
  cfg.opt = corpus.opt;
  cfg.overrides = corpus.overrides;
  return cfg;
}

size_t PipelineResult::generic_count() const {
  size_t n = 0;
  for (const auto& f : flats) n += f.is_variant() ? 0 : 1;
  return n;
}

const FlatInstruction* PipelineResult::find(const std::string& name) const {
  for (const auto& f : flats)
    if (f.name == name) return &f;
  return nullptr;
}

PipelineResult run_pipeline(const SourceSet& sources, const TransformConfig& cfg) {
  PipelineResult r;
  std::vector<FlatInstruction> flats;
  auto snap_desc = [&](const char* pass) {
    if (cfg.record_passes) r.passes.push_back({pass, dump(r.desc), {}});
  };
  auto snap = [&](const char* pass) {
    if (cfg.record_passes) r.passes.push_back({pass, {}, flats});
  };

  r.desc = link(sources);
  r.warnings = r.desc.warnings;
  snap_desc("link");
  symbolic_rewrite(r.desc);
  snap_desc("symbolic");

  flats = flatten(r.desc);
  snap("flatten");
  for (auto& f : flats) move_writeback(f);
  snap("writeback");
  precompute(flats, cfg.opt.precompute);
  snap("precompute");

  if (cfg.profile) {
    for (auto& w : ingest_profile(flats, *cfg.profile)) r.warnings.push_back(std::move(w));
    r.threshold = cfg.weight_threshold.value_or(1000);
  } else if (cfg.weight_threshold) {
    r.threshold = *cfg.weight_threshold;
  } else {
    // Without a profile a small ISA is specialized completely.
    r.threshold = flats.size() < 64 ? 0 : std::numeric_limits<uint64_t>::max();
  }
  if (cfg.specialize) {
    flats = specialize(flats, cfg.opt.specialize, r.threshold);
    snap("specialize");
  }

  annotate_may_branch(flats, cfg.overrides, &r.warnings);
  snap("maybranch");
  for (auto& f : flats) prune_params(f);
  snap("prune");
  r.flats = std::move(flats);
  return r;
}

std::string describe(const FlatInstruction& f) {
  std::ostringstream os;
  os << "Instruction " << f.name << ":\n";
  if (f.is_variant()) {
    os << "  variant of " << f.generic << " with";
    for (const auto& [p, v] : f.selection) os << ' ' << p << '=' << v;
    os << '\n';
  }
  os << "  encoding: " << to_string(f.encoding) << '\n';
  os << "  syntax: " << to_string(f.syntax) << '\n';
  for (const auto& c : f.constraints) os << "  constraint " << to_string(c) << '\n';
  os << "  params:";
  for (const auto& p : f.params) os << ' ' << p.name << '/' << p.width;
  os << '\n';
  for (const auto& r : f.decode_rules) os << "  decode " << r.param << " = " << to_string(r.expr) << '\n';
  if (f.may_branch) os << "  may_branch: " << to_string(f.may_branch) << '\n';
  if (f.weight) os << "  weight: " << f.weight << '\n';
  os << "  code:\n" << to_string(f.ast, 2) << '\n';
  return os.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

void write_flats(const std::vector<FlatInstruction>& flats, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : flats) write_text(dir / (f.name + ".ir"), describe(f));
}

}  // namespace

void dump_ir(const PipelineResult& result, const std::filesystem::path& dir) {
  write_flats(result.flats, dir);
  for (size_t i = 0; i < result.passes.size(); ++i) {
    const PassSnapshot& p = result.passes[i];
    const std::string name = (i < 9 ? "0" : "") + std::to_string(i + 1) + "-" + p.pass;
    if (!p.description.empty()) {
      std::filesystem::create_directories(dir / "passes");
      write_text(dir / "passes" / (name + ".txt"), p.description);
    } else {
      write_flats(p.flats, dir / "passes" / name);
    }
  }
}

}  // namespace issforge
