#pragma once

// The transformation pipeline from description files to flat instructions.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "issforge/ingest.hpp"
#include "issforge/isa.hpp"
#include "issforge/transforms.hpp"

namespace issforge {

struct TransformConfig {
  bool specialize = true;
  std::optional<uint64_t> weight_threshold;
  std::optional<Profile> profile;
  OptSpec opt;
  std::map<std::string, ExprPtr> overrides;
  bool record_passes = false;  // keep a snapshot after every pass
};

// Everything a corpus directory provides.
struct Corpus {
  SourceSet sources;
  OptSpec opt;
  std::map<std::string, ExprPtr> overrides;
};

// Loads `<dir>/<stem>.*`, plus `<stem>.opt` and `overrides.mb` when present.
Corpus load_corpus(const std::filesystem::path& dir);

// Path of the bundled corpus; ISSFORGE_CORPUS overrides it.
std::filesystem::path default_corpus_dir();

// Config with the corpus's optimisation file and overrides.
TransformConfig default_config(const Corpus& corpus);

struct PassSnapshot {
  std::string pass;
  std::string description;             // set for passes over the description
  std::vector<FlatInstruction> flats;  // set for passes over flat instructions
};

struct PipelineResult {
  IsaDescription desc;
  // Generic flats in description order, each followed by its variants.
  std::vector<FlatInstruction> flats;
  std::vector<std::string> warnings;
  uint64_t threshold = 0;
  std::vector<PassSnapshot> passes;  // filled when record_passes is set

  size_t generic_count() const;
  const FlatInstruction* find(const std::string& name) const;
};

PipelineResult run_pipeline(const SourceSet& sources, const TransformConfig& config);

// Writes one file per flat instruction (code, encoding, syntax, constraints,
// may-branch) into `dir`. Recorded passes go to numbered subdirectories.
void dump_ir(const PipelineResult& result, const std::filesystem::path& dir);
std::string describe(const FlatInstruction& flat);

}  // namespace issforge
