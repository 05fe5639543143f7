#pragma once

// Generation of valid instruction words with their expected assembly, and
// the round-trip check against a disassembler.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "issforge/image.hpp"
#include "issforge/isa.hpp"

namespace issforge {

inline constexpr size_t kDefaultBudget = 4096;
inline constexpr uint64_t kDefaultSeed = 0x1551F0;

struct ValidWord {
  uint32_t word = 0;
  std::map<std::string, uint32_t> fields;  // by encoding field name
};

// Values a free field may take under the flat's single-field constraints.
struct FieldDomain {
  std::string field;
  unsigned width = 0;
  std::vector<uint32_t> excluded;  // sorted, in range

  uint64_t size() const { return (uint64_t{1} << width) - excluded.size(); }
  bool contains(uint32_t v) const;
  uint32_t sample(std::mt19937_64& rng) const;
  std::vector<uint32_t> values() const;  // only for small domains
  // Minimum, maximum and the neighbours of each excluded value.
  std::vector<uint32_t> boundary() const;
};

std::vector<FieldDomain> field_domains(const FlatInstruction& flat);

// Words satisfying every constraint of `flat`: all of them when the free
// space fits the budget, otherwise boundary values of each field plus
// uniform samples. Throws Error when the constraints are unsatisfiable.
std::vector<ValidWord> enumerate_valid(const FlatInstruction& flat, size_t budget = kDefaultBudget,
                                       uint64_t seed = kDefaultSeed);

// One uniformly drawn valid word.
ValidWord sample_valid(const FlatInstruction& flat, std::mt19937_64& rng);

struct TestCorpus {
  Image image;
  std::vector<std::string> expected;  // line i renders word i
  std::vector<size_t> source;         // generating flat index per word
};

// Enumerates every generic flat in `flats`.
TestCorpus build_test_corpus(const std::vector<FlatInstruction>& flats, size_t budget = kDefaultBudget,
                             uint64_t seed = kDefaultSeed);

// Writes corpus.uisa and corpus.expected.asm.
void write_test_corpus(const TestCorpus& corpus, const std::filesystem::path& dir);
std::vector<std::string> read_lines(const std::filesystem::path& path);

struct Mismatch {
  size_t line = 0;  // 1-based
  uint32_t word = 0;
  std::string expected;
  std::string actual;
};

struct RoundtripReport {
  size_t words = 0;
  std::vector<Mismatch> mismatches;
};

using Disassembler = std::function<std::string(uint32_t)>;
RoundtripReport roundtrip(const Image& image, const std::vector<std::string>& expected, const Disassembler& dis);
// diff-style listing of the mismatches.
std::string format_mismatches(const RoundtripReport& report);

// A program of `length` random valid words after a prologue that points
// R0..R12 into the data area. Branch offsets stay inside the program, the
// abort handler resumes after the faulting instruction, and mode-switching
// instructions are left out. Ends in a halt.
Image random_program(const std::vector<FlatInstruction>& flats, uint64_t seed, size_t length = 64);

}  // namespace issforge
