#pragma once

// C++ source generation for a fast simulator over a set of flat instructions.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "issforge/isa.hpp"

namespace issforge {

struct EmitOptions {
  std::string ns = "iss";  // namespace of the generated code
  uint32_t abort_vector = 0x10;
};

struct GeneratedFile {
  std::string name;
  std::string text;
};

struct GeneratedIss {
  std::vector<GeneratedFile> files;  // iss.hpp, params.hpp, semantics.cpp, decoder.cpp, printer.cpp
  size_t routines = 0;
  size_t param_lists = 0;
};

// Throws Error for a construct with no translation.
GeneratedIss emit_iss(const std::vector<FlatInstruction>& flats, const EmitOptions& options);

// Writes the files, leaving unchanged ones untouched so builds stay incremental.
void write_iss(const GeneratedIss& iss, const std::filesystem::path& dir);

}  // namespace issforge
