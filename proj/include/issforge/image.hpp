#pragma once

// UISA program images: a 16-byte header (magic "UISA", version, entry pc,
// word count) followed by little-endian 32-bit words loaded at address 0.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "issforge/runtime/cpu.hpp"

namespace issforge {

inline constexpr uint32_t kImageVersion = 1;
inline constexpr uint32_t kRamSize = 0x10000;

struct Image {
  uint32_t entry = 0;
  std::vector<uint32_t> words;
  friend bool operator==(const Image&, const Image&) = default;
};

std::vector<uint8_t> serialize(const Image& image);
// Throws Error on a bad header or truncated body.
Image parse_image(const std::vector<uint8_t>& bytes);

void write_image(const Image& image, const std::filesystem::path& path);
Image read_image(const std::filesystem::path& path);

// Fresh state with RAM mapped at 0, the image loaded and pc at the entry.
// Throws Error when the image is larger than RAM.
rt::CpuState make_state(const Image& image);

}  // namespace issforge
