#include "issforge/image.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "issforge/error.hpp"

namespace issforge {

namespace {

void put32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get32(const std::vector<uint8_t>& in, size_t at) {
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | in[at + static_cast<size_t>(i)];
  return v;
}

}  // namespace

std::vector<uint8_t> serialize(const Image& image) {
  std::vector<uint8_t> out = {'U', 'I', 'S', 'A'};
  put32(out, kImageVersion);
  put32(out, image.entry);
  put32(out, static_cast<uint32_t>(image.words.size()));
  for (uint32_t w : image.words) put32(out, w);
  return out;
}

Image parse_image(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "UISA", 4) != 0) throw Error("not a UISA image");
  if (get32(bytes, 4) != kImageVersion)
    throw Error("unsupported UISA version " + std::to_string(get32(bytes, 4)));
  Image img;
  img.entry = get32(bytes, 8);
  const uint64_t count = get32(bytes, 12);
  if (bytes.size() != 16 + count * 4)
    throw Error("UISA image holds " + std::to_string((bytes.size() - 16) / 4) + " words, header says " +
                std::to_string(count));
  img.words.reserve(count);
  for (size_t i = 0; i < count; ++i) img.words.push_back(get32(bytes, 16 + 4 * i));
  return img;
}

void write_image(const Image& image, const std::filesystem::path& path) {
  const auto bytes = serialize(image);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_image(bytes);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

rt::CpuState make_state(const Image& image) {
  if (image.words.size() * 4 > kRamSize) throw Error("image does not fit in memory");
  rt::CpuState s;
  s.mem.map(0, kRamSize);
  std::vector<uint8_t> bytes;
  bytes.reserve(image.words.size() * 4);
  for (uint32_t w : image.words)
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<uint8_t>(w >> (8 * i)));
  s.mem.load(0, bytes.data(), bytes.size());
  s.set_pc(image.entry);
  return s;
}

}  // namespace issforge
