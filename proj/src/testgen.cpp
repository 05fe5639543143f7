#include "issforge/testgen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "issforge/error.hpp"
#include "issforge/programs.hpp"
#include "issforge/sim.hpp"

namespace issforge {

bool FieldDomain::contains(uint32_t v) const {
  if (width < 32 && (v >> width) != 0) return false;
  return !std::binary_search(excluded.begin(), excluded.end(), v);
}

uint32_t FieldDomain::sample(std::mt19937_64& rng) const {
  const uint32_t mask = width >= 32 ? 0xFFFFFFFFu : (1u << width) - 1u;
  for (;;) {
    const uint32_t v = static_cast<uint32_t>(rng()) & mask;
    if (contains(v)) return v;
  }
}

std::vector<uint32_t> FieldDomain::values() const {
  std::vector<uint32_t> out;
  for (uint64_t v = 0; v < (uint64_t{1} << width); ++v)
    if (contains(static_cast<uint32_t>(v))) out.push_back(static_cast<uint32_t>(v));
  return out;
}

std::vector<uint32_t> FieldDomain::boundary() const {
  const uint32_t max = width >= 32 ? 0xFFFFFFFFu : (1u << width) - 1u;
  std::set<uint32_t> b = {0, max};
  for (uint32_t x : excluded) {
    if (x > 0) b.insert(x - 1);
    if (x < max) b.insert(x + 1);
  }
  std::vector<uint32_t> out;
  for (uint32_t v : b)
    if (contains(v)) out.push_back(v);
  return out;
}

std::vector<FieldDomain> field_domains(const FlatInstruction& flat) {
  std::vector<FieldDomain> out;
  for (const auto& f : flat.encoding.fields) {
    if (f.is_constant) continue;
    FieldDomain d;
    d.field = f.content;
    d.width = f.width();
    std::set<uint32_t> ex;
    for (const auto& c : flat.constraints) {
      if (c.param_a != f.content || c.kind == ValidityConstraint::Kind::ParamsDiffer) continue;
      for (uint32_t v : c.values)
        if (d.width >= 32 || (v >> d.width) == 0) ex.insert(v);
    }
    d.excluded.assign(ex.begin(), ex.end());
    if (d.size() == 0) throw Error("in " + flat.name + ": constraints leave no value for " + f.content);
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

// Stable across platforms, unlike std::hash.
uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
  return h;
}

bool pairs_hold(const FlatInstruction& flat, const std::map<std::string, uint32_t>& fields) {
  for (const auto& c : flat.constraints)
    if (c.kind == ValidityConstraint::Kind::ParamsDiffer && fields.at(c.param_a) == fields.at(c.param_b))
      return false;
  return true;
}

ValidWord make_word(const FlatInstruction& flat, std::map<std::string, uint32_t> fields) {
  ValidWord w;
  w.word = flat.encoding.encode(fields);
  w.fields = std::move(fields);
  return w;
}

// Draws the remaining fields at random until the pair constraints hold.
bool complete(const FlatInstruction& flat, const std::vector<FieldDomain>& doms,
              std::map<std::string, uint32_t>& fields, const std::string& pinned, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (const auto& d : doms)
      if (d.field != pinned) fields[d.field] = d.sample(rng);
    if (pairs_hold(flat, fields)) return true;
  }
  return false;
}

}  // namespace

ValidWord sample_valid(const FlatInstruction& flat, std::mt19937_64& rng) {
  const auto doms = field_domains(flat);
  std::map<std::string, uint32_t> fields;
  if (!complete(flat, doms, fields, "", rng)) throw Error("in " + flat.name + ": constraints are unsatisfiable");
  return make_word(flat, std::move(fields));
}

std::vector<ValidWord> enumerate_valid(const FlatInstruction& flat, size_t budget, uint64_t seed) {
  const auto doms = field_domains(flat);
  std::vector<ValidWord> out;

  long double space = 1;
  for (const auto& d : doms) space *= static_cast<long double>(d.size());
  if (space <= static_cast<long double>(budget)) {
    std::vector<std::vector<uint32_t>> vals;
    for (const auto& d : doms) vals.push_back(d.values());
    std::vector<size_t> idx(doms.size(), 0);
    for (;;) {
      std::map<std::string, uint32_t> fields;
      for (size_t i = 0; i < doms.size(); ++i) fields[doms[i].field] = vals[i][idx[i]];
      if (pairs_hold(flat, fields)) out.push_back(make_word(flat, std::move(fields)));
      size_t k = 0;
      while (k < idx.size() && ++idx[k] == vals[k].size()) idx[k++] = 0;
      if (k == idx.size()) break;
    }
    if (out.empty()) throw Error("in " + flat.name + ": constraints are unsatisfiable");
    return out;
  }

  std::mt19937_64 rng(seed ^ fnv1a(flat.name));
  std::set<uint32_t> seen;
  auto add = [&](std::map<std::string, uint32_t> fields) {
    ValidWord w = make_word(flat, std::move(fields));
    if (seen.insert(w.word).second) out.push_back(std::move(w));
  };
  for (const auto& d : doms) {
    for (uint32_t v : d.boundary()) {
      if (out.size() >= budget) break;
      std::map<std::string, uint32_t> fields{{d.field, v}};
      if (complete(flat, doms, fields, d.field, rng)) add(std::move(fields));
    }
  }
  for (size_t attempts = 0; out.size() < budget && attempts < budget * 20; ++attempts) {
    std::map<std::string, uint32_t> fields;
    if (!complete(flat, doms, fields, "", rng)) break;
    add(std::move(fields));
  }
  if (out.empty()) throw Error("in " + flat.name + ": constraints are unsatisfiable");
  return out;
}

TestCorpus build_test_corpus(const std::vector<FlatInstruction>& flats, size_t budget, uint64_t seed) {
  TestCorpus c;
  for (size_t i = 0; i < flats.size(); ++i) {
    if (flats[i].is_variant()) continue;
    for (auto& w : enumerate_valid(flats[i], budget, seed)) {
      c.image.words.push_back(w.word);
      c.expected.push_back(print_asm(flats[i], w.fields));
      c.source.push_back(i);
    }
  }
  return c;
}

void write_test_corpus(const TestCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_image(corpus.image, dir / "corpus.uisa");
  std::ofstream out(dir / "corpus.expected.asm");
  for (const auto& line : corpus.expected) out << line << '\n';
  if (!out) throw Error("cannot write " + (dir / "corpus.expected.asm").string());
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
    lines.push_back(std::move(l));
  }
  return lines;
}

RoundtripReport roundtrip(const Image& image, const std::vector<std::string>& expected, const Disassembler& dis) {
  RoundtripReport r;
  r.words = image.words.size();
  const size_t n = std::max(image.words.size(), expected.size());
  for (size_t i = 0; i < n; ++i) {
    Mismatch m;
    m.line = i + 1;
    if (i < image.words.size()) {
      m.word = image.words[i];
      m.actual = dis(m.word);
    }
    if (i < expected.size()) m.expected = expected[i];
    if (i >= image.words.size() || i >= expected.size() || m.actual != m.expected) r.mismatches.push_back(m);
  }
  return r;
}

std::string format_mismatches(const RoundtripReport& report) {
  std::ostringstream os;
  for (const auto& m : report.mismatches) {
    os << m.line << 'c' << m.line << '\n';
    os << "< " << m.expected << '\n' << "---\n" << "> " << m.actual << '\n';
  }
  return os.str();
}

Image random_program(const std::vector<FlatInstruction>& flats, uint64_t seed, size_t length) {
  // Instructions that switch processor mode from random data or stop the
  // run would end most programs within a few steps.
  static const std::set<std::string> excluded = {"HLT", "SRS", "RFE", "LDM3"};
  std::vector<const FlatInstruction*> generics;
  for (const auto& f : flats)
    if (!f.is_variant() && !excluded.count(f.instruction)) generics.push_back(&f);
  if (generics.empty()) throw Error("no instructions to draw from");
  std::mt19937_64 rng(seed);
  ProgramBuilder b(flats);
  b.branch("main");
  b.pad_to(0x10);
  b.dp_imm("SUB", 15, 14, 4);  // abort handler: resume after the faulting instruction
  b.pad_to(0x20);
  b.label("main");
  for (uint32_t r = 0; r < 13; ++r) b.mov_imm(r, kDataBase + ((static_cast<uint32_t>(rng()) & 0x7Fu) << 8));
  b.mov_imm(13, kStackTop);
  const uint32_t start = b.here() / 4;
  for (size_t i = 0; i < length; ++i) {
    const FlatInstruction& f = *generics[rng() % generics.size()];
    ValidWord w = sample_valid(f, rng);
    // Keep branch targets inside the program.
    if (const EncodingField* off = f.encoding.find("signed_immed_24")) {
      const int64_t here = start + static_cast<int64_t>(i);
      const int64_t target = start + static_cast<int64_t>(rng() % (length + 1));
      w.fields[off->content] = static_cast<uint32_t>(target - here - 2) & 0xFFFFFFu;
      w.word = f.encoding.encode(w.fields);
    }
    b.word(w.word);
  }
  b.halt();
  return b.finish();
}

}  // namespace issforge
