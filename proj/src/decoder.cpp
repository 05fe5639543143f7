#include <algorithm>
#include <bit>
#include <random>

#include "issforge/error.hpp"
#include "issforge/ir.hpp"
#include "issforge/sim.hpp"

namespace issforge {

// ------------------------------------------------------------------ fields

std::map<std::string, uint32_t> field_env(const FlatInstruction& flat, uint32_t word) {
  std::map<std::string, uint32_t> env;
  for (const auto& [name, v] : flat.fixed) env[param_name(name)] = v;
  for (const auto& f : flat.encoding.fields)
    if (!f.is_constant) env[param_name(f.content)] = flat.encoding.extract(f.content, word);
  for (const auto& r : flat.decode_rules) {
    auto v = evaluate(r.expr, env);
    if (!v) throw Error("in " + flat.name + ": cannot evaluate decode rule " + r.param);
    env[r.param] = *v;
  }
  return env;
}

bool constraints_hold(const FlatInstruction& flat, uint32_t word) {
  for (const auto& c : flat.constraints) {
    const uint32_t a = flat.encoding.extract(c.param_a, word);
    const uint32_t b =
        c.kind == ValidityConstraint::Kind::ParamsDiffer ? flat.encoding.extract(c.param_b, word) : 0;
    if (!c.holds(a, b)) return false;
  }
  return true;
}

// ------------------------------------------------------------------ decoder

namespace {

bool bucket_matches(const DecoderCandidate& c, uint32_t key) {
  const uint32_t m = c.mask & DecoderSpec::kKeyMask;
  return ((key << DecoderSpec::kKeyShift) & m) == (c.value & m);
}

void check_ambiguity(const std::vector<FlatInstruction>& flats, const DecoderCandidate& a,
                     const DecoderCandidate& b) {
  const FlatInstruction& fa = flats[a.generic];
  const FlatInstruction& fb = flats[b.generic];
  std::mt19937 rng(0x5eed);
  for (int i = 0; i < 4096; ++i) {
    const uint32_t w = (rng() & ~a.mask) | a.value;
    if (constraints_hold(fa, w) && constraints_hold(fb, w))
      throw Error("ambiguous encoding: " + fa.name + " and " + fb.name + " both match " +
                  std::to_string(w));
  }
}

}  // namespace

DecoderSpec DecoderSpec::build(const std::vector<FlatInstruction>& flats) {
  DecoderSpec spec;
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < flats.size(); ++i) {
    const FlatInstruction& f = flats[i];
    if (f.is_variant()) continue;
    index[f.name] = spec.candidates.size();
    spec.candidates.push_back({f.encoding.mask(), f.encoding.value(), i, {}});
  }
  for (size_t i = 0; i < flats.size(); ++i) {
    const FlatInstruction& f = flats[i];
    if (!f.is_variant()) continue;
    auto it = index.find(f.generic);
    if (it == index.end()) throw Error("variant " + f.name + " has no generic " + f.generic);
    spec.candidates[it->second].variants.push_back(i);
  }
  for (auto& c : spec.candidates) {
    std::stable_sort(c.variants.begin(), c.variants.end(), [&](size_t x, size_t y) {
      return flats[x].selection.size() > flats[y].selection.size();
    });
  }
  std::stable_sort(spec.candidates.begin(), spec.candidates.end(), [](const auto& x, const auto& y) {
    return std::popcount(x.mask) > std::popcount(y.mask);
  });
  for (size_t i = 0; i < spec.candidates.size(); ++i)
    for (size_t j = i + 1; j < spec.candidates.size(); ++j)
      if (spec.candidates[i].mask == spec.candidates[j].mask &&
          spec.candidates[i].value == spec.candidates[j].value)
        check_ambiguity(flats, spec.candidates[i], spec.candidates[j]);
  for (uint32_t key = 0; key < 256; ++key)
    for (size_t i = 0; i < spec.candidates.size(); ++i)
      if (bucket_matches(spec.candidates[i], key)) spec.buckets[key].push_back(static_cast<uint32_t>(i));
  return spec;
}

DecoderSpec::Match DecoderSpec::decode(const std::vector<FlatInstruction>& flats, uint32_t word) const {
  Match m;
  const uint32_t key = (word & kKeyMask) >> kKeyShift;
  for (uint32_t ci : buckets[key]) {
    const DecoderCandidate& c = candidates[ci];
    if ((word & c.mask) != c.value) continue;
    const FlatInstruction& g = flats[c.generic];
    if (!constraints_hold(g, word)) {
      m.status = rt::DecodeStatus::Unpredictable;
      continue;
    }
    m.env = field_env(g, word);
    m.flat = c.generic;
    for (size_t v : c.variants) {
      const auto& sel = flats[v].selection;
      if (std::all_of(sel.begin(), sel.end(), [&](const auto& s) { return m.env.at(s.first) == s.second; })) {
        m.flat = v;
        break;
      }
    }
    m.status = rt::DecodeStatus::Ok;
    return m;
  }
  return m;
}

// ------------------------------------------------------------------ assembly

namespace {

rt::AsmElem::Format format_of(const std::string& name) {
  if (name == "cond") return rt::AsmElem::Cond;
  if (name == "reglist") return rt::AsmElem::RegList;
  if (name == kSignPlaceholder) return rt::AsmElem::Sign;
  if (is_register_field(name)) return rt::AsmElem::Register;
  return rt::AsmElem::Decimal;
}

class SyntaxCompiler {
 public:
  explicit SyntaxCompiler(const FlatInstruction& flat) : flat_(flat) {}

  AsmProgram run() {
    if (!flat_.syntax.mnemonic.empty()) literal(flat_.syntax.mnemonic);
    elements(flat_.syntax.elements);
    return std::move(prog_);
  }

 private:
  const char* store(const std::string& s) {
    prog_.strings.push_back(std::make_unique<std::string>(s));
    return prog_.strings.back()->c_str();
  }

  void literal(const std::string& s) {
    rt::AsmElem e;
    e.kind = rt::AsmElem::Literal;
    e.text = store(s);
    prog_.elems.push_back(e);
  }

  rt::AsmElem field(rt::AsmElem::Kind kind, const std::string& name) {
    rt::AsmElem e;
    e.kind = kind;
    e.format = format_of(name);
    const std::string field = name == kSignPlaceholder ? "U" : name;
    e.text = store(field);
    if (const EncodingField* f = flat_.encoding.find(field)) {
      e.hi = static_cast<uint8_t>(f->hi);
      e.lo = static_cast<uint8_t>(f->lo);
    } else if (auto it = flat_.fixed.find(field); it != flat_.fixed.end()) {
      e.fixed = true;
      e.value = it->second;
    } else {
      throw Error("in " + flat_.name + ": syntax field " + field + " is not encoded");
    }
    return e;
  }

  void elements(const std::vector<SyntaxElement>& elems) {
    for (const auto& el : elems) {
      switch (el.kind) {
        case SyntaxElement::Kind::Literal:
          literal(el.text);
          break;
        case SyntaxElement::Kind::Placeholder:
          prog_.elems.push_back(field(rt::AsmElem::Field, el.text));
          break;
        case SyntaxElement::Kind::Optional: {
          const size_t begin = prog_.elems.size();
          prog_.elems.push_back(field(rt::AsmElem::GroupBegin, el.control));
          elements(el.group);
          rt::AsmElem end;
          end.kind = rt::AsmElem::GroupEnd;
          prog_.elems.push_back(end);
          prog_.elems[begin].end = static_cast<uint16_t>(prog_.elems.size() - 1);
          break;
        }
      }
    }
  }

  const FlatInstruction& flat_;
  AsmProgram prog_;
};

}  // namespace

AsmProgram compile_syntax(const FlatInstruction& flat) { return SyntaxCompiler(flat).run(); }

std::string print_asm(const FlatInstruction& flat, uint32_t word) {
  const AsmProgram p = compile_syntax(flat);
  return rt::render_word(p.elems.data(), p.elems.size(), word);
}

std::string print_asm(const FlatInstruction& flat, const std::map<std::string, uint32_t>& fields) {
  const AsmProgram p = compile_syntax(flat);
  std::string out;
  rt::render(
      p.elems.data(), p.elems.size(),
      [&](const rt::AsmElem& e) -> uint32_t {
        if (e.fixed) return e.value;
        auto it = fields.find(e.text);
        if (it == fields.end()) throw Error("in " + flat.name + ": no value for field " + e.text);
        return it->second;
      },
      out);
  return out;
}

}  // namespace issforge
