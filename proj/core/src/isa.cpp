#include "mc2a/isa.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <type_traits>
#include <unordered_map>

#include "mc2a/error.hpp"

namespace mc2a {

const char* to_string(Kind k) {
  switch (k) {
    case Kind::kLoad: return "load";
    case Kind::kCompute: return "compute";
    case Kind::kSample: return "sample";
    case Kind::kComputeSample: return "compute_sample";
    case Kind::kComputeSampleStore: return "compute_sample_store";
    case Kind::kNop: return "nop";
  }
  return "?";
}

const char* to_string(CuMode m) {
  switch (m) {
    case CuMode::kBypass: return "bypass";
    case CuMode::kDotProduct: return "dot";
    case CuMode::kReducedSum: return "sum";
    case CuMode::kPartial: return "partial";
  }
  return "?";
}

const char* to_string(MhOp op) {
  switch (op) {
    case MhOp::kNone: return "none";
    case MhOp::kPasDraw: return "pas_draw";
    case MhOp::kPasRevIndex: return "pas_rev_index";
    case MhOp::kPasResample: return "pas_resample";
    case MhOp::kPasReverse: return "pas_reverse";
    case MhOp::kAccept: return "accept";
    case MhOp::kHistSnapshot: return "hist_snapshot";
  }
  return "?";
}

const char* to_string(Arith a) { return a == Arith::kInt32 ? "int32" : "float32"; }

namespace {

constexpr int kKindBits = 3;
constexpr int kShiftBits = 4;
constexpr int kBinBits = 9;
constexpr int kModeBits = 2;
constexpr int kSrcBits = 2;
constexpr int kMhOpBits = 3;
constexpr int kCountBits = 32;
constexpr int kTargetBits = 16;
constexpr int kTermBits = 10;

int ceil_log2(std::uint64_t v) { return v <= 1 ? 0 : std::bit_width(v - 1); }

// Field names are built only when somebody asks for them.
struct Name {
  const char* group;
  int i;
  int j;
  const char* leaf;

  std::string str() const {
    std::string s = group;
    if (i >= 0) s += std::to_string(i);
    if (j >= 0) s += ".i" + std::to_string(j);
    if (leaf[0]) {
      s += '.';
      s += leaf;
    }
    return s;
  }
};

// Calls f(name, field, width, is_signed) on every field after the kind, in
// packing order.
template <class Ins, class F>
void visit_fields(Ins& ins, const IsaLayout& lay, F&& f) {
  const int nb = static_cast<int>(ins.loads.size());
  for (int b = 0; b < nb; ++b) {
    auto& ld = ins.loads[static_cast<std::size_t>(b)];
    f(Name{"ld", b, -1, "en"}, ld.en, 1, false);
    f(Name{"ld", b, -1, "base"}, ld.base, lay.base_bits, false);
    for (int k = 0; k < kIndexTerms; ++k) {
      auto& t = ld.idx[k];
      f(Name{"ld", b, k, "en"}, t.en, 1, false);
      f(Name{"ld", b, k, "bin"}, t.use_bin, 1, false);
      f(Name{"ld", b, k, "rv"}, t.rv, lay.rv_bits, false);
      f(Name{"ld", b, k, "shift"}, t.shift, kShiftBits, false);
    }
  }
  for (int b = 0; b < nb; ++b) {
    auto& r = ins.rf[static_cast<std::size_t>(b)];
    f(Name{"rf", b, -1, "en"}, r.en, 1, false);
    f(Name{"rf", b, -1, "addr"}, r.addr, lay.rf_bits, false);
  }
  const int sel_bits = std::max(lay.bank_bits, kTermBits);
  for (int p = 0; p < static_cast<int>(ins.inputs.size()); ++p) {
    auto& in = ins.inputs[static_cast<std::size_t>(p)];
    f(Name{"in", p, -1, "src"}, in.src, kSrcBits, false);
    f(Name{"in", p, -1, "sel"}, in.sel, sel_bits, false);
    f(Name{"in", p, -1, "coef"}, in.coef, kCoefBits, true);
  }
  f(Name{"cu", -1, -1, "mode"}, ins.cu.mode, kModeBits, false);
  f(Name{"cu", -1, -1, "beta"}, ins.cu.beta, 2, false);
  f(Name{"cu", -1, -1, "acc"}, ins.cu.acc_in, 1, false);
  f(Name{"cu", -1, -1, "wb"}, ins.cu.wb_en, 1, false);
  const int nl = static_cast<int>(ins.lanes.size());
  for (int l = 0; l < nl; ++l) {
    auto& ln = ins.lanes[static_cast<std::size_t>(l)];
    f(Name{"lane", l, -1, "en"}, ln.en, 1, false);
    f(Name{"lane", l, -1, "wb_bank"}, ln.wb_bank, lay.bank_bits, false);
    f(Name{"lane", l, -1, "wb_addr"}, ln.wb_addr, lay.rf_bits, false);
  }
  f(Name{"su", -1, -1, "spatial"}, ins.su.spatial, 1, false);
  f(Name{"su", -1, -1, "cdf"}, ins.su.cdf, 1, false);
  f(Name{"su", -1, -1, "first"}, ins.su.first, 1, false);
  f(Name{"su", -1, -1, "last"}, ins.su.last, 1, false);
  f(Name{"su", -1, -1, "bin"}, ins.su.bin, kBinBits, false);
  f(Name{"su", -1, -1, "size"}, ins.su.dist_size, kBinBits, false);
  f(Name{"su", -1, -1, "mh"}, ins.su.mh_op, kMhOpBits, false);
  f(Name{"su", -1, -1, "slot"}, ins.su.slot, lay.slot_bits, false);
  f(Name{"su", -1, -1, "bin_base"}, ins.su.bin_base, lay.rv_bits, false);
  for (int l = 0; l < nl; ++l) {
    f(Name{"lane", l, -1, "rv"}, ins.lanes[static_cast<std::size_t>(l)].rv, lay.rv_bits, false);
  }
  f(Name{"st", -1, -1, "en"}, ins.st.en, 1, false);
  f(Name{"st", -1, -1, "hist"}, ins.st.hist, 1, false);
  f(Name{"st", -1, -1, "defer"}, ins.st.defer, 1, false);
  f(Name{"st", -1, -1, "commit"}, ins.st.commit, 1, false);
  f(Name{"loop", -1, -1, "en"}, ins.loop.en, 1, false);
  f(Name{"loop", -1, -1, "count"}, ins.loop.count, kCountBits, false);
  f(Name{"loop", -1, -1, "target"}, ins.loop.target, kTargetBits, false);
}

void check_shape(const Instruction& ins, const HwConfig& hw) {
  const auto B = static_cast<std::size_t>(hw.B);
  const auto T = static_cast<std::size_t>(hw.T);
  if (ins.loads.size() != B || ins.rf.size() != B || ins.lanes.size() != T ||
      ins.inputs.size() != T * static_cast<std::size_t>(hw.pe_inputs())) {
    throw InputError("instruction shape does not match hardware " + hw.to_string());
  }
}

bool fits(std::int64_t v, int width, bool is_signed) {
  if (width >= 63) return v >= 0 || is_signed;
  if (is_signed) {
    const std::int64_t lim = std::int64_t{1} << (width - 1);
    return v >= -lim && v < lim;
  }
  return v >= 0 && v < (std::int64_t{1} << width);
}

class BitWriter {
 public:
  explicit BitWriter(int words) : w_(static_cast<std::size_t>(words), 0) {}
  void put(std::uint64_t v, int width) {
    for (int done = 0; done < width;) {
      const std::size_t word = pos_ / 64;
      const int off = static_cast<int>(pos_ % 64);
      const int n = std::min(width - done, 64 - off);
      const std::uint64_t mask = n == 64 ? ~0ULL : ((1ULL << n) - 1);
      w_[word] |= ((v >> done) & mask) << off;
      done += n;
      pos_ += static_cast<std::size_t>(n);
    }
  }
  Word take() { return std::move(w_); }

 private:
  Word w_;
  std::size_t pos_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const Word& w) : w_(w) {}
  std::uint64_t get(int width) {
    std::uint64_t v = 0;
    for (int done = 0; done < width;) {
      const std::size_t word = pos_ / 64;
      const int off = static_cast<int>(pos_ % 64);
      const int n = std::min(width - done, 64 - off);
      const std::uint64_t mask = n == 64 ? ~0ULL : ((1ULL << n) - 1);
      v |= ((w_[word] >> off) & mask) << done;
      done += n;
      pos_ += static_cast<std::size_t>(n);
    }
    return v;
  }

 private:
  const Word& w_;
  std::size_t pos_ = 0;
};

bool has_live_fields(const Instruction& ins, const IsaLayout& lay) {
  bool live = false;
  visit_fields(ins, lay, [&](const Name&, const auto& v, int, bool) {
    if (v != 0) live = true;
  });
  return live;
}

void check_values(const Instruction& ins) {
  if (static_cast<int>(ins.kind) > static_cast<int>(Kind::kNop)) throw InputError("unknown instruction kind");
  if (ins.su.mh_op > static_cast<int>(MhOp::kHistSnapshot)) throw InputError("unknown sampler micro-op");
}

}  // namespace

IsaLayout IsaLayout::for_hw(const HwConfig& hw) {
  hw.validate();
  IsaLayout lay;
  lay.bank_bits = std::max(1, ceil_log2(static_cast<std::uint64_t>(hw.B)));
  lay.rv_bits = ceil_log2(static_cast<std::uint64_t>(hw.B) * kBankWords);
  lay.rf_bits = ceil_log2(kRfDepth);
  lay.base_bits = ceil_log2(kBankWords);
  lay.slot_bits = ceil_log2(kMaxSlots);
  const Instruction probe = make_instruction(hw);
  int bits = kKindBits;
  visit_fields(probe, lay, [&](const Name&, const auto&, int w, bool) { bits += w; });
  lay.word_bits = bits;
  return lay;
}

Instruction make_instruction(const HwConfig& hw, Kind kind) {
  Instruction ins;
  ins.kind = kind;
  ins.loads.resize(static_cast<std::size_t>(hw.B));
  ins.rf.resize(static_cast<std::size_t>(hw.B));
  ins.inputs.resize(static_cast<std::size_t>(hw.T) * static_cast<std::size_t>(hw.pe_inputs()));
  ins.lanes.resize(static_cast<std::size_t>(hw.T));
  return ins;
}

Word encode(const Instruction& ins, const HwConfig& hw) {
  check_shape(ins, hw);
  check_values(ins);
  const IsaLayout lay = IsaLayout::for_hw(hw);
  if (ins.kind == Kind::kNop && has_live_fields(ins, lay)) throw InputError("nop carries live fields");
  BitWriter w(lay.word_u64s());
  w.put(static_cast<std::uint64_t>(ins.kind), kKindBits);
  visit_fields(ins, lay, [&](const Name& name, const auto& v, int width, bool is_signed) {
    const auto value = static_cast<std::int64_t>(v);
    if (!fits(value, width, is_signed)) {
      throw CapacityError("field " + name.str() + " = " + std::to_string(value) + " does not fit " +
                          std::to_string(width) + " bits on " + hw.to_string());
    }
    w.put(static_cast<std::uint64_t>(value), width);
  });
  return w.take();
}

Instruction decode(const Word& word, const HwConfig& hw) {
  const IsaLayout lay = IsaLayout::for_hw(hw);
  if (static_cast<int>(word.size()) != lay.word_u64s()) throw InputError("instruction word has the wrong width");
  const int spare = lay.word_u64s() * 64 - lay.word_bits;
  if (spare > 0 && (word.back() >> (64 - spare)) != 0) throw InputError("malformed word: padding bits set");
  BitReader r(word);
  const auto kind = r.get(kKindBits);
  if (kind > static_cast<std::uint64_t>(Kind::kNop)) throw InputError("malformed word: kind " + std::to_string(kind));
  Instruction ins = make_instruction(hw, static_cast<Kind>(kind));
  visit_fields(ins, lay, [&](const Name&, auto& v, int width, bool is_signed) {
    using T = std::remove_reference_t<decltype(v)>;
    std::uint64_t raw = r.get(width);
    if (is_signed && width < 64 && (raw >> (width - 1)) & 1) raw |= ~0ULL << width;
    v = static_cast<T>(static_cast<std::int64_t>(raw));
  });
  if (ins.kind == Kind::kNop && has_live_fields(ins, lay)) throw InputError("malformed word: nop with live fields");
  if (ins.su.mh_op > static_cast<int>(MhOp::kHistSnapshot)) throw InputError("malformed word: sampler micro-op");
  return ins;
}

std::vector<FieldRef> list_fields(const Instruction& ins, const HwConfig& hw) {
  check_shape(ins, hw);
  const IsaLayout lay = IsaLayout::for_hw(hw);
  std::vector<FieldRef> out;
  visit_fields(ins, lay, [&](const Name& name, const auto& v, int width, bool is_signed) {
    out.push_back({name.str(), static_cast<std::int64_t>(v), width, is_signed});
  });
  return out;
}

void set_fields(Instruction& ins, const HwConfig& hw,
                const std::vector<std::pair<std::string, std::int64_t>>& values) {
  check_shape(ins, hw);
  const IsaLayout lay = IsaLayout::for_hw(hw);
  std::unordered_map<std::string, std::int64_t> pending;
  for (const auto& [name, v] : values) {
    if (!pending.emplace(name, v).second) throw InputError("field '" + name + "' given twice");
  }
  std::size_t hit = 0;
  visit_fields(ins, lay, [&](const Name& n, auto& v, int width, bool is_signed) {
    if (hit == pending.size()) return;
    const auto it = pending.find(n.str());
    if (it == pending.end()) return;
    ++hit;
    if (!fits(it->second, width, is_signed)) {
      throw CapacityError("field " + it->first + " = " + std::to_string(it->second) + " does not fit " +
                          std::to_string(width) + " bits");
    }
    v = static_cast<std::remove_reference_t<decltype(v)>>(it->second);
  });
  if (hit != pending.size()) {
    for (const auto& [name, v] : values) {
      (void)v;
      bool known = false;
      for (const auto& f : list_fields(ins, hw)) known = known || f.name == name;
      if (!known) throw InputError("unknown instruction field '" + name + "'");
    }
  }
}

void set_field(Instruction& ins, const HwConfig& hw, const std::string& name, std::int64_t value) {
  set_fields(ins, hw, {{name, value}});
}

Instruction random_instruction(const HwConfig& hw, UniformRng& rng) {
  const IsaLayout lay = IsaLayout::for_hw(hw);
  const auto kind = static_cast<Kind>(rng.next_u64() % 6);
  Instruction ins = make_instruction(hw, kind);
  if (kind == Kind::kNop) return ins;
  visit_fields(ins, lay, [&](const Name&, auto& v, int width, bool is_signed) {
    using T = std::remove_reference_t<decltype(v)>;
    // Mostly zero fields with occasional extremes, like real programs.
    const std::uint64_t pick = rng.next_u64();
    std::uint64_t raw = 0;
    switch (pick % 4) {
      case 0: raw = 0; break;
      case 1: raw = ~0ULL; break;
      default: raw = rng.next_u64(); break;
    }
    if (width < 64) raw &= (1ULL << width) - 1;
    if (is_signed && width < 64 && (raw >> (width - 1)) & 1) raw |= ~0ULL << width;
    v = static_cast<T>(static_cast<std::int64_t>(raw));
  });
  ins.su.mh_op = static_cast<std::uint8_t>(ins.su.mh_op % 7);
  return ins;
}

// ----- Program ---------------------------------------------------------------

std::size_t Program::loop_end() const {
  for (std::size_t i = code.size(); i-- > 0;) {
    if (code[i].loop.en) return i;
  }
  throw InputError("program has no HWLOOP instruction");
}

std::size_t Program::loop_begin() const { return code.at(loop_end()).loop.target; }

void Program::set_loop_count(std::uint32_t count) { code.at(loop_end()).loop.count = count; }

namespace {

constexpr char kMagic[8] = {'M', 'C', '2', 'A', 'P', 'R', 'G', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char b[8] = {};
  if (!is.read(reinterpret_cast<char*>(b), bytes)) throw InputError("truncated program file");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_program_binary(std::ostream& os, const HwConfig& hw, const std::vector<Instruction>& code) {
  const IsaLayout lay = IsaLayout::for_hw(hw);
  os.write(kMagic, sizeof kMagic);
  put_u32(os, kVersion);
  for (int v : {hw.T, hw.K, hw.S, hw.M, hw.B}) put_u32(os, static_cast<std::uint32_t>(v));
  put_u32(os, static_cast<std::uint32_t>(lay.word_bits));
  put_u32(os, static_cast<std::uint32_t>(code.size()));
  for (const auto& ins : code) {
    for (std::uint64_t w : encode(ins, hw)) put_u64(os, w);
  }
}

std::vector<Instruction> read_program_binary(std::istream& is, HwConfig& hw) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw InputError("not an mc2a program file (bad magic)");
  }
  const auto version = get_le(is, 4);
  if (version != kVersion) throw InputError("unsupported program file version " + std::to_string(version));
  HwConfig h;
  int* dst[5] = {&h.T, &h.K, &h.S, &h.M, &h.B};
  for (int* d : dst) *d = static_cast<int>(get_le(is, 4));
  h.validate();
  const IsaLayout lay = IsaLayout::for_hw(h);
  const auto width = get_le(is, 4);
  if (width != static_cast<std::uint64_t>(lay.word_bits)) {
    throw InputError("program word width " + std::to_string(width) + " does not match " + h.to_string());
  }
  const auto count = get_le(is, 4);
  std::vector<Instruction> code;
  code.reserve(count);
  Word w(static_cast<std::size_t>(lay.word_u64s()));
  for (std::uint64_t i = 0; i < count; ++i) {
    for (auto& x : w) x = get_le(is, 8);
    code.push_back(decode(w, h));
  }
  hw = h;
  return code;
}

void write_memory_image(std::ostream& os, const std::vector<std::vector<std::uint32_t>>& memory) {
  os << "# mc2a memory image: " << memory.size() << " banks x " << kBankWords << " words\n";
  char buf[16];
  for (std::size_t b = 0; b < memory.size(); ++b) {
    const auto& bank = memory[b];
    bool header = false;
    for (std::size_t a = 0; a < bank.size(); a += 8) {
      const std::size_t end = std::min(bank.size(), a + 8);
      if (std::all_of(bank.begin() + static_cast<std::ptrdiff_t>(a), bank.begin() + static_cast<std::ptrdiff_t>(end),
                      [](std::uint32_t v) { return v == 0; })) {
        continue;
      }
      if (!header) {
        os << "bank " << b << "\n";
        header = true;
      }
      std::snprintf(buf, sizeof buf, "%03zx:", a);
      os << buf;
      for (std::size_t k = a; k < end; ++k) {
        std::snprintf(buf, sizeof buf, " %08x", bank[k]);
        os << buf;
      }
      os << "\n";
    }
  }
}

std::vector<std::vector<std::uint32_t>> read_memory_image(std::istream& is, int banks) {
  std::vector<std::vector<std::uint32_t>> mem(static_cast<std::size_t>(banks),
                                              std::vector<std::uint32_t>(kBankWords, 0));
  std::string line;
  int lineno = 0;
  long bank = -1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "bank") {
      if (!(ls >> bank) || bank < 0 || bank >= banks) throw ParseError("memory image", lineno, "bad bank index");
      continue;
    }
    if (bank < 0 || head.empty() || head.back() != ':') throw ParseError("memory image", lineno, "expected 'bank' or an address row");
    std::size_t addr = 0;
    try {
      addr = std::stoul(head.substr(0, head.size() - 1), nullptr, 16);
    } catch (const std::exception&) {
      throw ParseError("memory image", lineno, "bad address");
    }
    std::string word;
    while (ls >> word) {
      if (addr >= static_cast<std::size_t>(kBankWords)) throw ParseError("memory image", lineno, "address past bank end");
      try {
        mem[static_cast<std::size_t>(bank)][addr++] = static_cast<std::uint32_t>(std::stoul(word, nullptr, 16));
      } catch (const std::exception&) {
        throw ParseError("memory image", lineno, "bad word '" + word + "'");
      }
    }
  }
  return mem;
}

}  // namespace mc2a
