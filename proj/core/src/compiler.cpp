#include "mc2a/compiler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <unordered_map>

#include "mc2a/error.hpp"

namespace mc2a {

namespace {

int ceil_log2(std::uint64_t v) { return v <= 1 ? 0 : std::bit_width(v - 1); }

int ceil_div(int a, int b) { return (a + b - 1) / b; }

// ----- Table classes ------------------------------------------------------------

struct TableClass {
  std::vector<int> dims;
  std::vector<int> shifts;
  int words = 0;
  std::vector<std::uint32_t> raw;
};

// A data read before bank assignment. `factor`, `own` and `bin` pin the
// address expression; `delta` selects the flip-delta table of position `own`.
struct ReadExpr {
  int cls = 0;
  int factor = 0;
  int own = -1;
  int bin = 0;
  bool delta = false;

  std::uint64_t key() const {
    return ((static_cast<std::uint64_t>(factor) * 16 + static_cast<std::uint64_t>(own + 1)) * 512 +
            static_cast<std::uint64_t>(bin)) * 2 + (delta ? 1 : 0);
  }
};

struct IrCycle {
  Instruction tmpl;
  std::vector<std::pair<int, ReadExpr>> inputs;  // (lane, read)
  std::string phase;
};

bool kind_has_cu(Kind k) {
  return k == Kind::kCompute || k == Kind::kComputeSample || k == Kind::kComputeSampleStore;
}
bool kind_has_su(Kind k) {
  return k == Kind::kSample || k == Kind::kComputeSample || k == Kind::kComputeSampleStore;
}

class Builder {
 public:
  Builder(const GraphModel& model, Algorithm alg, const HwConfig& hw, const CompileOptions& opt)
      : m_(model), alg_(alg), hw_(hw), opt_(opt), P_(hw.pe_inputs()), lanes_(std::min(hw.T, hw.S)) {}

  Program build();

 private:
  std::uint32_t to_raw(double v) const;
  std::int64_t to_fixed(double v) const;
  int intern(const std::vector<int>& dims, std::vector<std::uint32_t> raw);
  void make_classes();
  Instruction blank(Kind k) const { return make_instruction(hw_, k); }

  void gibbs_temporal(const std::vector<std::vector<RvId>>& blocks, bool deferred);
  void gibbs_spatial();
  void pas();
  void pas_delta(const std::string& phase);
  void pas_index_pass(MhOp op, int slot, const std::string& phase);
  void pas_slot(MhOp op, int slot, const std::string& phase);
  void emit_plain(Instruction ins, const std::string& phase);
  void assign_desc(const BankPlan& plan, std::size_t first_desc_cycle);
  void lower(const BankPlan& plan);
  std::vector<int> terms_of(RvId r) const;

  const GraphModel& m_;
  Algorithm alg_;
  HwConfig hw_;
  CompileOptions opt_;
  int P_;
  int lanes_;

  std::vector<TableClass> classes_;
  std::map<std::pair<std::vector<int>, std::vector<std::uint32_t>>, int> class_ids_;
  std::vector<int> energy_cls_;              // per factor
  std::vector<std::vector<int>> delta_cls_;  // per factor, per scope position
  std::vector<IrCycle> ir_;
  int desc_width_ = 0;
  int max_terms_ = 0;
  Program prog_;
};

std::int64_t Builder::to_fixed(double v) const {
  const double scaled = std::ldexp(v, opt_.frac_bits);
  if (!std::isfinite(scaled) || std::abs(scaled) > 2147483647.0) {
    throw CapacityError("energy " + std::to_string(v) + " does not fit int32 with " +
                        std::to_string(opt_.frac_bits) + " fraction bits");
  }
  return static_cast<std::int64_t>(std::nearbyint(scaled));
}

std::uint32_t Builder::to_raw(double v) const {
  if (opt_.arith == Arith::kInt32) return static_cast<std::uint32_t>(static_cast<std::int32_t>(to_fixed(v)));
  if (!std::isfinite(v)) throw CapacityError("energy is not finite");
  return std::bit_cast<std::uint32_t>(static_cast<float>(v));
}

int Builder::intern(const std::vector<int>& dims, std::vector<std::uint32_t> raw) {
  auto key = std::make_pair(dims, raw);
  auto it = class_ids_.find(key);
  if (it != class_ids_.end()) return it->second;
  TableClass c;
  c.dims = dims;
  c.shifts.assign(dims.size(), 0);
  int bits = 0;
  for (std::size_t p = dims.size(); p-- > 0;) {
    c.shifts[p] = bits;
    bits += ceil_log2(static_cast<std::uint64_t>(dims[p]));
  }
  if (bits > ceil_log2(kBankWords)) {
    throw CapacityError("a factor table needs " + std::to_string(1L << bits) + " words, more than one bank (" +
                        std::to_string(kBankWords) + ")");
  }
  c.words = 1 << bits;
  c.raw = std::move(raw);
  const int id = static_cast<int>(classes_.size());
  classes_.push_back(std::move(c));
  class_ids_.emplace(std::move(key), id);
  return id;
}

void Builder::make_classes() {
  const auto& fs = m_.factors();
  energy_cls_.resize(fs.size());
  delta_cls_.resize(fs.size());
  for (std::size_t fi = 0; fi < fs.size(); ++fi) {
    const Factor& f = fs[fi];
    const std::size_t n = f.scope.size();
    std::vector<int> shifts(n, 0);
    int bits = 0;
    for (std::size_t p = n; p-- > 0;) {
      shifts[p] = bits;
      bits += ceil_log2(static_cast<std::uint64_t>(f.dims[p]));
    }
    if (bits > ceil_log2(kBankWords)) {
      throw CapacityError("factor table over " + std::to_string(n) + " RVs exceeds a bank");
    }
    const std::size_t words = std::size_t{1} << bits;
    std::vector<int> digits(n);
    auto padded = [&](const std::vector<int>& d) {
      std::size_t a = 0;
      for (std::size_t p = 0; p < n; ++p) a += static_cast<std::size_t>(d[p]) << shifts[p];
      return a;
    };
    auto flat = [&](const std::vector<int>& d) {
      std::size_t a = 0;
      for (std::size_t p = 0; p < n; ++p) a += static_cast<std::size_t>(d[p]) * f.strides[p];
      return a;
    };
    auto for_each = [&](auto&& fn) {
      for (std::size_t i = 0; i < f.table.size(); ++i) {
        std::size_t rem = i;
        for (std::size_t p = n; p-- > 0;) {
          digits[p] = static_cast<int>(rem % static_cast<std::size_t>(f.dims[p]));
          rem /= static_cast<std::size_t>(f.dims[p]);
        }
        fn(i);
      }
    };
    std::vector<std::uint32_t> raw(words, 0);
    for_each([&](std::size_t i) { raw[padded(digits)] = to_raw(f.table[i]); });
    energy_cls_[fi] = intern(f.dims, std::move(raw));

    if (alg_ != Algorithm::kPas) continue;
    delta_cls_[fi].resize(n);
    for (std::size_t p = 0; p < n; ++p) {
      std::vector<std::uint32_t> d(words, 0);
      for_each([&](std::size_t i) {
        auto flipped = digits;
        flipped[p] = 1 - flipped[p];
        const std::size_t j = flat(flipped);
        if (opt_.arith == Arith::kInt32) {
          const std::int64_t diff = to_fixed(f.table[j]) - to_fixed(f.table[i]);
          if (diff > INT32_MAX || diff < INT32_MIN) throw CapacityError("flip-delta table overflows int32");
          d[padded(digits)] = static_cast<std::uint32_t>(static_cast<std::int32_t>(diff));
        } else {
          d[padded(digits)] = std::bit_cast<std::uint32_t>(static_cast<float>(f.table[j] - f.table[i]));
        }
      });
      delta_cls_[fi][p] = intern(f.dims, std::move(d));
    }
  }
}

std::vector<int> Builder::terms_of(RvId r) const {
  std::vector<int> out;
  for (std::size_t fi : m_.factors_of(r)) out.push_back(static_cast<int>(fi));
  return out;
}

int own_position(const Factor& f, RvId r) {
  for (std::size_t p = 0; p < f.scope.size(); ++p) {
    if (f.scope[p] == r) return static_cast<int>(p);
  }
  return -1;
}

void Builder::emit_plain(Instruction ins, const std::string& phase) {
  IrCycle c;
  c.tmpl = std::move(ins);
  c.phase = phase;
  ir_.push_back(std::move(c));
}

// Block-parallel update with the temporal SU: each lane owns one RV and walks
// its bins one per instruction; factor terms beyond one PE's inputs spill into
// Partial-accumulate cycles.
void Builder::gibbs_temporal(const std::vector<std::vector<RvId>>& blocks, bool deferred) {
  for (const auto& block : blocks) {
    std::vector<RvId> rvs = block;
    std::stable_sort(rvs.begin(), rvs.end(),
                     [&](RvId a, RvId b) { return m_.cardinality(a) < m_.cardinality(b); });
    for (std::size_t start = 0; start < rvs.size();) {
      const int card = m_.cardinality(rvs[start]);
      std::vector<RvId> group;
      while (start < rvs.size() && m_.cardinality(rvs[start]) == card &&
             static_cast<int>(group.size()) < lanes_) {
        group.push_back(rvs[start++]);
      }
      std::string phase = "update";
      for (RvId r : group) phase += (phase.size() == 6 ? " " : ",") + m_.rv(r).name;
      std::vector<std::vector<int>> terms(group.size());
      int chunks = 1;
      for (std::size_t l = 0; l < group.size(); ++l) {
        terms[l] = terms_of(group[l]);
        chunks = std::max(chunks, ceil_div(static_cast<int>(terms[l].size()), P_));
      }
      for (int s = 0; s < card; ++s) {
        for (int j = 0; j < chunks; ++j) {
          const bool last_chunk = j == chunks - 1;
          Kind kind = Kind::kCompute;
          if (last_chunk) kind = s == card - 1 ? Kind::kComputeSampleStore : Kind::kComputeSample;
          IrCycle c;
          c.phase = phase;
          c.tmpl = blank(kind);
          auto& t = c.tmpl;
          t.cu.mode = static_cast<std::uint8_t>(last_chunk ? CuMode::kReducedSum : CuMode::kPartial);
          t.cu.acc_in = j > 0;
          for (std::size_t l = 0; l < group.size(); ++l) {
            t.lanes[l].en = 1;
            const auto& tl = terms[l];
            for (int k = j * P_; k < std::min<int>((j + 1) * P_, static_cast<int>(tl.size())); ++k) {
              const int fi = tl[static_cast<std::size_t>(k)];
              const Factor& f = m_.factors()[static_cast<std::size_t>(fi)];
              c.inputs.push_back({static_cast<int>(l), ReadExpr{energy_cls_[static_cast<std::size_t>(fi)], fi,
                                                                own_position(f, group[l]), s, false}});
            }
          }
          if (last_chunk) {
            t.cu.beta = static_cast<std::uint8_t>(BetaScale::kFull);
            t.su.cdf = opt_.sampler == SamplerKind::kCdf;
            t.su.bin = static_cast<std::uint16_t>(s);
            t.su.dist_size = static_cast<std::uint16_t>(card);
            t.su.first = s == 0;
            t.su.last = s == card - 1;
            for (std::size_t l = 0; l < group.size(); ++l) t.lanes[l].rv = group[l];
            if (kind == Kind::kComputeSampleStore) {
              t.st.en = 1;
              t.st.hist = 1;
              t.st.defer = deferred;
            }
          }
          ir_.push_back(std::move(c));
        }
      }
    }
  }
}

// One RV at a time with the spatial SU: lanes hold consecutive bins.
void Builder::gibbs_spatial() {
  for (RvId r = 0; r < m_.num_rvs(); ++r) {
    const int card = m_.cardinality(r);
    const auto terms = terms_of(r);
    const int chunks = std::max(1, ceil_div(static_cast<int>(terms.size()), P_));
    const int groups = ceil_div(card, lanes_);
    const std::string phase = "update " + m_.rv(r).name;
    for (int g = 0; g < groups; ++g) {
      for (int j = 0; j < chunks; ++j) {
        const bool last_chunk = j == chunks - 1;
        Kind kind = Kind::kCompute;
        if (last_chunk) kind = g == groups - 1 ? Kind::kComputeSampleStore : Kind::kComputeSample;
        IrCycle c;
        c.phase = phase;
        c.tmpl = blank(kind);
        auto& t = c.tmpl;
        t.cu.mode = static_cast<std::uint8_t>(last_chunk ? CuMode::kReducedSum : CuMode::kPartial);
        t.cu.acc_in = j > 0;
        for (int l = 0; l < lanes_ && g * lanes_ + l < card; ++l) {
          const int bin = g * lanes_ + l;
          t.lanes[static_cast<std::size_t>(l)].en = 1;
          for (int k = j * P_; k < std::min<int>((j + 1) * P_, static_cast<int>(terms.size())); ++k) {
            const int fi = terms[static_cast<std::size_t>(k)];
            const Factor& f = m_.factors()[static_cast<std::size_t>(fi)];
            c.inputs.push_back({l, ReadExpr{energy_cls_[static_cast<std::size_t>(fi)], fi, own_position(f, r), bin, false}});
          }
        }
        if (last_chunk) {
          t.cu.beta = static_cast<std::uint8_t>(BetaScale::kFull);
          t.su.spatial = 1;
          t.su.cdf = opt_.sampler == SamplerKind::kCdf;
          t.su.bin_base = static_cast<std::uint32_t>(g * lanes_);
          t.su.dist_size = static_cast<std::uint16_t>(card);
          t.su.first = g == 0;
          t.su.last = g == groups - 1;
          for (int l = 0; l < lanes_ && g * lanes_ + l < card; ++l) t.lanes[static_cast<std::size_t>(l)].rv = r;
          if (kind == Kind::kComputeSampleStore) {
            t.st.en = 1;
            t.st.hist = 1;
          }
        }
        ir_.push_back(std::move(c));
      }
    }
  }
}

// Flip gradient of every RV into the register file: RV i lands in bank i % B,
// entry i / B.
void Builder::pas_delta(const std::string& phase) {
  const int n = static_cast<int>(m_.num_rvs());
  for (int g = 0; g < ceil_div(n, hw_.T); ++g) {
    int chunks = 1;
    for (int l = 0; l < hw_.T && g * hw_.T + l < n; ++l) {
      chunks = std::max(chunks, ceil_div(static_cast<int>(m_.factors_of(static_cast<RvId>(g * hw_.T + l)).size()), P_));
    }
    for (int j = 0; j < chunks; ++j) {
      const bool last_chunk = j == chunks - 1;
      IrCycle c;
      c.phase = phase;
      c.tmpl = blank(Kind::kCompute);
      auto& t = c.tmpl;
      t.cu.mode = static_cast<std::uint8_t>(last_chunk ? CuMode::kReducedSum : CuMode::kPartial);
      t.cu.acc_in = j > 0;
      t.cu.wb_en = last_chunk;
      for (int l = 0; l < hw_.T && g * hw_.T + l < n; ++l) {
        const auto r = static_cast<RvId>(g * hw_.T + l);
        auto& lane = t.lanes[static_cast<std::size_t>(l)];
        lane.en = 1;
        if (last_chunk) {
          lane.wb_bank = static_cast<std::uint16_t>(static_cast<int>(r) % hw_.B);
          lane.wb_addr = static_cast<std::uint16_t>(static_cast<int>(r) / hw_.B);
        }
        const auto terms = terms_of(r);
        for (int k = j * P_; k < std::min<int>((j + 1) * P_, static_cast<int>(terms.size())); ++k) {
          const int fi = terms[static_cast<std::size_t>(k)];
          const int own = own_position(m_.factors()[static_cast<std::size_t>(fi)], r);
          c.inputs.push_back({l, ReadExpr{delta_cls_[static_cast<std::size_t>(fi)][static_cast<std::size_t>(own)], fi,
                                          own, 0, true}});
        }
      }
      ir_.push_back(std::move(c));
    }
  }
}

// Streams the register-file gradient through the spatial SU, S bins a cycle.
void Builder::pas_index_pass(MhOp op, int slot, const std::string& phase) {
  const int n = static_cast<int>(m_.num_rvs());
  const int passes = ceil_div(n, lanes_);
  for (int c = 0; c < passes; ++c) {
    Instruction t = blank(Kind::kSample);
    t.cu.mode = static_cast<std::uint8_t>(CuMode::kBypass);
    t.cu.beta = static_cast<std::uint8_t>(BetaScale::kHalf);
    t.su.spatial = 1;
    t.su.mh_op = static_cast<std::uint8_t>(op);
    t.su.slot = static_cast<std::uint8_t>(slot);
    t.su.first = c == 0;
    t.su.last = c == passes - 1;
    t.su.bin_base = static_cast<std::uint32_t>(c * lanes_);
    for (int l = 0; l < lanes_ && c * lanes_ + l < n; ++l) {
      const int bin = c * lanes_ + l;
      const int bank = bin % hw_.B;
      t.rf[static_cast<std::size_t>(bank)] = {1, static_cast<std::uint16_t>(bin / hw_.B)};
      t.lanes[static_cast<std::size_t>(l)].en = 1;
      auto& in = t.inputs[static_cast<std::size_t>(l * P_)];
      in.src = static_cast<std::uint8_t>(InputSrc::kRf);
      in.sel = static_cast<std::uint16_t>(bank);
    }
    emit_plain(std::move(t), phase);
  }
}

// Resample (or reverse-score) the RV held in a selection slot: lane 0 walks
// the two bins with descriptor-addressed factor terms.
void Builder::pas_slot(MhOp op, int slot, const std::string& phase) {
  const int chunks = std::max(1, ceil_div(max_terms_, desc_width_));
  for (int s = 0; s < 2; ++s) {
    for (int j = 0; j < chunks; ++j) {
      const bool last_chunk = j == chunks - 1;
      Kind kind = Kind::kCompute;
      if (last_chunk) kind = s == 1 ? Kind::kComputeSampleStore : Kind::kComputeSample;
      Instruction t = blank(kind);
      t.cu.mode = static_cast<std::uint8_t>(last_chunk ? CuMode::kReducedSum : CuMode::kPartial);
      t.cu.acc_in = j > 0;
      t.lanes[0].en = 1;
      for (int k = j * desc_width_; k < std::min((j + 1) * desc_width_, max_terms_); ++k) {
        auto& in = t.inputs[static_cast<std::size_t>(k - j * desc_width_)];
        in.src = static_cast<std::uint8_t>(InputSrc::kDesc);
        in.sel = static_cast<std::uint16_t>(k);
      }
      // Descriptor addressing uses the bin and slot on every chunk.
      t.su.bin = static_cast<std::uint16_t>(s);
      t.su.slot = static_cast<std::uint8_t>(slot);
      if (last_chunk) {
        t.cu.beta = static_cast<std::uint8_t>(BetaScale::kFull);
        t.su.dist_size = 2;
        t.su.mh_op = static_cast<std::uint8_t>(op);
        t.su.first = s == 0;
        t.su.last = s == 1;
        if (kind == Kind::kComputeSampleStore) t.st.en = 1;
      }
      emit_plain(std::move(t), phase);
    }
  }
}

void Builder::pas() {
  const int n = static_cast<int>(m_.num_rvs());
  for (RvId r = 0; r < m_.num_rvs(); ++r) {
    if (m_.cardinality(r) != 2) throw InputError("PAS compilation supports binary RVs only");
    if (opt_.sampler != SamplerKind::kGumbel) throw InputError("PAS compilation uses the Gumbel sampler");
    max_terms_ = std::max(max_terms_, static_cast<int>(m_.factors_of(r).size()));
  }
  for (const auto& f : m_.factors()) {
    if (f.scope.size() > static_cast<std::size_t>(kIndexTerms)) {
      throw CapacityError("PAS flip-delta tables need at most " + std::to_string(kIndexTerms) + " scope RVs");
    }
  }
  if (opt_.pas_L < 1 || opt_.pas_L > kMaxSlots) {
    throw InputError("compiled PAS needs 1 <= L <= " + std::to_string(kMaxSlots));
  }
  if (opt_.pas_L > n) throw InputError("PAS L exceeds the number of RVs");
  if (ceil_div(n, hw_.B) > kRfDepth) throw CapacityError("flip gradient does not fit the register file");
  if (lanes_ > hw_.B) throw CapacityError("spatial index passes need S <= B");

  pas_delta("pas/delta");
  for (int d = 0; d < opt_.pas_L; ++d) pas_index_pass(MhOp::kPasDraw, d, "pas/draw");
  for (int d = 0; d < opt_.pas_L; ++d) pas_slot(MhOp::kPasResample, d, "pas/resample");
  pas_delta("pas/delta2");
  pas_index_pass(MhOp::kPasRevIndex, 0, "pas/rev-index");
  for (int d = 0; d < opt_.pas_L; ++d) pas_slot(MhOp::kPasReverse, d, "pas/reverse");
  {
    Instruction t = blank(Kind::kComputeSampleStore);
    t.su.mh_op = static_cast<std::uint8_t>(MhOp::kAccept);
    t.cu.beta = static_cast<std::uint8_t>(BetaScale::kFull);
    t.st.commit = 1;
    emit_plain(std::move(t), "pas/accept");
  }
  for (int g = 0; g < ceil_div(n, lanes_); ++g) {
    Instruction t = blank(Kind::kComputeSampleStore);
    t.su.mh_op = static_cast<std::uint8_t>(MhOp::kHistSnapshot);
    t.st.hist = 1;
    for (int l = 0; l < lanes_ && g * lanes_ + l < n; ++l) {
      t.lanes[static_cast<std::size_t>(l)].en = 1;
      t.lanes[static_cast<std::size_t>(l)].rv = static_cast<std::uint32_t>(g * lanes_ + l);
    }
    emit_plain(std::move(t), "pas/hist");
  }
}

void Builder::assign_desc(const BankPlan& plan, std::size_t first_desc_cycle) {
  prog_.desc.assign(m_.num_rvs(), {});
  std::size_t cyc = first_desc_cycle;
  for (RvId r = 0; r < m_.num_rvs(); ++r) {
    const auto terms = terms_of(r);
    for (int j = 0; j * desc_width_ < static_cast<int>(terms.size()); ++j, ++cyc) {
      const auto& sub = plan.schedule[cyc];
      // Every term of a chunk is its own read, listed in term order.
      for (const auto& [read, bank] : sub.front()) {
        const int fi = terms[static_cast<std::size_t>(j * desc_width_ + read)];
        const Factor& f = m_.factors()[static_cast<std::size_t>(fi)];
        const int cls = energy_cls_[static_cast<std::size_t>(fi)];
        DescTerm d;
        d.bank = bank;
        d.scope = f.scope;
        d.shifts = classes_[static_cast<std::size_t>(cls)].shifts;
        d.own = own_position(f, r);
        d.base = -1;
        for (const auto& tp : prog_.tables) {
          if (tp.cls == cls && tp.bank == bank) d.base = tp.base;
        }
        if (d.base < 0) throw InternalCheckError("descriptor points at a bank without the table");
        prog_.desc[r].push_back(std::move(d));
      }
    }
  }
}

// Turns IR cycles into instructions using the bank plan.
void Builder::lower(const BankPlan& plan) {
  std::vector<std::map<int, int>> base_of(classes_.size());  // bank -> base
  for (const auto& tp : prog_.tables) base_of[static_cast<std::size_t>(tp.cls)][tp.bank] = tp.base;

  for (std::size_t ci = 0; ci < ir_.size(); ++ci) {
    const IrCycle& c = ir_[ci];
    const std::size_t begin = prog_.code.size();
    if (c.inputs.empty()) {
      prog_.code.push_back(c.tmpl);
    } else {
      // Distinct reads in first-use order.
      std::vector<ReadExpr> reads;
      std::vector<int> read_of(c.inputs.size());
      for (std::size_t k = 0; k < c.inputs.size(); ++k) {
        const auto& e = c.inputs[k].second;
        int idx = -1;
        for (std::size_t q = 0; q < reads.size(); ++q) {
          if (reads[q].cls == e.cls && reads[q].key() == e.key()) idx = static_cast<int>(q);
        }
        if (idx < 0) {
          idx = static_cast<int>(reads.size());
          reads.push_back(e);
        }
        read_of[k] = idx;
      }
      const auto& subs = plan.schedule[ci];
      for (std::size_t q = 0; q < subs.size(); ++q) {
        const bool last = q + 1 == subs.size();
        Instruction ins = c.tmpl;
        if (!last) {
          ins = blank(Kind::kCompute);
          ins.cu.mode = static_cast<std::uint8_t>(CuMode::kPartial);
          for (std::size_t l = 0; l < ins.lanes.size(); ++l) ins.lanes[l].en = c.tmpl.lanes[l].en;
        }
        ins.cu.acc_in = q == 0 ? c.tmpl.cu.acc_in : 1;
        std::vector<int> bank_of_read(reads.size(), -1);
        for (const auto& [read, bank] : subs[q]) bank_of_read[static_cast<std::size_t>(read)] = bank;
        for (const auto& [read, bank] : subs[q]) {
          const ReadExpr& e = reads[static_cast<std::size_t>(read)];
          const Factor& f = m_.factors()[static_cast<std::size_t>(e.factor)];
          const TableClass& tc = classes_[static_cast<std::size_t>(e.cls)];
          auto& ld = ins.loads[static_cast<std::size_t>(bank)];
          ld.en = 1;
          int base = base_of[static_cast<std::size_t>(e.cls)].at(bank);
          int term = 0;
          for (std::size_t p = 0; p < f.scope.size(); ++p) {
            if (!e.delta && static_cast<int>(p) == e.own) {
              base += e.bin << tc.shifts[p];
              continue;
            }
            if (tc.dims[p] == 1) continue;
            if (term == kIndexTerms) {
              throw CapacityError("factor over " + std::to_string(f.scope.size()) +
                                  " RVs needs more address terms than a bank load has");
            }
            ld.idx[term++] = {1, 0, f.scope[p], static_cast<std::uint8_t>(tc.shifts[p])};
          }
          ld.base = static_cast<std::uint16_t>(base);
        }
        std::vector<int> used(ins.lanes.size(), 0);
        for (std::size_t k = 0; k < c.inputs.size(); ++k) {
          const int bank = bank_of_read[static_cast<std::size_t>(read_of[k])];
          if (bank < 0) continue;
          const auto lane = static_cast<std::size_t>(c.inputs[k].first);
          auto& in = ins.inputs[lane * static_cast<std::size_t>(P_) + static_cast<std::size_t>(used[lane]++)];
          in.src = static_cast<std::uint8_t>(InputSrc::kData);
          in.sel = static_cast<std::uint16_t>(bank);
        }
        prog_.code.push_back(std::move(ins));
      }
    }
    if (!prog_.phases.empty() && prog_.phases.back().name == c.phase && prog_.phases.back().end == begin) {
      prog_.phases.back().end = prog_.code.size();
    } else {
      prog_.phases.push_back({c.phase, begin, prog_.code.size()});
    }
  }
}

Program Builder::build() {
  hw_.validate();
  opt_.anneal.validate();
  if (opt_.frac_bits < 0 || opt_.frac_bits > 24) throw InputError("fraction bits must be in [0, 24]");
  const std::size_t n = m_.num_rvs();
  if (n == 0) throw InputError("cannot compile an empty model");
  const std::uint64_t capacity = static_cast<std::uint64_t>(hw_.B) * kBankWords;
  if (n > capacity) throw CapacityError("model has more RVs than the sample memory holds");
  std::uint64_t hist_words = 0;
  prog_.hist_offset.resize(n);
  prog_.cardinalities.resize(n);
  for (RvId r = 0; r < n; ++r) {
    if (m_.cardinality(r) > kMaxCardinality) {
      throw CapacityError("RV " + m_.rv(r).name + " has " + std::to_string(m_.cardinality(r)) +
                          " states; the sampler handles at most " + std::to_string(kMaxCardinality));
    }
    prog_.hist_offset[r] = static_cast<std::uint32_t>(hist_words);
    prog_.cardinalities[r] = m_.cardinality(r);
    hist_words += static_cast<std::uint64_t>(m_.cardinality(r));
  }
  if (hist_words > capacity) throw CapacityError("histogram counters exceed the histogram memory");

  prog_.hw = hw_;
  prog_.algorithm = alg_;
  prog_.arith = opt_.arith;
  prog_.frac_bits = opt_.frac_bits;
  prog_.anneal = opt_.anneal;
  prog_.pas_L = alg_ == Algorithm::kPas ? opt_.pas_L : 0;

  make_classes();

  std::vector<int> class_words;
  for (const auto& c : classes_) class_words.push_back(c.words);

  BankPlan plan;
  std::size_t first_desc = 0;
  switch (alg_) {
    case Algorithm::kMh:
      throw InputError("Metropolis-Hastings runs on the reference chain only; compile gibbs, block-gibbs, "
                       "async-gibbs or pas");
    case Algorithm::kGibbs:
      gibbs_spatial();
      break;
    case Algorithm::kBlockGibbs:
      gibbs_temporal(block_partition(m_), false);
      break;
    case Algorithm::kAsyncGibbs: {
      std::vector<RvId> all(n);
      for (RvId r = 0; r < n; ++r) all[r] = r;
      gibbs_temporal({all}, true);
      ir_.back().tmpl.st.commit = 1;
      break;
    }
    case Algorithm::kPas:
      break;
  }

  auto read_cycles = [&]() {
    std::vector<std::vector<BankRead>> cycles;
    for (const auto& c : ir_) {
      std::vector<BankRead> reads;
      for (const auto& [lane, e] : c.inputs) {
        (void)lane;
        BankRead br{e.cls, e.key()};
        if (std::find(reads.begin(), reads.end(), br) == reads.end()) reads.push_back(br);
      }
      cycles.push_back(std::move(reads));
    }
    return cycles;
  };

  if (alg_ == Algorithm::kPas) {
    // Pick the widest descriptor chunk whose terms land on distinct banks.
    for (int w = P_; w >= 1; --w) {
      desc_width_ = w;
      ir_.clear();
      pas();
      auto cycles = read_cycles();
      first_desc = cycles.size();
      for (RvId r = 0; r < n; ++r) {
        const auto terms = terms_of(r);
        for (int j = 0; j * w < static_cast<int>(terms.size()); ++j) {
          std::vector<BankRead> reads;
          for (int k = j * w; k < std::min(static_cast<int>(terms.size()), (j + 1) * w); ++k) {
            const int fi = terms[static_cast<std::size_t>(k)];
            reads.push_back({energy_cls_[static_cast<std::size_t>(fi)], static_cast<std::uint64_t>(k)});
          }
          cycles.push_back(std::move(reads));
        }
      }
      plan = allocate_banks(cycles, class_words, std::vector<int>(static_cast<std::size_t>(hw_.B), kBankWords));
      bool ok = true;
      for (std::size_t c = first_desc; c < plan.schedule.size(); ++c) ok = ok && plan.schedule[c].size() == 1;
      if (ok) break;
      if (w == 1) throw CapacityError("descriptor terms cannot be routed to distinct banks");
    }
  } else {
    plan = allocate_banks(read_cycles(), class_words, std::vector<int>(static_cast<std::size_t>(hw_.B), kBankWords));
  }

  // Lay out replicas bank by bank.
  prog_.memory.assign(static_cast<std::size_t>(hw_.B), std::vector<std::uint32_t>(kBankWords, 0));
  std::vector<int> top(static_cast<std::size_t>(hw_.B), 0);
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    for (int bank : plan.replicas[c]) {
      TablePlacement tp;
      tp.cls = static_cast<int>(c);
      tp.bank = bank;
      tp.base = top[static_cast<std::size_t>(bank)];
      tp.words = classes_[c].words;
      tp.shifts = classes_[c].shifts;
      top[static_cast<std::size_t>(bank)] += tp.words;
      if (top[static_cast<std::size_t>(bank)] > kBankWords) throw InternalCheckError("bank overfilled");
      std::copy(classes_[c].raw.begin(), classes_[c].raw.end(),
                prog_.memory[static_cast<std::size_t>(bank)].begin() + tp.base);
      prog_.tables.push_back(std::move(tp));
    }
  }

  if (alg_ == Algorithm::kPas) {
    assign_desc(plan, first_desc);
    plan.schedule.resize(first_desc);
  }
  lower(plan);

  auto& last = prog_.code.back();
  if (last.kind == Kind::kNop) throw InternalCheckError("loop body ends in a nop");
  last.loop = {1, opt_.num_steps, 0};
  if (opt_.insert_nops) insert_hazard_nops(prog_);
  return prog_;
}

// ----- Hazard analysis ---------------------------------------------------------

constexpr std::uint64_t kResShift = 56;

std::uint64_t access_key(Resource r, std::uint64_t id) {
  return (static_cast<std::uint64_t>(r) << kResShift) | id;
}

bool sample_class(Resource r) { return r == Resource::kSample || r == Resource::kSampleAny; }

struct Summary {
  std::unordered_map<std::uint64_t, std::pair<int, int>> exact;  // key -> (max write stage, max read stage)
  int sample_w = -1, sample_r = -1;  // every sample-class access
  int any_w = -1, any_r = -1;        // wildcard accesses only
  std::vector<Access> list;
};

Summary summarize(std::vector<Access> acc) {
  Summary s;
  for (const auto& a : acc) {
    if (sample_class(a.res)) {
      (a.write ? s.sample_w : s.sample_r) = std::max(a.write ? s.sample_w : s.sample_r, a.stage);
    }
    if (a.res == Resource::kSampleAny) {
      (a.write ? s.any_w : s.any_r) = std::max(a.write ? s.any_w : s.any_r, a.stage);
      continue;
    }
    auto& e = s.exact.try_emplace(access_key(a.res, a.id), std::make_pair(-1, -1)).first->second;
    (a.write ? e.first : e.second) = std::max(a.write ? e.first : e.second, a.stage);
  }
  s.list = std::move(acc);
  return s;
}

// Distance needed between an earlier x (write stage xw / read stage xr) and a
// later access y.
int pair_distance(int xw, int xr, const Access& y) {
  int d = 1;
  if (y.write) {
    if (xw >= 0) d = std::max(d, xw - y.stage + 1);
    if (xr >= 0) d = std::max(d, xr - y.stage);
  } else if (xw >= 0) {
    d = std::max(d, xw - y.stage + 1);
  }
  return d;
}

int distance(const Summary& a, const Summary& b) {
  int d = 1;
  for (const auto& y : b.list) {
    if (y.res == Resource::kSampleAny) {
      d = std::max(d, pair_distance(a.sample_w, a.sample_r, y));
      continue;
    }
    if (sample_class(y.res)) d = std::max(d, pair_distance(a.any_w, a.any_r, y));
    const auto it = a.exact.find(access_key(y.res, y.id));
    if (it != a.exact.end()) d = std::max(d, pair_distance(it->second.first, it->second.second, y));
  }
  return d;
}

}  // namespace

Program compile(const GraphModel& model, Algorithm algorithm, const HwConfig& hw, const CompileOptions& options) {
  return Builder(model, algorithm, hw, options).build();
}

// ----- Bank allocation -----------------------------------------------------------

namespace {

bool try_augment(int read, const std::vector<std::vector<int>>& options, std::vector<int>& owner,
                 std::vector<int>& seen, int stamp) {
  for (int b : options[static_cast<std::size_t>(read)]) {
    if (seen[static_cast<std::size_t>(b)] == stamp) continue;
    seen[static_cast<std::size_t>(b)] = stamp;
    const int cur = owner[static_cast<std::size_t>(b)];
    if (cur < 0 || try_augment(cur, options, owner, seen, stamp)) {
      owner[static_cast<std::size_t>(b)] = read;
      return true;
    }
  }
  return false;
}

}  // namespace

BankPlan allocate_banks(const std::vector<std::vector<BankRead>>& cycles, const std::vector<int>& class_words,
                        std::vector<int> free_words) {
  const int B = static_cast<int>(free_words.size());
  if (B < 1) throw InputError("bank allocation needs at least one bank");
  const std::size_t nc = class_words.size();
  BankPlan plan;
  plan.replicas.assign(nc, {});

  // Demand: most distinct same-cycle reads of each class; order: first use.
  std::vector<int> demand(nc, 0);
  std::vector<std::size_t> order;
  std::vector<char> seen_cls(nc, 0);
  for (const auto& cyc : cycles) {
    std::map<int, int> count;
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const auto& r = cyc[i];
      if (r.cls < 0 || static_cast<std::size_t>(r.cls) >= nc) throw InputError("bank read names an unknown class");
      bool dup = false;
      for (std::size_t j = 0; j < i; ++j) dup = dup || cyc[j] == r;
      if (dup) continue;
      ++count[r.cls];
      if (!seen_cls[static_cast<std::size_t>(r.cls)]) {
        seen_cls[static_cast<std::size_t>(r.cls)] = 1;
        order.push_back(static_cast<std::size_t>(r.cls));
      }
    }
    for (const auto& [c, k] : count) demand[static_cast<std::size_t>(c)] = std::max(demand[static_cast<std::size_t>(c)], k);
  }

  int ptr = 0;
  for (std::size_t c : order) {
    const int want = std::min(demand[c], B);
    for (int r = 0; r < want; ++r) {
      int chosen = -1;
      for (int k = 0; k < B; ++k) {
        const int b = (ptr + k) % B;
        const auto& reps = plan.replicas[c];
        if (free_words[static_cast<std::size_t>(b)] < class_words[c]) continue;
        if (std::find(reps.begin(), reps.end(), b) != reps.end()) continue;
        chosen = b;
        break;
      }
      if (chosen < 0) {
        if (r == 0) {
          throw CapacityError("energy tables need more than " + std::to_string(B) + " banks of " +
                              std::to_string(kBankWords) + " words");
        }
        break;
      }
      free_words[static_cast<std::size_t>(chosen)] -= class_words[c];
      plan.replicas[c].push_back(chosen);
      ptr = (chosen + 1) % B;
    }
  }

  // Match each cycle's distinct reads to banks; leftovers spill over.
  std::vector<int> owner(static_cast<std::size_t>(B), -1);
  std::vector<int> seen(static_cast<std::size_t>(B), 0);
  int stamp = 0;
  for (const auto& cyc : cycles) {
    std::vector<int> distinct;  // index into cyc
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      bool dup = false;
      for (std::size_t j = 0; j < i; ++j) dup = dup || cyc[j] == cyc[i];
      if (!dup) distinct.push_back(static_cast<int>(i));
    }
    std::vector<std::vector<std::pair<int, int>>> subs;
    std::vector<int> remaining(distinct.size());
    for (std::size_t i = 0; i < distinct.size(); ++i) remaining[i] = static_cast<int>(i);
    while (!remaining.empty()) {
      std::vector<std::vector<int>> options(remaining.size());
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        options[i] = plan.replicas[static_cast<std::size_t>(cyc[static_cast<std::size_t>(distinct[static_cast<std::size_t>(remaining[i])])].cls)];
      }
      std::fill(owner.begin(), owner.end(), -1);
      for (std::size_t i = 0; i < remaining.size(); ++i) try_augment(static_cast<int>(i), options, owner, seen, ++stamp);
      std::vector<char> matched(remaining.size(), 0);
      std::vector<std::pair<int, int>> sub;
      for (int b = 0; b < B; ++b) {
        const int i = owner[static_cast<std::size_t>(b)];
        if (i < 0) continue;
        matched[static_cast<std::size_t>(i)] = 1;
        sub.push_back({remaining[static_cast<std::size_t>(i)], b});
      }
      std::sort(sub.begin(), sub.end());
      std::vector<int> next;
      for (std::size_t i = 0; i < remaining.size(); ++i) {
        if (!matched[i]) next.push_back(remaining[i]);
      }
      subs.push_back(std::move(sub));
      remaining = std::move(next);
    }
    if (subs.empty()) subs.emplace_back();
    plan.added_cycles += static_cast<int>(subs.size()) - 1;
    plan.schedule.push_back(std::move(subs));
  }
  return plan;
}

// ----- Hazards -------------------------------------------------------------------

std::vector<Access> instruction_accesses(const Instruction& ins, const HwConfig& hw) {
  std::vector<Access> out;
  if (ins.kind == Kind::kNop) return out;
  const auto t = PipelineTiming::for_hw(hw);
  const bool cu = kind_has_cu(ins.kind);
  const bool su = kind_has_su(ins.kind);
  const bool st = ins.kind == Kind::kComputeSampleStore;
  const auto mh = static_cast<MhOp>(ins.su.mh_op);

  for (const auto& ld : ins.loads) {
    if (!ld.en) continue;
    for (const auto& term : ld.idx) {
      if (term.en && !term.use_bin) out.push_back({Resource::kSample, term.rv, t.dec, false});
    }
  }
  for (std::size_t b = 0; b < ins.rf.size(); ++b) {
    if (!ins.rf[b].en) continue;
    const std::uint64_t id = b * kRfDepth + ins.rf[b].addr;
    out.push_back({Resource::kRf, id, t.dec, ins.kind == Kind::kLoad});
  }
  bool desc = false;
  for (const auto& in : ins.inputs) desc = desc || in.src == static_cast<std::uint8_t>(InputSrc::kDesc);
  if (desc) {
    out.push_back({Resource::kSampleAny, 0, t.dec, false});
    out.push_back({Resource::kSelect, 0, t.dec, false});
  }
  if (cu && ins.cu.wb_en) {
    for (const auto& ln : ins.lanes) {
      if (ln.en) out.push_back({Resource::kRf, static_cast<std::uint64_t>(ln.wb_bank) * kRfDepth + ln.wb_addr, t.cu_end, true});
    }
  }
  if (su) {
    if (mh == MhOp::kPasResample || mh == MhOp::kPasReverse) out.push_back({Resource::kSampleAny, 0, t.su, false});
    if (mh == MhOp::kPasDraw && ins.su.last) out.push_back({Resource::kSelect, 0, t.su, true});
  }
  if (st) {
    switch (mh) {
      case MhOp::kNone:
        if (ins.st.en && !ins.st.defer) {
          if (ins.su.spatial) {
            out.push_back({Resource::kSample, ins.lanes[0].rv, t.st, true});
          } else {
            for (const auto& ln : ins.lanes) {
              if (ln.en) out.push_back({Resource::kSample, ln.rv, t.st, true});
            }
          }
        }
        if (ins.st.commit) out.push_back({Resource::kSampleAny, 0, t.st, true});
        break;
      case MhOp::kPasResample:
      case MhOp::kPasReverse:
        if (ins.st.en) out.push_back({Resource::kSampleAny, 0, t.st, true});
        break;
      case MhOp::kAccept:
        if (ins.st.commit) out.push_back({Resource::kSampleAny, 0, t.st, true});
        break;
      case MhOp::kHistSnapshot:
        for (const auto& ln : ins.lanes) {
          if (ln.en) out.push_back({Resource::kSample, ln.rv, t.st, false});
        }
        break;
      default:
        break;
    }
  }
  return out;
}

int required_distance(const std::vector<Access>& a, const std::vector<Access>& b) {
  return distance(summarize(a), summarize(b));
}

void insert_hazard_nops(Program& program) {
  const HwConfig& hw = program.hw;
  const int depth = PipelineTiming::for_hw(hw).depth();
  const auto& code = program.code;
  if (code.empty()) return;
  std::vector<Summary> sums;
  sums.reserve(code.size());
  for (const auto& ins : code) sums.push_back(summarize(instruction_accesses(ins, hw)));

  // Forward pass: positions of every original instruction after padding.
  std::vector<long> pos(code.size());
  for (std::size_t i = 0; i < code.size(); ++i) {
    long p = i == 0 ? 0 : pos[i - 1] + 1;
    if (code[i].kind != Kind::kNop) {
      for (std::size_t k = i; k-- > 0;) {
        if (p - pos[k] >= depth) break;
        if (code[k].kind == Kind::kNop) continue;
        p = std::max(p, pos[k] + distance(sums[k], sums[i]));
      }
    }
    pos[i] = p;
  }
  long len = pos.back() + 1;

  // Wrap-around of the loop body.
  const std::size_t loop_end = program.loop_end();
  const std::size_t loop_begin = program.loop_begin();
  long pad = 0;
  if (loop_end + 1 == code.size() && loop_begin == 0) {
    for (std::size_t x = code.size(); x-- > 0;) {
      if (len - pos[x] >= depth) break;
      if (code[x].kind == Kind::kNop) continue;
      for (std::size_t y = 0; y < code.size(); ++y) {
        const long dist = len - pos[x] + pos[y];
        if (dist >= depth) break;
        if (code[y].kind == Kind::kNop) continue;
        pad = std::max(pad, static_cast<long>(distance(sums[x], sums[y])) - dist);
      }
    }
  } else {
    throw InputError("hazard padding expects the loop to span the whole program");
  }

  std::vector<Instruction> out;
  out.reserve(static_cast<std::size_t>(len + pad));
  const Instruction nop = make_instruction(hw);
  for (long k = 0; k < pad; ++k) out.push_back(nop);
  for (std::size_t i = 0; i < code.size(); ++i) {
    while (static_cast<long>(out.size()) < pos[i] + pad) out.push_back(nop);
    out.push_back(code[i]);
  }
  for (auto& ph : program.phases) {
    if (ph.begin == ph.end) continue;
    const std::size_t last = ph.end - 1;
    ph.begin = static_cast<std::size_t>(pos[ph.begin] + pad);
    ph.end = static_cast<std::size_t>(pos[last] + pad + 1);
  }
  program.code = std::move(out);
  program.code.back().loop.target = 0;
}

std::size_t phase_instruction_count(const Program& program, const std::string& phase) {
  std::size_t n = 0;
  bool found = false;
  for (const auto& ph : program.phases) {
    if (ph.name != phase) continue;
    found = true;
    for (std::size_t i = ph.begin; i < ph.end; ++i) n += program.code[i].kind != Kind::kNop;
  }
  if (!found) throw InputError("no phase named '" + phase + "'");
  return n;
}

const PhaseSpan& find_phase(const Program& program, const std::string& phase) {
  for (const auto& ph : program.phases) {
    if (ph.name == phase) return ph;
  }
  throw InputError("no phase named '" + phase + "'");
}

}  // namespace mc2a
