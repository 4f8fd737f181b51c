#include "mc2a/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "mc2a/error.hpp"
#include "mc2a/mcmc.hpp"

namespace mc2a {

const char* const kTraceHeader = "cycle,pc,kind,iteration,stalled";

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool has_cu(Kind k) {
  return k == Kind::kCompute || k == Kind::kComputeSample || k == Kind::kComputeSampleStore;
}
bool has_su(Kind k) {
  return k == Kind::kSample || k == Kind::kComputeSample || k == Kind::kComputeSampleStore;
}

std::uint64_t res_key(Resource r, std::uint64_t id) { return (static_cast<std::uint64_t>(r) << 56) | id; }

// One instruction in flight.
struct Flight {
  bool live = false;
  std::size_t pc = 0;
  std::uint64_t seq = 0;
  std::uint64_t issue = 0;
  std::uint64_t iter = 0;
  double beta = 1.0;
  std::vector<double> lane_e;  // per lane energy handed to the SU
  std::vector<char> lane_ok;
  std::vector<std::int64_t> lane_int;
  std::vector<std::pair<std::uint32_t, std::int32_t>> stores;  // (rv, value)
  std::vector<std::pair<std::uint64_t, int>> pending;  // (key, write stage) registered at issue
  bool wild = false;
};

struct LaneSu {
  bool have = false;
  double best = 0.0;
  int winner = 0;
  std::uint64_t key = 0;
  std::vector<double> vals;  // neg energies by bin (CDF and PAS)
  std::vector<double> raw;   // energies by bin (PAS)
};

class Machine {
 public:
  Machine(const Program& p, const SimOptions& o);
  SimResult run();

 private:
  void violation(std::uint64_t cycle, std::size_t pc, std::string what);
  void issue(std::uint64_t cycle);
  void stage_dec(Flight& f, std::uint64_t cycle);
  void stage_wb(Flight& f, std::uint64_t cycle);
  void stage_su(Flight& f, std::uint64_t cycle);
  void stage_st(Flight& f, std::uint64_t cycle);
  void retire_pending(Flight& f, int stage);
  bool stale(std::uint64_t key, std::uint64_t seq) const;
  bool stale_sample(std::uint32_t rv, std::uint64_t seq) const;
  double to_energy(std::int64_t v) const;
  std::int64_t word_value(std::uint32_t raw) const;
  std::uint32_t to_word(std::int64_t v, std::uint64_t cycle, std::size_t pc) const;
  std::int32_t sample(std::uint32_t rv, std::uint64_t cycle, std::size_t pc, std::uint64_t seq);
  void count_hist(std::uint32_t rv, std::int32_t value, std::uint64_t iter);
  double gumbel_score(double v, std::uint64_t key, std::uint64_t counter) const;
  void su_draw(LaneSu& st, double v, std::uint64_t counter);

  const Program& p_;
  const SimOptions& o_;
  HwConfig hw_;
  int P_;
  PipelineTiming t_;
  std::size_t n_;
  bool float_mode_;
  std::uint64_t iters_ = 0;

  std::vector<std::int32_t> x_;
  std::vector<std::vector<std::uint32_t>> rf_;
  std::vector<std::uint32_t> hist_;
  std::vector<std::int64_t> acc_;       // per lane partial sums (int mode)
  std::vector<float> acc_f_;            // per lane partial sums (float mode)
  std::vector<LaneSu> su_;              // per lane temporal state
  LaneSu spatial_;
  std::vector<std::pair<std::uint32_t, std::pair<std::int32_t, bool>>> deferred_;

  // PAS sampler registers.
  std::vector<std::uint32_t> sel_;
  std::vector<char> valid_;
  std::vector<std::int32_t> old_, new_;
  std::vector<double> cap_;
  int drawn_ = 0;
  double lse_ = kNegInf, lse2_ = kNegInf;
  double fwd_idx_ = 0, rev_idx_ = 0, fwd_res_ = 0, rev_res_ = 0, de_ = 0;
  bool accepted_ = false;

  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> pending_;
  std::vector<std::uint64_t> wild_;

  std::vector<Flight> ring_;
  std::size_t pc_ = 0;
  std::uint64_t iter_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t stall_until_ = 0;
  std::uint64_t last_issue_ = 0;
  bool done_ = false;
  SimResult res_;
};

Machine::Machine(const Program& p, const SimOptions& o)
    : p_(p), o_(o), hw_(p.hw), P_(p.hw.pe_inputs()), t_(PipelineTiming::for_hw(p.hw)),
      n_(p.cardinalities.size()), float_mode_(p.arith == Arith::kFloat32) {
  hw_.validate();
  if (p.code.empty()) throw InputError("program is empty");
  if (p.memory.size() != static_cast<std::size_t>(hw_.B)) throw InputError("memory image does not match B");
  for (const auto& bank : p.memory) {
    if (bank.size() != static_cast<std::size_t>(kBankWords)) throw InputError("memory bank has the wrong size");
  }
  if (o.cdt_capacity < 1) throw InputError("CDT capacity must be positive");
  x_.assign(n_, 0);
  if (!o.initial.empty()) {
    if (o.initial.size() != n_) throw InputError("initial state has the wrong length");
    for (std::size_t i = 0; i < n_; ++i) {
      if (o.initial[i] < 0 || o.initial[i] >= p.cardinalities[i]) throw InputError("initial state out of range");
    }
    x_ = o.initial;
  }
  std::size_t hist_words = 0;
  for (int c : p.cardinalities) hist_words += static_cast<std::size_t>(c);
  hist_.assign(hist_words, 0);
  rf_.assign(static_cast<std::size_t>(hw_.B), std::vector<std::uint32_t>(kRfDepth, 0));
  acc_.assign(static_cast<std::size_t>(hw_.T), 0);
  acc_f_.assign(static_cast<std::size_t>(hw_.T), 0.0f);
  su_.assign(static_cast<std::size_t>(hw_.T), {});
  sel_.assign(kMaxSlots, 0);
  valid_.assign(kMaxSlots, 0);
  old_.assign(kMaxSlots, 0);
  new_.assign(kMaxSlots, 0);
  cap_.assign(kMaxSlots, 0.0);
  ring_.assign(static_cast<std::size_t>(t_.depth()), {});
  const auto& last = p.code.back();
  iters_ = o.steps > 0 ? o.steps : (last.loop.en ? last.loop.count : 1);
}

void Machine::violation(std::uint64_t cycle, std::size_t pc, std::string what) {
  if (o_.strict) {
    throw InternalCheckError("cycle " + std::to_string(cycle) + ", instruction " + std::to_string(pc) + ": " + what);
  }
  res_.violations.push_back({cycle, pc, std::move(what)});
}

bool Machine::stale(std::uint64_t key, std::uint64_t seq) const {
  const auto it = pending_.find(key);
  if (it == pending_.end()) return false;
  for (auto s : it->second) {
    if (s < seq) return true;
  }
  return false;
}

bool Machine::stale_sample(std::uint32_t rv, std::uint64_t seq) const {
  for (auto s : wild_) {
    if (s < seq) return true;
  }
  return stale(res_key(Resource::kSample, rv), seq);
}

std::int32_t Machine::sample(std::uint32_t rv, std::uint64_t cycle, std::size_t pc, std::uint64_t seq) {
  if (rv >= n_) {
    violation(cycle, pc, "sample address " + std::to_string(rv) + " out of range");
    return 0;
  }
  if (stale_sample(rv, seq)) violation(cycle, pc, "stale read of sample " + std::to_string(rv));
  res_.stats.sample_bytes_read += static_cast<std::uint64_t>(hw_.word_bytes);
  return x_[rv];
}

double Machine::to_energy(std::int64_t v) const {
  if (float_mode_) return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(v)));
  return std::ldexp(static_cast<double>(v), -p_.frac_bits);
}

std::int64_t Machine::word_value(std::uint32_t raw) const {
  return float_mode_ ? static_cast<std::int64_t>(raw) : static_cast<std::int64_t>(static_cast<std::int32_t>(raw));
}

std::uint32_t Machine::to_word(std::int64_t v, std::uint64_t cycle, std::size_t pc) const {
  if (float_mode_) return static_cast<std::uint32_t>(v);
  if (v > std::numeric_limits<std::int32_t>::max() || v < std::numeric_limits<std::int32_t>::min()) {
    throw CapacityError("cycle " + std::to_string(cycle) + ", instruction " + std::to_string(pc) +
                        ": CU result overflows the 32-bit datapath");
  }
  return static_cast<std::uint32_t>(static_cast<std::int32_t>(v));
}

void Machine::count_hist(std::uint32_t rv, std::int32_t value, std::uint64_t iter) {
  if (iter < o_.burn_in) return;
  auto& c = hist_[p_.hist_offset[rv] + static_cast<std::uint32_t>(value)];
  if (c < (1u << kHistogramBits) - 1) ++c;
}

double Machine::gumbel_score(double v, std::uint64_t key, std::uint64_t counter) const {
  const std::uint64_t bits = UniformRng::bits_at(key, counter);
  if (o_.lut) return v + o_.lut->noise(bits);
  return v - std::log(-std::log(UniformRng::to_uniform(bits)));
}

void Machine::su_draw(LaneSu& st, double v, std::uint64_t counter) {
  if (is_impossible(v)) return;
  const double score = gumbel_score(v, st.key, counter);
  if (!st.have || score > st.best) {
    st.best = score;
    st.winner = static_cast<int>(counter);
    st.have = true;
  }
}

void Machine::issue(std::uint64_t cycle) {
  const Instruction& ins = p_.code[pc_];
  Flight& f = ring_[cycle % ring_.size()];
  f = Flight{};
  f.live = true;
  f.pc = pc_;
  f.seq = ++seq_;
  f.issue = cycle;
  f.iter = iter_;
  f.beta = p_.anneal.beta(iter_);
  ++res_.stats.issued[static_cast<std::size_t>(ins.kind)];
  last_issue_ = cycle;

  // Register the writes this instruction will make.
  for (const auto& a : instruction_accesses(ins, hw_)) {
    if (!a.write) continue;
    if (a.res == Resource::kSampleAny) {
      f.wild = true;
      wild_.push_back(f.seq);
    } else {
      const auto k = res_key(a.res, a.id);
      pending_[k].push_back(f.seq);
      f.pending.push_back({k, a.stage});
    }
  }

  if (has_su(ins.kind) && ins.su.cdf && ins.su.last) {
    stall_until_ = cycle + 1 + ins.su.dist_size + 1;
    res_.stats.stall_cycles += ins.su.dist_size + 1u;
  }
  if (ins.loop.en && iter_ + 1 < iters_) {
    if (ins.loop.target >= p_.code.size()) throw InputError("loop target out of range");
    pc_ = ins.loop.target;
    ++iter_;
  } else {
    ++pc_;
    if (pc_ >= p_.code.size()) done_ = true;
  }
}

// Writes become visible once their stage has completed.
void Machine::retire_pending(Flight& f, int stage) {
  for (const auto& [k, st] : f.pending) {
    if (st != stage) continue;
    auto& v = pending_[k];
    v.erase(std::find(v.begin(), v.end(), f.seq));
  }
  if (f.wild && stage == t_.st) wild_.erase(std::find(wild_.begin(), wild_.end(), f.seq));
}

void Machine::stage_dec(Flight& f, std::uint64_t cycle) {
  const Instruction& ins = p_.code[f.pc];
  if (ins.kind == Kind::kNop || ins.kind == Kind::kLoad) return;
  const int B = hw_.B;

  // Bank reads.
  std::vector<std::int64_t> bank_val(static_cast<std::size_t>(B), 0);
  std::vector<char> bank_busy(static_cast<std::size_t>(B), 0);
  for (int b = 0; b < B; ++b) {
    const auto& ld = ins.loads[static_cast<std::size_t>(b)];
    if (!ld.en) continue;
    bank_busy[static_cast<std::size_t>(b)] = 1;
    std::uint64_t addr = ld.base;
    for (const auto& term : ld.idx) {
      if (!term.en) continue;
      const std::uint64_t v = term.use_bin ? ins.su.bin : static_cast<std::uint64_t>(sample(term.rv, cycle, f.pc, f.seq));
      addr += v << term.shift;
    }
    if (addr >= static_cast<std::uint64_t>(kBankWords)) {
      violation(cycle, f.pc, "bank " + std::to_string(b) + " address " + std::to_string(addr) + " out of range");
      continue;
    }
    bank_val[static_cast<std::size_t>(b)] = word_value(p_.memory[static_cast<std::size_t>(b)][addr]);
    res_.stats.data_bytes_read += static_cast<std::uint64_t>(hw_.word_bytes);
  }
  std::vector<std::int64_t> rf_val(static_cast<std::size_t>(B), 0);
  for (int b = 0; b < B; ++b) {
    const auto& r = ins.rf[static_cast<std::size_t>(b)];
    if (!r.en) continue;
    if (r.addr >= kRfDepth) {
      violation(cycle, f.pc, "register-file address out of range");
      continue;
    }
    if (stale(res_key(Resource::kRf, static_cast<std::uint64_t>(b) * kRfDepth + r.addr), f.seq)) {
      violation(cycle, f.pc, "stale read of rf" + std::to_string(b) + "[" + std::to_string(r.addr) + "]");
    }
    rf_val[static_cast<std::size_t>(b)] = word_value(rf_[static_cast<std::size_t>(b)][r.addr]);
    res_.stats.rf_bytes_read += static_cast<std::uint64_t>(hw_.word_bytes);
  }

  // Descriptor terms of the RV held in the selected slot.
  const int slot = ins.su.slot;
  bool desc_checked = false;
  auto desc_value = [&](int k, bool& present) -> std::int64_t {
    present = false;
    if (!desc_checked) {
      desc_checked = true;
      if (stale(res_key(Resource::kSelect, 0), f.seq)) violation(cycle, f.pc, "stale read of the selection registers");
    }
    if (slot >= kMaxSlots || !valid_[static_cast<std::size_t>(slot)]) return 0;
    const auto rv = sel_[static_cast<std::size_t>(slot)];
    if (rv >= p_.desc.size()) return 0;
    const auto& terms = p_.desc[rv];
    if (k >= static_cast<int>(terms.size())) return 0;
    const DescTerm& d = terms[static_cast<std::size_t>(k)];
    if (d.bank < 0 || d.bank >= B) {
      violation(cycle, f.pc, "descriptor bank out of range");
      return 0;
    }
    if (bank_busy[static_cast<std::size_t>(d.bank)]) {
      violation(cycle, f.pc, "bank port conflict on bank " + std::to_string(d.bank));
    }
    bank_busy[static_cast<std::size_t>(d.bank)] = 1;
    std::uint64_t addr = static_cast<std::uint64_t>(d.base);
    for (std::size_t q = 0; q < d.scope.size(); ++q) {
      const std::uint64_t v = static_cast<int>(q) == d.own ? ins.su.bin
                                                           : static_cast<std::uint64_t>(sample(d.scope[q], cycle, f.pc, f.seq));
      addr += v << d.shifts[q];
    }
    if (addr >= static_cast<std::uint64_t>(kBankWords)) {
      violation(cycle, f.pc, "descriptor address out of range");
      return 0;
    }
    res_.stats.data_bytes_read += static_cast<std::uint64_t>(hw_.word_bytes);
    present = true;
    return word_value(p_.memory[static_cast<std::size_t>(d.bank)][addr]);
  };

  const auto mode = static_cast<CuMode>(ins.cu.mode);
  f.lane_e.assign(static_cast<std::size_t>(hw_.T), 0.0);
  f.lane_ok.assign(static_cast<std::size_t>(hw_.T), 0);
  f.lane_int.assign(static_cast<std::size_t>(hw_.T), 0);
  bool busy = false;
  for (int l = 0; l < hw_.T; ++l) {
    if (!ins.lanes[static_cast<std::size_t>(l)].en) continue;
    std::int64_t sum = 0;
    float sumf = 0.0f;
    bool first_input = true;
    for (int k = 0; k < P_; ++k) {
      const auto& in = ins.inputs[static_cast<std::size_t>(l * P_ + k)];
      const auto src = static_cast<InputSrc>(in.src);
      if (src == InputSrc::kOff) continue;
      std::int64_t v = 0;
      bool present = true;
      if (src == InputSrc::kData || src == InputSrc::kRf) {
        if (in.sel >= B) {
          violation(cycle, f.pc, "input routed from bank " + std::to_string(in.sel) + " out of range");
          continue;
        }
        if (src == InputSrc::kData) {
          if (!ins.loads[in.sel].en) violation(cycle, f.pc, "input reads idle bank " + std::to_string(in.sel));
          v = bank_val[in.sel];
        } else {
          if (!ins.rf[in.sel].en) violation(cycle, f.pc, "input reads idle register file " + std::to_string(in.sel));
          v = rf_val[in.sel];
        }
      } else {
        v = desc_value(in.sel, present);
        if (!present) continue;
      }
      if (mode == CuMode::kBypass || !has_cu(ins.kind)) {
        if (first_input) {
          sum = v;
          sumf = float_mode_ ? std::bit_cast<float>(static_cast<std::uint32_t>(v)) : 0.0f;
        }
        first_input = false;
        continue;
      }
      first_input = false;
      const std::int64_t c = mode == CuMode::kDotProduct ? in.coef : 1;
      if (float_mode_) {
        sumf += static_cast<float>(c) * std::bit_cast<float>(static_cast<std::uint32_t>(v));
      } else {
        sum += c * v;
      }
    }
    if (has_cu(ins.kind) && ins.cu.acc_in) {
      if (float_mode_) {
        sumf += acc_f_[static_cast<std::size_t>(l)];
      } else {
        sum += acc_[static_cast<std::size_t>(l)];
      }
    }
    if (!float_mode_ && (sum > std::numeric_limits<std::int32_t>::max() || sum < std::numeric_limits<std::int32_t>::min())) {
      throw CapacityError("cycle " + std::to_string(cycle) + ", instruction " + std::to_string(f.pc) +
                          ": CU sum overflows the 32-bit datapath");
    }
    if (has_cu(ins.kind) && mode == CuMode::kPartial) {
      acc_[static_cast<std::size_t>(l)] = sum;
      acc_f_[static_cast<std::size_t>(l)] = sumf;
    }
    const std::int64_t word = float_mode_ ? static_cast<std::int64_t>(std::bit_cast<std::uint32_t>(sumf)) : sum;
    f.lane_int[static_cast<std::size_t>(l)] = word;
    f.lane_e[static_cast<std::size_t>(l)] = to_energy(word);
    f.lane_ok[static_cast<std::size_t>(l)] = mode != CuMode::kPartial || !has_cu(ins.kind);
    busy = true;
  }
  if (busy && has_cu(ins.kind)) ++res_.stats.cu_busy;
}

void Machine::stage_wb(Flight& f, std::uint64_t cycle) {
  const Instruction& ins = p_.code[f.pc];
  if (!has_cu(ins.kind) || !ins.cu.wb_en) return;
  for (int l = 0; l < hw_.T; ++l) {
    const auto& ln = ins.lanes[static_cast<std::size_t>(l)];
    if (!ln.en) continue;
    if (ln.wb_bank >= hw_.B || ln.wb_addr >= kRfDepth) {
      violation(cycle, f.pc, "register-file write out of range");
      continue;
    }
    rf_[ln.wb_bank][ln.wb_addr] = to_word(f.lane_int[static_cast<std::size_t>(l)], cycle, f.pc);
    res_.stats.rf_bytes_written += static_cast<std::uint64_t>(hw_.word_bytes);
  }
}

void Machine::stage_su(Flight& f, std::uint64_t cycle) {
  const Instruction& ins = p_.code[f.pc];
  if (!has_su(ins.kind)) return;
  ++res_.stats.su_busy;
  const auto& su = ins.su;
  const auto op = static_cast<MhOp>(su.mh_op);
  const double beta = f.beta;
  auto neg_of = [&](int l) {
    const double e = f.lane_e[static_cast<std::size_t>(l)];
    switch (static_cast<BetaScale>(ins.cu.beta)) {
      case BetaScale::kFull: return -beta * e;
      case BetaScale::kHalf: return -(0.5 * beta) * e;
      default: return e;
    }
  };
  auto key_of = [&](std::uint64_t stream) { return UniformRng::for_stream(o_.seed, f.iter, stream).key(); };
  auto check_size = [&](int size) {
    if (su.cdf && size > o_.cdt_capacity) {
      throw CapacityError("cycle " + std::to_string(cycle) + ", instruction " + std::to_string(f.pc) +
                          ": distribution of " + std::to_string(size) + " bins exceeds the CDT capacity of " +
                          std::to_string(o_.cdt_capacity));
    }
  };
  auto cdf_pick = [&](const std::vector<double>& logits, std::uint64_t key) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> w(logits.size());
    for (std::size_t s = 0; s < w.size(); ++s) w[s] = std::exp(logits[s] - top);
    return static_cast<int>(cdf_sample_with_uniform(w, UniformRng::uniform_at(key, 0)));
  };
  auto slot_ok = [&](int d) {
    if (d >= kMaxSlots || d >= p_.pas_L) {
      violation(cycle, f.pc, "sampler slot " + std::to_string(d) + " out of range");
      return false;
    }
    return true;
  };

  switch (op) {
    case MhOp::kNone: {
      if (su.spatial) {
        LaneSu& st = spatial_;
        const auto rv = ins.lanes[0].rv;
        if (su.first) {
          st = LaneSu{};
          st.key = key_of(rv);
        }
        for (int l = 0; l < hw_.T && l < hw_.S; ++l) {
          if (!ins.lanes[static_cast<std::size_t>(l)].en || !f.lane_ok[static_cast<std::size_t>(l)]) continue;
          const double v = neg_of(l);
          if (su.cdf) {
            st.vals.push_back(v);
          } else {
            su_draw(st, v, su.bin_base + static_cast<std::uint64_t>(l));
          }
        }
        if (su.last) {
          int w = st.winner;
          if (su.cdf) {
            check_size(static_cast<int>(st.vals.size()));
            w = cdf_pick(st.vals, st.key);
          }
          f.stores.push_back({rv, w});
          ++res_.stats.samples;
        }
      } else {
        for (int l = 0; l < hw_.T; ++l) {
          const auto& ln = ins.lanes[static_cast<std::size_t>(l)];
          if (!ln.en || !f.lane_ok[static_cast<std::size_t>(l)]) continue;
          LaneSu& st = su_[static_cast<std::size_t>(l)];
          if (su.first) {
            st = LaneSu{};
            st.key = key_of(ln.rv);
          }
          const double v = neg_of(l);
          if (su.cdf) {
            st.vals.push_back(v);
          } else {
            su_draw(st, v, su.bin);
          }
          if (su.last) {
            int w = st.winner;
            if (su.cdf) {
              check_size(su.dist_size);
              w = cdf_pick(st.vals, st.key);
            }
            f.stores.push_back({ln.rv, w});
            ++res_.stats.samples;
          }
        }
      }
      break;
    }
    case MhOp::kPasDraw: {
      const int d = su.slot;
      if (!slot_ok(d)) break;
      if (su.first && d == 0) {
        std::fill(valid_.begin(), valid_.end(), 0);
        drawn_ = 0;
        lse_ = lse2_ = kNegInf;
        fwd_idx_ = rev_idx_ = fwd_res_ = rev_res_ = de_ = 0.0;
        accepted_ = false;
      }
      LaneSu& st = spatial_;
      if (su.first) {
        st = LaneSu{};
        st.key = key_of(streams::kPasDraw + static_cast<std::uint64_t>(d));
      }
      for (int l = 0; l < hw_.T && l < hw_.S; ++l) {
        if (!ins.lanes[static_cast<std::size_t>(l)].en) continue;
        const double v = neg_of(l);
        const std::uint64_t bin = su.bin_base + static_cast<std::uint64_t>(l);
        if (d == 0) lse_ = log_add_exp(lse_, v);
        const bool had = st.have;
        const int before = st.winner;
        su_draw(st, v, bin);
        if (!had || st.winner != before) st.raw.assign(1, v);
      }
      if (su.last) {
        const auto r = static_cast<std::uint32_t>(st.winner);
        sel_[static_cast<std::size_t>(d)] = r;
        bool dup = false;
        for (int q = 0; q < d; ++q) dup = dup || sel_[static_cast<std::size_t>(q)] == r;
        valid_[static_cast<std::size_t>(d)] = !dup;
        fwd_idx_ += st.raw.at(0) - lse_;
        drawn_ = d + 1;
      }
      break;
    }
    case MhOp::kPasRevIndex: {
      if (su.first) lse2_ = kNegInf;
      for (int l = 0; l < hw_.T && l < hw_.S; ++l) {
        if (!ins.lanes[static_cast<std::size_t>(l)].en) continue;
        const double v = neg_of(l);
        const std::uint64_t bin = su.bin_base + static_cast<std::uint64_t>(l);
        lse2_ = log_add_exp(lse2_, v);
        for (int d = 0; d < drawn_; ++d) {
          if (sel_[static_cast<std::size_t>(d)] == bin) cap_[static_cast<std::size_t>(d)] = v;
        }
      }
      if (su.last) {
        for (int d = 0; d < drawn_; ++d) rev_idx_ += cap_[static_cast<std::size_t>(d)] - lse2_;
      }
      break;
    }
    case MhOp::kPasResample:
    case MhOp::kPasReverse: {
      const int d = su.slot;
      if (!slot_ok(d)) break;
      if (su.last) ++res_.stats.samples;
      if (!valid_[static_cast<std::size_t>(d)]) break;
      LaneSu& st = su_[0];
      const auto j = sel_[static_cast<std::size_t>(d)];
      if (su.first) {
        st = LaneSu{};
        st.key = key_of(streams::kPasResample + static_cast<std::uint64_t>(d));
      }
      st.raw.push_back(f.lane_e[0]);
      st.vals.push_back(neg_of(0));
      if (op == MhOp::kPasResample) su_draw(st, st.vals.back(), su.bin);
      if (!su.last) break;
      const double lse = log_sum_exp(st.vals);
      if (op == MhOp::kPasResample) {
        const int nv = st.winner;
        const std::int32_t cur = sample(j, cycle, f.pc, f.seq);
        fwd_res_ += st.vals[static_cast<std::size_t>(nv)] - lse;
        de_ += st.raw[static_cast<std::size_t>(nv)] - st.raw[static_cast<std::size_t>(cur)];
        old_[static_cast<std::size_t>(d)] = cur;
        new_[static_cast<std::size_t>(d)] = nv;
        f.stores.push_back({j, nv});
      } else {
        const std::int32_t o = old_[static_cast<std::size_t>(d)];
        rev_res_ += st.vals[static_cast<std::size_t>(o)] - lse;
        f.stores.push_back({j, o});
      }
      break;
    }
    case MhOp::kAccept: {
      const double log_alpha = -beta * de_ + (rev_idx_ - fwd_idx_) + (rev_res_ - fwd_res_);
      auto rng = UniformRng::for_stream(o_.seed, f.iter, streams::kPasAccept);
      accepted_ = mh_accept(log_alpha, rng);
      ++res_.stats.proposals;
      if (accepted_) {
        ++res_.stats.accepted;
        for (int d = 0; d < drawn_; ++d) {
          if (valid_[static_cast<std::size_t>(d)]) {
            f.stores.push_back({sel_[static_cast<std::size_t>(d)], new_[static_cast<std::size_t>(d)]});
          }
        }
      }
      break;
    }
    case MhOp::kHistSnapshot:
      break;
    default:
      violation(cycle, f.pc, "unknown sampler micro-op " + std::to_string(su.mh_op));
  }
}

void Machine::stage_st(Flight& f, std::uint64_t cycle) {
  const Instruction& ins = p_.code[f.pc];
  if (ins.kind != Kind::kComputeSampleStore) return;
  const auto op = static_cast<MhOp>(ins.su.mh_op);
  const auto bytes = static_cast<std::uint64_t>(hw_.word_bytes);
  auto write = [&](std::uint32_t rv, std::int32_t v) {
    if (rv >= n_ || v < 0 || v >= p_.cardinalities[rv]) {
      violation(cycle, f.pc, "store of value " + std::to_string(v) + " to sample " + std::to_string(rv) + " out of range");
      return false;
    }
    x_[rv] = v;
    res_.stats.sample_bytes_written += bytes;
    return true;
  };
  if (op == MhOp::kHistSnapshot) {
    for (const auto& ln : ins.lanes) {
      if (!ln.en || !ins.st.hist) continue;
      if (ln.rv >= n_) {
        violation(cycle, f.pc, "histogram of sample " + std::to_string(ln.rv) + " out of range");
        continue;
      }
      count_hist(ln.rv, sample(ln.rv, cycle, f.pc, f.seq), f.iter);
    }
  } else if (op == MhOp::kAccept) {
    if (ins.st.commit) {
      for (const auto& [rv, v] : f.stores) write(rv, v);
    }
  } else if (ins.st.en) {
    for (const auto& [rv, v] : f.stores) {
      if (ins.st.defer) {
        deferred_.push_back({rv, {v, ins.st.hist != 0}});
        continue;
      }
      if (write(rv, v) && ins.st.hist && op == MhOp::kNone) count_hist(rv, v, f.iter);
    }
  }
  if (ins.st.commit && op != MhOp::kAccept) {
    for (const auto& [rv, vh] : deferred_) {
      if (write(rv, vh.first) && vh.second) count_hist(rv, vh.first, f.iter);
    }
    deferred_.clear();
  }
}

SimResult Machine::run() {
  const std::size_t D = ring_.size();
  const std::size_t loop_pc = p_.code.back().loop.en ? p_.code.size() - 1 : p_.code.size();
  for (std::uint64_t cycle = 0;; ++cycle) {
    bool any = false;
    auto at = [&](int offset) -> Flight* {
      if (cycle < static_cast<std::uint64_t>(offset)) return nullptr;
      Flight& f = ring_[(cycle - static_cast<std::uint64_t>(offset)) % D];
      if (!f.live || f.issue != cycle - static_cast<std::uint64_t>(offset)) return nullptr;
      return &f;
    };
    if (Flight* f = at(t_.dec)) stage_dec(*f, cycle), any = true;
    if (Flight* f = at(t_.cu_end)) {
      stage_wb(*f, cycle);
      retire_pending(*f, t_.cu_end);
      any = true;
    }
    if (Flight* f = at(t_.su)) {
      stage_su(*f, cycle);
      retire_pending(*f, t_.su);
      any = true;
    }
    if (Flight* f = at(t_.st)) {
      stage_st(*f, cycle);
      retire_pending(*f, t_.st);
      f->live = false;
      if (f->pc == loop_pc || (loop_pc == p_.code.size() && f->pc + 1 == p_.code.size())) {
        ++res_.stats.iterations;
        if (o_.record_states) res_.states.push_back(x_);
      }
    }
    for (int s = 1; s < t_.st; ++s) {
      if (at(s)) any = true;
    }
    const bool stalled = !done_ && cycle < stall_until_;
    long issued_pc = -1;
    if (!done_ && !stalled) {
      issued_pc = static_cast<long>(pc_);
      const std::uint64_t it = iter_;
      issue(cycle);
      any = true;
      if (o_.trace) {
        *o_.trace << cycle << ',' << issued_pc << ',' << to_string(p_.code[static_cast<std::size_t>(issued_pc)].kind)
                  << ',' << it << ",0\n";
      }
    } else if (o_.trace && !done_) {
      *o_.trace << cycle << ",-1,stall," << iter_ << ",1\n";
    }
    if (done_ && !any) break;
  }
  res_.stats.cycles = last_issue_ + static_cast<std::uint64_t>(t_.depth());
  res_.final_state = x_;
  res_.histograms.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    const auto c = static_cast<std::size_t>(p_.cardinalities[i]);
    res_.histograms[i].resize(c);
    for (std::size_t s = 0; s < c; ++s) res_.histograms[i][s] = hist_[p_.hist_offset[i] + s];
  }
  return std::move(res_);
}

}  // namespace

SimResult simulate(const Program& program, const SimOptions& options) {
  if (options.trace) *options.trace << kTraceHeader << '\n';
  return Machine(program, options).run();
}

std::vector<Violation> check_structural(const Program& program, std::uint64_t steps) {
  std::vector<Violation> out;
  const HwConfig& hw = program.hw;
  const auto& code = program.code;
  const std::size_t n = program.cardinalities.size();
  const int P = hw.pe_inputs();
  auto bad = [&](std::size_t pc, std::string what) { out.push_back({0, pc, std::move(what)}); };
  if (code.empty()) {
    bad(0, "program is empty");
    return out;
  }
  for (std::size_t pc = 0; pc < code.size(); ++pc) {
    const Instruction& ins = code[pc];
    try {
      (void)encode(ins, hw);
    } catch (const Error& e) {
      bad(pc, e.what());
      continue;
    }
    if (ins.kind == Kind::kNop) continue;
    for (int b = 0; b < hw.B; ++b) {
      const auto& ld = ins.loads[static_cast<std::size_t>(b)];
      if (!ld.en) continue;
      for (const auto& t : ld.idx) {
        if (t.en && !t.use_bin && t.rv >= n) bad(pc, "ld" + std::to_string(b) + " indexes sample " + std::to_string(t.rv));
      }
    }
    for (int l = 0; l < hw.T; ++l) {
      const auto& ln = ins.lanes[static_cast<std::size_t>(l)];
      for (int k = 0; k < P; ++k) {
        const auto& in = ins.inputs[static_cast<std::size_t>(l * P + k)];
        const auto src = static_cast<InputSrc>(in.src);
        if ((src == InputSrc::kData || src == InputSrc::kRf) && in.sel >= hw.B) {
          bad(pc, "in" + std::to_string(l * P + k) + " selects bank " + std::to_string(in.sel));
        } else if (src == InputSrc::kData && !ins.loads[in.sel].en) {
          bad(pc, "in" + std::to_string(l * P + k) + " reads idle bank " + std::to_string(in.sel));
        } else if (src == InputSrc::kRf && !ins.rf[in.sel].en) {
          bad(pc, "in" + std::to_string(l * P + k) + " reads idle register file " + std::to_string(in.sel));
        }
      }
      if (!ln.en) continue;
      if (ins.cu.wb_en && (ln.wb_bank >= hw.B)) bad(pc, "lane" + std::to_string(l) + " writes back to a missing bank");
      if (ins.su.mh_op == 0 && (ins.kind == Kind::kComputeSample || ins.kind == Kind::kComputeSampleStore) &&
          ln.rv >= n) {
        bad(pc, "lane" + std::to_string(l) + " produces sample " + std::to_string(ln.rv));
      }
    }
    if (ins.su.dist_size > kMaxCardinality) bad(pc, "distribution size above " + std::to_string(kMaxCardinality));
    if (ins.su.mh_op > static_cast<int>(MhOp::kHistSnapshot)) bad(pc, "unknown sampler micro-op");
    if (ins.cu.beta > static_cast<int>(BetaScale::kHalf)) bad(pc, "unknown beta scale");
    if (ins.su.mh_op != 0 && ins.su.slot >= std::max(1, program.pas_L)) bad(pc, "sampler slot beyond L");
    if (ins.loop.en && ins.loop.target >= code.size()) bad(pc, "loop target out of range");
  }

  // Hazard distances, including the wrap of the loop body.
  const int depth = PipelineTiming::for_hw(hw).depth();
  std::vector<std::vector<Access>> acc;
  acc.reserve(code.size());
  for (const auto& ins : code) acc.push_back(instruction_accesses(ins, hw));
  const bool loops = code.back().loop.en && code.back().loop.target == 0;
  const std::size_t len = code.size();
  for (std::size_t i = 0; i < len; ++i) {
    if (acc[i].empty()) continue;
    for (std::size_t dist = 1; dist < static_cast<std::size_t>(depth); ++dist) {
      std::size_t j = i + dist;
      if (j >= len) {
        if (!loops) break;
        j -= len;
        if (j >= i) break;
      }
      if (acc[j].empty()) continue;
      const int need = required_distance(acc[i], acc[j]);
      if (static_cast<int>(dist) < need) {
        bad(j, "issued " + std::to_string(dist) + " cycles after instruction " + std::to_string(i) + ", needs " +
                   std::to_string(need));
      }
    }
  }

  if (out.empty()) {
    SimOptions o;
    o.strict = false;
    o.steps = steps;
    try {
      auto r = simulate(program, o);
      out.insert(out.end(), r.violations.begin(), r.violations.end());
    } catch (const CapacityError&) {
      throw;
    } catch (const Error& e) {
      bad(0, std::string("simulation failed: ") + e.what());
    }
  }
  return out;
}

SamplerBench sampler_microbench(int n, bool cdf, std::uint64_t iterations, int cdt_capacity) {
  if (n < 1 || n > kMaxCardinality) throw InputError("microbenchmark size must be in [1, 256]");
  if (iterations < 2) throw InputError("microbenchmark needs at least two iterations");
  const HwConfig hw{1, 1, 1, 0, 1, 500e6, 4};
  Program p;
  p.hw = hw;
  p.algorithm = Algorithm::kGibbs;
  p.cardinalities = {n};
  p.hist_offset = {0};
  p.memory.assign(1, std::vector<std::uint32_t>(kBankWords, 0));
  for (int s = 0; s < n; ++s) p.memory[0][static_cast<std::size_t>(s)] = static_cast<std::uint32_t>((s * 37) % 64);
  for (int s = 0; s < n; ++s) {
    Instruction ins = make_instruction(hw, s + 1 == n ? Kind::kComputeSampleStore : Kind::kComputeSample);
    ins.loads[0].en = 1;
    ins.loads[0].base = static_cast<std::uint16_t>(s);
    ins.inputs[0].src = static_cast<std::uint8_t>(InputSrc::kData);
    ins.cu.mode = static_cast<std::uint8_t>(CuMode::kReducedSum);
    ins.cu.beta = static_cast<std::uint8_t>(BetaScale::kFull);
    ins.lanes[0].en = 1;
    ins.su.cdf = cdf;
    ins.su.bin = static_cast<std::uint16_t>(s);
    ins.su.dist_size = static_cast<std::uint16_t>(n);
    ins.su.first = s == 0;
    ins.su.last = s + 1 == n;
    if (s + 1 == n) {
      ins.st.en = 1;
      ins.loop = {1, 1, 0};
    }
    p.code.push_back(std::move(ins));
  }
  p.phases.push_back({"bench", 0, p.code.size()});
  SimOptions o;
  o.cdt_capacity = cdt_capacity;
  o.seed = streams::kBench;
  o.steps = iterations;
  const auto a = simulate(p, o);
  o.steps = 2 * iterations;
  const auto b = simulate(p, o);
  SamplerBench out;
  out.cycles = b.stats.cycles - a.stats.cycles;
  out.samples = b.stats.samples - a.stats.samples;
  out.cycles_per_sample = static_cast<double>(out.cycles) / static_cast<double>(out.samples);
  return out;
}

}  // namespace mc2a
