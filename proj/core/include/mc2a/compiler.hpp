#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mc2a/isa.hpp"
#include "mc2a/mcmc.hpp"
#include "mc2a/model.hpp"
#include "mc2a/roofline.hpp"

namespace mc2a {

// Pipeline stage offsets relative to the issue cycle of an instruction:
// IF at 0, decode (sample/RF/data reads) at 1, CU stages 2..K+2, SU at K+3,
// store at K+4. A write made in cycle w is visible to reads in cycles > w.
struct PipelineTiming {
  int dec = 1;
  int cu_end = 3;
  int su = 4;
  int st = 5;

  static PipelineTiming for_hw(const HwConfig& hw) { return {1, hw.K + 2, hw.K + 3, hw.K + 4}; }
  int depth() const { return st + 1; }
};

struct CompileOptions {
  std::uint32_t num_steps = 1000;
  AnnealSchedule anneal = AnnealSchedule::constant(1.0);
  Arith arith = Arith::kInt32;
  int frac_bits = 8;
  int pas_L = 1;
  SamplerKind sampler = SamplerKind::kGumbel;  // kCdf sets su.cdf on Gibbs draws
  bool insert_nops = true;
};

// One MCMC step of `algorithm` on `model` inside an HWLOOP. Supports Gibbs,
// block Gibbs, async Gibbs and PAS (binary models). Throws CapacityError when
// the model does not fit the memories or the instruction fields, InputError
// for unsupported algorithm/model combinations.
Program compile(const GraphModel& model, Algorithm algorithm, const HwConfig& hw,
                const CompileOptions& options = {});

// ----- Bank allocation ------------------------------------------------------

// A data read: table class plus an address key; equal (cls, key) pairs in the
// same cycle are one physical read fanned out by the crossbar.
struct BankRead {
  int cls = 0;
  std::uint64_t key = 0;
  bool operator==(const BankRead&) const = default;
};

struct BankPlan {
  // Banks holding a replica of each class.
  std::vector<std::vector<int>> replicas;
  // Per input cycle: the sub-cycles it was serialized into; each sub-cycle
  // lists (read index, bank).
  std::vector<std::vector<std::vector<std::pair<int, int>>>> schedule;
  int added_cycles = 0;
};

// Places replicas of each class (demand = most same-cycle reads of it) and
// matches every cycle's reads to distinct banks; reads that cannot be matched
// spill into extra sub-cycles. `free_words` is the per-bank space available.
BankPlan allocate_banks(const std::vector<std::vector<BankRead>>& cycles, const std::vector<int>& class_words,
                        std::vector<int> free_words);

// ----- Hazards --------------------------------------------------------------

enum class Resource { kRf, kSample, kSampleAny, kShadow, kSelect };

struct Access {
  Resource res = Resource::kRf;
  std::uint64_t id = 0;
  int stage = 0;
  bool write = false;
};

// Static read/write set of one instruction. Data-dependent sample accesses
// (PAS sampler micro-ops, descriptor reads) appear as kSampleAny.
std::vector<Access> instruction_accesses(const Instruction& ins, const HwConfig& hw);

// Minimum issue distance between an earlier instruction `a` and a later `b`.
int required_distance(const std::vector<Access>& a, const std::vector<Access>& b);

// Inserts Nops so every dependence respects the pipeline latencies, including
// the wrap-around of the HWLOOP body (padding goes at the top of the body).
// Phase spans and the loop target are remapped.
void insert_hazard_nops(Program& program);

// Non-Nop instructions inside a named phase.
std::size_t phase_instruction_count(const Program& program, const std::string& phase);
const PhaseSpan& find_phase(const Program& program, const std::string& phase);

}  // namespace mc2a
