#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "mc2a/mcmc.hpp"
#include "mc2a/model.hpp"
#include "mc2a/rng.hpp"
#include "mc2a/roofline.hpp"

namespace mc2a {

// Hardware constants shared by the compiler and the simulator.
inline constexpr int kBankWords = 1024;  // data memory words per bank
inline constexpr int kRfDepth = 256;     // register-file entries per bank
inline constexpr int kIndexTerms = 4;    // address terms per bank load
inline constexpr int kMaxSlots = 16;     // PAS draw slots (L)
inline constexpr int kCoefBits = 9;
inline constexpr int kHistogramBits = 20;

enum class Kind : std::uint8_t {
  kLoad = 0,
  kCompute = 1,
  kSample = 2,
  kComputeSample = 3,
  kComputeSampleStore = 4,
  kNop = 5,
};

enum class CuMode : std::uint8_t { kBypass = 0, kDotProduct = 1, kReducedSum = 2, kPartial = 3 };
// Scaling of a PE result before it reaches the SU: none, -beta, or -beta/2
// (beta shifted right by one).
enum class BetaScale : std::uint8_t { kNone = 0, kFull = 1, kHalf = 2 };

// Where a PE input comes from: a data-bank load, a register-file read, or a
// descriptor term of the RV held in a sampler selection register.
enum class InputSrc : std::uint8_t { kOff = 0, kData = 1, kRf = 2, kDesc = 3 };

// Sampler-side micro-operations for PAS bookkeeping.
enum class MhOp : std::uint8_t {
  kNone = 0,
  kPasDraw = 1,      // spatial index draw into a selection slot
  kPasRevIndex = 2,  // spatial log-normalizer of the reverse index distribution
  kPasResample = 3,  // temporal resample of the RV in a slot
  kPasReverse = 4,   // temporal reverse-path probability, restores the old value
  kAccept = 5,       // MH accept; commits the proposal
  kHistSnapshot = 6, // count the current value of each lane RV
};

const char* to_string(Kind k);
const char* to_string(CuMode m);
const char* to_string(MhOp op);

struct IndexTerm {
  std::uint8_t en = 0;
  std::uint8_t use_bin = 0;  // add the current bin instead of a sample value
  std::uint32_t rv = 0;
  std::uint8_t shift = 0;
  bool operator==(const IndexTerm&) const = default;
};

// One data-bank read: address = base + sum of enabled (value << shift).
struct BankLoad {
  std::uint8_t en = 0;
  std::uint16_t base = 0;
  IndexTerm idx[kIndexTerms];
  bool operator==(const BankLoad&) const = default;
};

struct RfRead {
  std::uint8_t en = 0;
  std::uint16_t addr = 0;
  bool operator==(const RfRead&) const = default;
};

// Crossbar routing of one PE input.
struct PeInput {
  std::uint8_t src = 0;   // InputSrc
  std::uint16_t sel = 0;  // bank for data/rf, term index for desc
  std::int16_t coef = 0;  // DotProduct multiplier
  bool operator==(const PeInput&) const = default;
};

struct Lane {
  std::uint8_t en = 0;
  std::uint16_t wb_bank = 0;
  std::uint16_t wb_addr = 0;
  std::uint32_t rv = 0;  // RV produced by this lane (stream id and sample address)
  bool operator==(const Lane&) const = default;
};

struct CuFields {
  std::uint8_t mode = 0;  // CuMode
  std::uint8_t beta = 0;  // BetaScale
  std::uint8_t acc_in = 0;
  std::uint8_t wb_en = 0;
  bool operator==(const CuFields&) const = default;
};

struct SuFields {
  std::uint8_t spatial = 0;
  std::uint8_t cdf = 0;
  std::uint8_t first = 0;
  std::uint8_t last = 0;
  std::uint16_t bin = 0;
  std::uint16_t dist_size = 0;
  std::uint8_t mh_op = 0;  // MhOp
  std::uint8_t slot = 0;
  std::uint32_t bin_base = 0;
  bool operator==(const SuFields&) const = default;
};

struct StoreFields {
  std::uint8_t en = 0;
  std::uint8_t hist = 0;
  std::uint8_t defer = 0;
  std::uint8_t commit = 0;
  bool operator==(const StoreFields&) const = default;
};

struct LoopFields {
  std::uint8_t en = 0;
  std::uint32_t count = 0;
  std::uint16_t target = 0;
  bool operator==(const LoopFields&) const = default;
};

struct Instruction {
  Kind kind = Kind::kNop;
  std::vector<BankLoad> loads;  // B entries
  std::vector<RfRead> rf;       // B entries
  std::vector<PeInput> inputs;  // T * (2^K + 1) entries, lane-major
  CuFields cu;
  std::vector<Lane> lanes;  // T entries
  SuFields su;
  StoreFields st;
  LoopFields loop;

  bool operator==(const Instruction&) const = default;
};

// Field widths derived from the hardware parameters.
struct IsaLayout {
  int bank_bits = 0;
  int rv_bits = 0;
  int rf_bits = 0;
  int base_bits = 0;
  int slot_bits = 0;
  int word_bits = 0;

  static IsaLayout for_hw(const HwConfig& hw);
  int word_u64s() const { return (word_bits + 63) / 64; }
};

// An empty (Nop) instruction with every per-bank and per-lane vector sized for hw.
Instruction make_instruction(const HwConfig& hw, Kind kind = Kind::kNop);

using Word = std::vector<std::uint64_t>;

// Dense little-endian packing in the order: kind, loads, rf reads, crossbar,
// CU, lanes, SU, store, loop. Throws CapacityError when a field overflows.
Word encode(const Instruction& ins, const HwConfig& hw);
Instruction decode(const Word& word, const HwConfig& hw);

// Uniformly random kind; every field drawn within its width (extremes
// included). Used by the roundtrip property tests.
Instruction random_instruction(const HwConfig& hw, UniformRng& rng);

// Named field access used by the assembler, in packing order (kind excluded).
struct FieldRef {
  std::string name;
  std::int64_t value = 0;
  int width = 0;
  bool is_signed = false;
};
std::vector<FieldRef> list_fields(const Instruction& ins, const HwConfig& hw);
void set_field(Instruction& ins, const HwConfig& hw, const std::string& name, std::int64_t value);
void set_fields(Instruction& ins, const HwConfig& hw,
                const std::vector<std::pair<std::string, std::int64_t>>& values);

// ----- Programs -------------------------------------------------------------

enum class Arith { kInt32, kFloat32 };
const char* to_string(Arith a);

struct PhaseSpan {
  std::string name;
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

// One replica of an energy table in a data bank: the entry for scope values
// x lives at base + sum(x_p << shifts[p]).
struct TablePlacement {
  int cls = 0;
  int bank = 0;
  int base = 0;
  int words = 0;
  std::vector<int> shifts;
};

// Descriptor term used by PAS resampling: one factor of an RV, the replica
// it reads and the scope position of the RV itself (that coordinate is
// replaced by the bin being evaluated).
struct DescTerm {
  int bank = 0;
  int base = 0;
  std::vector<RvId> scope;
  std::vector<int> shifts;
  int own = 0;
};

struct Program {
  HwConfig hw;
  std::vector<Instruction> code;
  Algorithm algorithm = Algorithm::kGibbs;
  Arith arith = Arith::kInt32;
  int frac_bits = 8;
  int pas_L = 0;
  AnnealSchedule anneal = AnnealSchedule::constant(1.0);
  std::vector<int> cardinalities;
  std::vector<std::uint32_t> hist_offset;  // first histogram counter of each RV
  std::vector<TablePlacement> tables;
  std::vector<std::vector<DescTerm>> desc;  // per RV
  std::vector<std::vector<std::uint32_t>> memory;  // B banks of kBankWords raw words
  std::vector<PhaseSpan> phases;

  std::size_t loop_begin() const;
  std::size_t loop_end() const;  // index of the instruction carrying the loop
  void set_loop_count(std::uint32_t count);
};

// Binary program file: magic, version, hw parameters, word width, then the
// packed instruction words.
void write_program_binary(std::ostream& os, const HwConfig& hw, const std::vector<Instruction>& code);
std::vector<Instruction> read_program_binary(std::istream& is, HwConfig& hw);

// Bank-addressed hex text: "bank <b>" headers followed by "<addr>: <words>"
// rows of eight words; all-zero rows are omitted.
void write_memory_image(std::ostream& os, const std::vector<std::vector<std::uint32_t>>& memory);
std::vector<std::vector<std::uint32_t>> read_memory_image(std::istream& is, int banks);

}  // namespace mc2a
