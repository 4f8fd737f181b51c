#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "mc2a/rng.hpp"

namespace mc2a {

// Stand-in for log(0): an impossible category never wins an argmax unless
// every category is impossible.
inline constexpr double kImpossible = std::numeric_limits<double>::lowest();
inline constexpr std::int32_t kImpossibleFixed = std::numeric_limits<std::int32_t>::min();

// -log(-log(u)) for u in (0, 1).
double gumbel_noise(double u);

inline bool is_impossible(double v) { return v == kImpossible || v == -std::numeric_limits<double>::infinity(); }

// Gumbel-max draw from unnormalized log-weights. Consumes exactly one uniform
// per entry, in order, and breaks ties toward the lowest index.
std::size_t gumbel_sample(std::span<const double> neg_energies, UniformRng& rng);

// Inverse-CDF draw: builds prefix sums, scales one uniform by the total and
// returns the smallest index whose prefix exceeds it.
std::size_t cdf_sample(std::span<const double> weights, UniformRng& rng);
std::size_t cdf_sample_with_uniform(std::span<const double> weights, double u);

// Table-driven Gumbel noise. -log(-log u) is evaluated in fixed point with a
// leading-zero count for the exponent and two `size`-entry tables with
// `precision_bits` fraction bits, read at bin midpoints:
//   log2 table:  log2(1 + f) for the mantissa f of a normalized value
//   tail table:  log2(-ln(1 - x) / x) for x in (0, 1/2]
// For u <= 1/2 the noise is -ln2 * log2(ln2 * -log2 u); for u > 1/2 it uses
// x = 1 - u so that small -ln u keeps its relative precision. Intermediate
// values carry kInternalFrac fraction bits.
class GumbelLut {
 public:
  static constexpr int kDefaultSize = 16;
  static constexpr int kDefaultPrecision = 8;
  static constexpr int kInternalFrac = 24;

  GumbelLut() : GumbelLut(kDefaultSize, kDefaultPrecision) {}
  GumbelLut(int size, int precision_bits);
  // Rebuild from explicit entries (e.g. a dumped table).
  GumbelLut(int precision_bits, std::vector<std::int32_t> log2_entries, std::vector<std::int32_t> tail_entries);

  int size() const { return static_cast<int>(log2_.size()); }
  int precision_bits() const { return precision_bits_; }
  int index_bits() const { return index_bits_; }
  const std::vector<std::int32_t>& log2_entries() const { return log2_; }
  const std::vector<std::int32_t>& tail_entries() const { return tail_; }

  // Noise for one raw 64-bit uniform (the same bits UniformRng::to_uniform
  // maps to u), in fixed point with kInternalFrac fraction bits.
  std::int64_t noise_fixed(std::uint64_t raw_bits) const;
  double noise(std::uint64_t raw_bits) const;

  void dump(std::ostream& os) const;
  static GumbelLut load(std::istream& is);
  bool operator==(const GumbelLut&) const = default;

 private:
  std::int64_t log2_fixed(std::uint64_t v) const;

  int precision_bits_;
  int index_bits_ = 0;
  std::vector<std::int32_t> log2_;
  std::vector<std::int32_t> tail_;
};

// Gumbel-max over fixed-point log-weights with `logit_frac_bits` fraction bits
// (at most GumbelLut::kInternalFrac) using LUT noise; consumes one raw draw
// per entry like gumbel_sample.
std::size_t gumbel_sample_lut(std::span<const std::int32_t> neg_energies, int logit_frac_bits,
                              const GumbelLut& lut, UniformRng& rng);

// Empirical distribution of `draws` samples of softmax(neg_energies); all
// uniforms come from UniformRng(seed), one per entry per draw, so exact, LUT
// and CDF runs with the same seed see the same raw bits. LUT runs use logits
// in fixed point with `logit_frac_bits` fraction bits.
enum class NoiseKind { kExact, kLut, kCdf };
std::vector<double> empirical_distribution(std::span<const double> neg_energies, std::uint64_t draws,
                                           std::uint64_t seed, NoiseKind kind, const GumbelLut* lut = nullptr,
                                           int logit_frac_bits = 8);

// Random log-weights in [-spread, 0], rounded to multiples of 2^-8.
std::vector<double> random_logits(std::size_t n, double spread, std::uint64_t seed);

// Sequential log-sum-exp in index order; the order is part of the contract so
// that the reference chains and the simulator produce identical doubles.
double log_sum_exp(std::span<const double> values);
double log_add_exp(double a, double b);

std::vector<double> softmax(std::span<const double> neg_energies);
double total_variation(std::span<const double> p, std::span<const double> q);
// Empirical distribution of a histogram of counts.
std::vector<double> normalize_counts(std::span<const std::uint64_t> counts);

}  // namespace mc2a
