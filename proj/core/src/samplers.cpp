#include "mc2a/samplers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "mc2a/error.hpp"

namespace mc2a {

double gumbel_noise(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InputError("gumbel_noise needs u in (0, 1)");
  return -std::log(-std::log(u));
}

std::size_t gumbel_sample(std::span<const double> neg_energies, UniformRng& rng) {
  if (neg_energies.empty()) throw InputError("cannot sample an empty distribution");
  std::size_t best_idx = 0;
  double best = 0.0;
  bool have = false;
  for (std::size_t j = 0; j < neg_energies.size(); ++j) {
    const double u = rng.next_uniform();
    const double v = neg_energies[j];
    if (is_impossible(v)) continue;
    const double score = v - std::log(-std::log(u));
    if (!have || score > best) {
      best = score;
      best_idx = j;
      have = true;
    }
  }
  return best_idx;
}

std::size_t cdf_sample_with_uniform(std::span<const double> weights, double u) {
  if (weights.empty()) throw InputError("cannot sample an empty distribution");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("CDF weights must be finite and non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw InputError("CDF weights are all zero");
  const double target = u * total;
  double prefix = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    prefix += weights[i];
    if (target < prefix) return i;
  }
  // u * total can round up to the total; the last positive weight owns it.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

std::size_t cdf_sample(std::span<const double> weights, UniformRng& rng) {
  return cdf_sample_with_uniform(weights, rng.next_uniform());
}

// ----- LUT ------------------------------------------------------------------

namespace {

void check_lut_shape(std::size_t size, int precision_bits) {
  if (size < 1 || size > 4096 || !std::has_single_bit(size)) {
    throw InputError("Gumbel LUT size must be a power of two in [1, 4096]");
  }
  if (precision_bits < 1 || precision_bits > GumbelLut::kInternalFrac) {
    throw InputError("Gumbel LUT precision must be in [1, 24] bits");
  }
}

constexpr double kLn2 = 0.69314718055994530942;

}  // namespace

GumbelLut::GumbelLut(int size, int precision_bits) : precision_bits_(precision_bits) {
  check_lut_shape(static_cast<std::size_t>(size), precision_bits);
  index_bits_ = std::countr_zero(static_cast<unsigned>(size));
  log2_.resize(static_cast<std::size_t>(size));
  tail_.resize(static_cast<std::size_t>(size));
  for (int k = 0; k < size; ++k) {
    const double mid = (k + 0.5) / size;
    const double x = 0.5 * mid;
    log2_[static_cast<std::size_t>(k)] =
        static_cast<std::int32_t>(std::nearbyint(std::ldexp(std::log2(1.0 + mid), precision_bits)));
    tail_[static_cast<std::size_t>(k)] =
        static_cast<std::int32_t>(std::nearbyint(std::ldexp(std::log2(-std::log1p(-x) / x), precision_bits)));
  }
}

GumbelLut::GumbelLut(int precision_bits, std::vector<std::int32_t> log2_entries,
                     std::vector<std::int32_t> tail_entries)
    : precision_bits_(precision_bits), log2_(std::move(log2_entries)), tail_(std::move(tail_entries)) {
  check_lut_shape(log2_.size(), precision_bits);
  if (tail_.size() != log2_.size()) throw InputError("Gumbel LUT tables differ in size");
  index_bits_ = std::countr_zero(static_cast<unsigned>(log2_.size()));
}

// log2(v) for an integer v > 0, kInternalFrac fraction bits.
std::int64_t GumbelLut::log2_fixed(std::uint64_t v) const {
  const int below = std::bit_width(v) - 1;
  const std::uint64_t mant = v & ((std::uint64_t{1} << below) - 1);
  const std::uint64_t k = index_bits_ == 0 ? 0
                          : below >= index_bits_ ? mant >> (below - index_bits_)
                                                 : mant << (index_bits_ - below);
  return static_cast<std::int64_t>(below) * (std::int64_t{1} << kInternalFrac) +
         (static_cast<std::int64_t>(log2_[k]) << (kInternalFrac - precision_bits_));
}

std::int64_t GumbelLut::noise_fixed(std::uint64_t raw_bits) const {
  constexpr std::int64_t one = std::int64_t{1} << kInternalFrac;
  // u = (2U + 1) / 2^54 with U the top 53 bits, as in UniformRng::to_uniform.
  const std::uint64_t odd = ((raw_bits >> 11) << 1) | 1;
  std::int64_t log2_e = 0;  // log2(-ln u)
  if (odd < (std::uint64_t{1} << 53)) {
    const std::int64_t neg_log2_u = 54 * one - log2_fixed(odd);  // >= 1
    log2_e = log2_fixed(static_cast<std::uint64_t>(neg_log2_u)) - kInternalFrac * one +
             static_cast<std::int64_t>(std::nearbyint(std::ldexp(std::log2(kLn2), kInternalFrac)));
  } else {
    const std::uint64_t x = (std::uint64_t{1} << 54) - odd;  // (1 - u) * 2^54, at most 2^53
    const std::uint64_t k = x >= (std::uint64_t{1} << 53) ? static_cast<std::uint64_t>(size() - 1)
                                                           : (x << 1) >> (54 - index_bits_);
    log2_e = log2_fixed(x) - 54 * one +
             (static_cast<std::int64_t>(tail_[k]) << (kInternalFrac - precision_bits_));
  }
  return static_cast<std::int64_t>(std::nearbyint(-kLn2 * static_cast<double>(log2_e)));
}

double GumbelLut::noise(std::uint64_t raw_bits) const {
  return std::ldexp(static_cast<double>(noise_fixed(raw_bits)), -kInternalFrac);
}

void GumbelLut::dump(std::ostream& os) const {
  os << "gumbel_lut size=" << size() << " precision=" << precision_bits_ << "\n";
  os << "# index log2_entry tail_entry\n";
  for (int k = 0; k < size(); ++k) {
    os << k << ' ' << log2_[static_cast<std::size_t>(k)] << ' ' << tail_[static_cast<std::size_t>(k)] << "\n";
  }
}

GumbelLut GumbelLut::load(std::istream& is) {
  std::string line;
  int lineno = 0;
  int size = -1;
  int precision = -1;
  std::vector<std::int32_t> lg, tail;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    if (size < 0) {
      std::string tag, a, b;
      ls >> tag >> a >> b;
      if (tag != "gumbel_lut" || a.rfind("size=", 0) != 0 || b.rfind("precision=", 0) != 0) {
        throw ParseError("<lut>", lineno, "expected 'gumbel_lut size=N precision=P' header");
      }
      size = std::stoi(a.substr(5));
      precision = std::stoi(b.substr(10));
      continue;
    }
    int k = 0;
    long long l = 0, t = 0;
    if (!(ls >> k >> l >> t) || k != static_cast<int>(lg.size())) {
      throw ParseError("<lut>", lineno, "expected '<index> <log2> <tail>' in order");
    }
    lg.push_back(static_cast<std::int32_t>(l));
    tail.push_back(static_cast<std::int32_t>(t));
  }
  if (size < 0 || static_cast<int>(lg.size()) != size) {
    throw ParseError("<lut>", lineno, "LUT entry count does not match header");
  }
  return GumbelLut(precision, std::move(lg), std::move(tail));
}

std::size_t gumbel_sample_lut(std::span<const std::int32_t> neg_energies, int logit_frac_bits,
                              const GumbelLut& lut, UniformRng& rng) {
  if (neg_energies.empty()) throw InputError("cannot sample an empty distribution");
  if (logit_frac_bits < 0 || logit_frac_bits > GumbelLut::kInternalFrac) {
    throw InputError("logit fraction bits must be in [0, 24]");
  }
  const int shift = GumbelLut::kInternalFrac - logit_frac_bits;
  std::size_t best_idx = 0;
  std::int64_t best = 0;
  bool have = false;
  for (std::size_t j = 0; j < neg_energies.size(); ++j) {
    const std::uint64_t raw = rng.next_u64();
    if (neg_energies[j] == kImpossibleFixed) continue;
    const std::int64_t score = (std::int64_t{neg_energies[j]} * (std::int64_t{1} << shift)) + lut.noise_fixed(raw);
    if (!have || score > best) {
      best = score;
      best_idx = j;
      have = true;
    }
  }
  return best_idx;
}

// ----- Distribution helpers ---------------------------------------------------

std::vector<double> empirical_distribution(std::span<const double> neg_energies, std::uint64_t draws,
                                           std::uint64_t seed, NoiseKind kind, const GumbelLut* lut,
                                           int logit_frac_bits) {
  if (neg_energies.empty()) throw InputError("cannot sample an empty distribution");
  if (draws == 0) throw InputError("empirical distribution needs at least one draw");
  const std::size_t n = neg_energies.size();
  std::vector<std::uint64_t> counts(n, 0);
  UniformRng rng(seed);
  switch (kind) {
    case NoiseKind::kExact:
      for (std::uint64_t d = 0; d < draws; ++d) ++counts[gumbel_sample(neg_energies, rng)];
      break;
    case NoiseKind::kLut: {
      if (!lut) throw InputError("LUT sampling needs a table");
      std::vector<std::int32_t> fixed(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = std::nearbyint(std::ldexp(neg_energies[i], logit_frac_bits));
        if (std::abs(v) > 2147483647.0) throw CapacityError("logit does not fit 32-bit fixed point");
        fixed[i] = static_cast<std::int32_t>(v);
      }
      for (std::uint64_t d = 0; d < draws; ++d) ++counts[gumbel_sample_lut(fixed, logit_frac_bits, *lut, rng)];
      break;
    }
    case NoiseKind::kCdf: {
      const double top = *std::max_element(neg_energies.begin(), neg_energies.end());
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(neg_energies[i] - top);
      for (std::uint64_t d = 0; d < draws; ++d) {
        ++counts[cdf_sample(w, rng)];
        // Keep the stream aligned with the Gumbel runs (one uniform per entry).
        rng.seek(rng.counter() + n - 1);
      }
      break;
    }
  }
  return normalize_counts(counts);
}

std::vector<double> random_logits(std::size_t n, double spread, std::uint64_t seed) {
  if (n == 0 || !(spread >= 0.0)) throw InputError("random logits need n > 0 and spread >= 0");
  UniformRng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = std::ldexp(std::nearbyint(std::ldexp(-spread * rng.next_uniform(), 8)), -8);
  return out;
}

// ----- Log-space helpers ------------------------------------------------------

double log_add_exp(double a, double b) {
  if (is_impossible(a)) return b;
  if (is_impossible(b)) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double log_sum_exp(std::span<const double> values) {
  double acc = -std::numeric_limits<double>::infinity();
  for (double v : values) acc = log_add_exp(acc, v);
  return acc;
}

std::vector<double> softmax(std::span<const double> neg_energies) {
  const double lse = log_sum_exp(neg_energies);
  std::vector<double> p(neg_energies.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = is_impossible(neg_energies[i]) ? 0.0 : std::exp(neg_energies[i] - lse);
  }
  return p;
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("total_variation needs equal-length distributions");
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

std::vector<double> normalize_counts(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  std::vector<double> p(counts.size(), 0.0);
  if (total == 0) return p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return p;
}

}  // namespace mc2a
