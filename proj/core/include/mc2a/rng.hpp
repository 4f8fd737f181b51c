#pragma once

#include <algorithm>
#include <cstdint>

namespace mc2a {

// Counter-based uniform generator. The n-th output of a stream is a pure
// function of (key, n), so a hardware sampler element that knows which bin it
// is processing can reproduce exactly the draw the software reference made
// for that bin. Integer-only mixing keeps streams bit-identical across
// platforms.
class UniformRng {
 public:
  explicit UniformRng(std::uint64_t seed = 0) : key_(mix_seed(seed)) {}

  // Independent substream for one (step, stream) pair of a chain seeded
  // with `seed`.
  static UniformRng for_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t stream);

  std::uint64_t next_u64() { return bits_at(key_, counter_++); }
  // Uniform in the open interval (0, 1).
  double next_uniform() { return to_uniform(next_u64()); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t counter) { counter_ = counter; }

  static std::uint64_t bits_at(std::uint64_t key, std::uint64_t counter) {
    std::uint64_t z = key + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static double to_uniform(std::uint64_t bits) {
    // The top value would round to 1.0; clamp it to the largest double below 1.
    return std::min((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53, 0x1.fffffffffffffp-1);
  }
  static double uniform_at(std::uint64_t key, std::uint64_t counter) {
    return to_uniform(bits_at(key, counter));
  }

 private:
  UniformRng(std::uint64_t key, bool) : key_(key) {}
  static std::uint64_t mix_seed(std::uint64_t seed);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream identifiers shared by the reference chains and the simulator.
// Gibbs-family updates of RV i use stream i; the tagged ranges below sit far
// above any RV id.
namespace streams {
inline constexpr std::uint64_t kTag = 1ULL << 40;
inline constexpr std::uint64_t kPasDraw = 1 * kTag;      // + draw slot
inline constexpr std::uint64_t kPasResample = 2 * kTag;  // + draw slot
inline constexpr std::uint64_t kPasAccept = 3 * kTag;
inline constexpr std::uint64_t kMhPropose = 4 * kTag;
inline constexpr std::uint64_t kMhAccept = 5 * kTag;
inline constexpr std::uint64_t kInit = 6 * kTag;
inline constexpr std::uint64_t kBench = 7 * kTag;
}  // namespace streams

}  // namespace mc2a
