#include "mc2a/rng.hpp"

namespace mc2a {

namespace {

std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xFF51AFD7ED558CCDULL;
  k ^= k >> 33;
  k *= 0xC4CEB9FE1A85EC53ULL;
  k ^= k >> 33;
  return k;
}

}  // namespace

std::uint64_t UniformRng::mix_seed(std::uint64_t seed) {
  return fmix64(seed ^ 0x6A09E667F3BCC908ULL);
}

UniformRng UniformRng::for_stream(std::uint64_t seed, std::uint64_t step, std::uint64_t stream) {
  std::uint64_t k = mix_seed(seed);
  k = fmix64(k ^ (step * 0xBB67AE8584CAA73BULL + 0x3C6EF372FE94F82BULL));
  k = fmix64(k ^ (stream * 0xA54FF53A5F1D36F1ULL + 0x510E527FADE682D1ULL));
  return UniformRng(k, true);
}

}  // namespace mc2a
