#include "gdn/rng.hpp"

namespace gdn {

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng child_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t s = mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  return Rng(seq);
}

}  // namespace gdn
