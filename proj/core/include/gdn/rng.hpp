#pragma once

#include <cstdint>
#include <random>

namespace gdn {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive well-separated seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Independent child stream identified by (seed, stream tag, index).
/// Sample i of a dataset always gets the same stream regardless of how
/// many other samples were drawn before it.
Rng child_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

namespace streams {
inline constexpr std::uint64_t kFilter = 1;
inline constexpr std::uint64_t kGraph = 2;
inline constexpr std::uint64_t kSignal = 3;
inline constexpr std::uint64_t kInit = 4;
inline constexpr std::uint64_t kShuffle = 5;
inline constexpr std::uint64_t kSplit = 6;
inline constexpr std::uint64_t kRepeat = 7;
inline constexpr std::uint64_t kSizeGen = 8;
}  // namespace streams

}  // namespace gdn
