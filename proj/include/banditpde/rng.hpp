#pragma once

#include <array>
#include <cstdint>

namespace banditpde {

// Counter-based random numbers (Philox4x32-10). Every draw is a pure
// function of (seed, replication, period, stream, lane), so replications
// can run in any order on any number of workers and still reproduce
// bit-for-bit. Two policies given the same seed see the same reward
// stream: that is the common-random-numbers property the simulator
// relies on.
namespace rng {

// Fixed stream ids; keeping them apart means e.g. a policy that skips its
// randomization draw does not shift the reward stream.
inline constexpr std::uint32_t kStreamReward = 0;
inline constexpr std::uint32_t kStreamPolicy = 1;
inline constexpr std::uint32_t kStreamPrior = 2;
inline constexpr std::uint32_t kStreamScratch = 3;

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

// One 64-bit word at a keyed counter.
std::uint64_t bits64(std::uint64_t seed, std::uint64_t replication, std::uint32_t period,
                     std::uint32_t stream, std::uint32_t lane = 0);

// Uniform on (0,1); never returns an endpoint.
double uniform(std::uint64_t seed, std::uint64_t replication, std::uint32_t period,
               std::uint32_t stream, std::uint32_t lane = 0);

// Standard normal via the inverse CDF of the uniform above.
double normal(std::uint64_t seed, std::uint64_t replication, std::uint32_t period,
              std::uint32_t stream, std::uint32_t lane = 0);

}  // namespace rng
}  // namespace banditpde
