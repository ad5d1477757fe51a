#include "banditpde/rng.hpp"

#include "banditpde/normal.hpp"

namespace banditpde {
namespace rng {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& ctr, const std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> ctr = counter;
    std::array<std::uint32_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        round_once(ctr, k);
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return ctr;
}

std::uint64_t bits64(std::uint64_t seed, std::uint64_t replication, std::uint32_t period,
                     std::uint32_t stream, std::uint32_t lane) {
    const std::array<std::uint32_t, 4> counter = {
        static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32),
        period, (stream << 8) ^ lane};
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed),
                                              static_cast<std::uint32_t>(seed >> 32)};
    const auto out = philox4x32(counter, key);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double uniform(std::uint64_t seed, std::uint64_t replication, std::uint32_t period,
               std::uint32_t stream, std::uint32_t lane) {
    const std::uint64_t b = bits64(seed, replication, period, stream, lane);
    // 53-bit mantissa, centered in the cell so 0 and 1 are unreachable.
    return (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t replication, std::uint32_t period,
              std::uint32_t stream, std::uint32_t lane) {
    return norm_quantile(uniform(seed, replication, period, stream, lane));
}

}  // namespace rng
}  // namespace banditpde
