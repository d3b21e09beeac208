#pragma once

#include <cmath>
#include <cstdint>

namespace skld {

namespace detail {

// SplitMix64 finalizer; statistically solid and cheap.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline double to_unit(std::uint64_t x) {
    // (0, 1), never exactly 0, so log() below is safe.
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Counter-based Gaussian stream. Every draw is a pure function of
/// (master_seed, replica, step, mode, component): replicas can run in
/// parallel and reruns are bit-identical. Each counter tuple is mixed
/// through a SplitMix64 chain and fed to a Box-Muller pair.
class NoisePlan {
  public:
    NoisePlan(std::uint64_t master_seed, std::uint64_t replica_id)
        : base_(detail::splitmix64(detail::splitmix64(master_seed) ^ replica_id)) {}

    std::uint64_t replica_base() const { return base_; }

    double normal(std::uint64_t step, std::uint64_t mode, std::uint64_t component = 0) const {
        using detail::splitmix64;
        std::uint64_t h = splitmix64(base_ ^ step);
        h = splitmix64(h ^ (mode * 0xD6E8FEB86659FD93ULL));
        h = splitmix64(h ^ (component * 0xA5A5A5A5A5A5A5A5ULL));
        const double u1 = detail::to_unit(h);
        const double u2 = detail::to_unit(splitmix64(h ^ 0x6A09E667F3BCC909ULL));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

  private:
    std::uint64_t base_;
};

}  // namespace skld
