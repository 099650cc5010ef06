#pragma once

#include <cstdint>
#include <initializer_list>

#include "icecontour/stats.hpp"

namespace icecontour {

// Counter-based splittable generator. A stream is identified by a 64-bit key
// derived from the root seed plus a path of integers (stage, region, year,
// sample index, ...). Draws depend only on (key, counter), so results are
// independent of thread count and evaluation order across streams.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ kPhi)) {}

    // Child stream; derivation is order-sensitive in the path components.
    Rng derive(std::initializer_list<std::uint64_t> path) const {
        Rng child(*this);
        for (std::uint64_t p : path) child.key_ = mix(child.key_ ^ mix(p + kPhi));
        child.ctr_ = 0;
        return child;
    }

    std::uint64_t next_u64() {
        ctr_ += kPhi;
        return mix(key_ ^ ctr_);
    }

    // Uniform on the open interval (0,1); never returns an endpoint.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_normal() { return stats::norm_quantile(next_uniform()); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  private:
    static constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ull;

    // splitmix64 finalizer
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

} // namespace icecontour
