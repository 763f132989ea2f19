#pragma once

#include <array>
#include <cstdint>

namespace lmmselect {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                         std::array<std::uint32_t, 2> key);

/// Named sub-streams of one replicate. Values are part of the reproducibility
/// contract; never renumber.
enum class StreamTag : std::uint32_t {
    FixedDesign = 1,
    RandomDesign = 2,
    RandomEffects = 3,
    Noise = 4,
    Support = 5,
    Membership = 6,
    Profiles = 7,
};

/// Counter-mode stream: key = master seed, counter = (block, replicate, tag).
/// Streams for distinct (replicate, tag) pairs never overlap.
class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint32_t replicate, StreamTag tag);
    RandomStream(std::uint64_t master_seed, std::uint32_t replicate, std::uint32_t tag);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on (0, 1).
    double uniform_open();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();
    /// Uniform integer in [0, bound); bound must be positive.
    std::uint32_t below(std::uint32_t bound);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int used_ = 4;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

} // namespace lmmselect
