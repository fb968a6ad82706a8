#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace voxfuse {

// Deterministic xoshiro256** stream. std::mt19937 would also do, but its
// distributions are implementation-defined; everything here is pinned so
// checkpointed runs replay identically on any platform.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) { reseed(seed); }

    void reseed(uint64_t seed);

    uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();

    // Uniform integer in [0, n), n >= 1.
    uint64_t below(uint64_t n);

    // Standard normal via Box-Muller; a pair is drawn each call and the
    // second component discarded, which keeps the state a pure function of
    // the call count.
    double normal();

    // Serialized state: four hex words. Round-trips exactly.
    std::string state() const;
    void restore(const std::string& state);

private:
    std::array<uint64_t, 4> s_{};
};

// Stateless spatially-indexed normal stream: the value is a pure function of
// (seed, channel, x, y, z). Overlapping generation tiles therefore see the
// same noise as a single full pass.
double spatial_normal(uint64_t seed, int64_t channel, int64_t x, int64_t y, int64_t z);

uint64_t splitmix64(uint64_t x);

} // namespace voxfuse
