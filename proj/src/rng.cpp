#include "rng.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "error.hpp"

namespace voxfuse {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

// 53-bit mantissa uniform in [0,1).
inline double to_unit(uint64_t u) { return double(u >> 11) * 0x1.0p-53; }

} // namespace

void Rng::reseed(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) {
        x = splitmix64(x);
        w = x;
    }
    // all-zero state is invalid for xoshiro
    if (s_[0] == 0 && s_[1] == 0 && s_[2] == 0 && s_[3] == 0) s_[0] = 1;
}

uint64_t Rng::next_u64() {
    uint64_t result = rotl(s_[1] * 5, 7) * 9;
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return to_unit(next_u64()); }

uint64_t Rng::below(uint64_t n) {
    require(n >= 1, Errc::invalid_argument, "Rng::below requires n >= 1");
    // rejection sampling for an unbiased bounded draw
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t u;
    do {
        u = next_u64();
    } while (u >= limit);
    return u % n;
}

double Rng::normal() {
    // Box-Muller; u1 is kept away from zero so the log is finite.
    double u1 = (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::state() const {
    char buf[4 * 17 + 1];
    std::snprintf(buf, sizeof buf, "%016llx %016llx %016llx %016llx",
                  (unsigned long long)s_[0], (unsigned long long)s_[1],
                  (unsigned long long)s_[2], (unsigned long long)s_[3]);
    return buf;
}

void Rng::restore(const std::string& state) {
    unsigned long long w[4];
    int n = std::sscanf(state.c_str(), "%llx %llx %llx %llx", &w[0], &w[1], &w[2], &w[3]);
    require(n == 4, Errc::format, "bad rng state string: " + state);
    for (int i = 0; i < 4; ++i) s_[i] = w[i];
}

double spatial_normal(uint64_t seed, int64_t channel, int64_t x, int64_t y, int64_t z) {
    uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ (uint64_t)channel);
    h = splitmix64(h ^ (uint64_t)x);
    h = splitmix64(h ^ (uint64_t)y);
    h = splitmix64(h ^ (uint64_t)z);
    uint64_t h2 = splitmix64(h);
    double u1 = (double(h >> 11) + 0.5) * 0x1.0p-53;
    double u2 = double(h2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace voxfuse
