#pragma once

#include <cstdint>

#include "error.hpp"

namespace voxfuse {

// Super-resolution scale factor, kept as an exact rational num/den. Valid
// factors are 64/d for an integer training input side d in [8, 64], so the
// reduced numerator is a power of two and the denominator is odd.
class ScaleFactor {
public:
    static ScaleFactor from_input_side(int64_t d);
    // Accepts a real value that coincides with some 64/d (1e-9 slack).
    static ScaleFactor from_value(double sf);

    int64_t num() const { return num_; }
    int64_t den() const { return den_; }
    int64_t input_side() const { return input_side_; } // d with sf = 64/d
    double value() const { return double(num_) / double(den_); }
    bool is_integer() const { return den_ == 1; }

    // in * sf, requiring exact divisibility.
    int64_t scale_up(int64_t in) const;
    // out / sf, requiring exact divisibility.
    int64_t scale_down(int64_t out) const;
    // Largest usable prefix of a high-res extent: the biggest h' <= h with
    // h' / sf integral.
    int64_t usable_high_res(int64_t h) const;

private:
    int64_t num_ = 1, den_ = 1, input_side_ = 64;
};

} // namespace voxfuse
