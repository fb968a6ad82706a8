#include "scale.hpp"

#include <cmath>
#include <numeric>

namespace voxfuse {

ScaleFactor ScaleFactor::from_input_side(int64_t d) {
    require(d >= 8 && d <= 64, Errc::invalid_argument,
            "training input side must lie in [8, 64], got " + std::to_string(d));
    ScaleFactor sf;
    const int64_t g = std::gcd(int64_t(64), d);
    sf.num_ = 64 / g;
    sf.den_ = d / g;
    sf.input_side_ = d;
    return sf;
}

ScaleFactor ScaleFactor::from_value(double v) {
    require(v > 0.0, Errc::invalid_argument, "scale factor must be positive");
    const double d_real = 64.0 / v;
    const int64_t d = std::llround(d_real);
    require(d >= 8 && d <= 64 && std::abs(64.0 / double(d) - v) < 1e-9, Errc::invalid_argument,
            "scale factor " + std::to_string(v) +
                " is not 64/d for an integer input side d in [8, 64]");
    return from_input_side(d);
}

int64_t ScaleFactor::scale_up(int64_t in) const {
    require(in > 0 && in % den_ == 0, Errc::invalid_argument,
            "extent " + std::to_string(in) + " is not a multiple of " + std::to_string(den_) +
                ", cannot scale exactly");
    return in / den_ * num_;
}

int64_t ScaleFactor::scale_down(int64_t out) const {
    require(out > 0 && out % num_ == 0, Errc::invalid_argument,
            "extent " + std::to_string(out) + " is not a multiple of " + std::to_string(num_) +
                ", cannot downscale exactly");
    return out / num_ * den_;
}

int64_t ScaleFactor::usable_high_res(int64_t h) const {
    const int64_t used = h / num_ * num_;
    require(used >= num_, Errc::invalid_argument,
            "extent " + std::to_string(h) + " too small for scale factor " +
                std::to_string(value()));
    return used;
}

} // namespace voxfuse
