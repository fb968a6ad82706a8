#include <doctest.h>

#include "scale.hpp"

using namespace voxfuse;

TEST_CASE("scale factors reduce to power-of-two over odd") {
    const ScaleFactor four = ScaleFactor::from_input_side(16);
    CHECK(four.num() == 4);
    CHECK(four.den() == 1);
    CHECK(four.value() == doctest::Approx(4.0));
    CHECK(four.is_integer());

    const ScaleFactor eight = ScaleFactor::from_input_side(8);
    CHECK(eight.num() == 8);
    CHECK(eight.den() == 1);

    const ScaleFactor identity = ScaleFactor::from_input_side(64);
    CHECK(identity.num() == 1);
    CHECK(identity.den() == 1);

    // 64/40 = 8/5: power-of-two numerator, odd denominator.
    const ScaleFactor rational = ScaleFactor::from_input_side(40);
    CHECK(rational.num() == 8);
    CHECK(rational.den() == 5);
    CHECK(rational.value() == doctest::Approx(1.6));
    CHECK_FALSE(rational.is_integer());
}

TEST_CASE("scale factor round trips through its value") {
    for (int64_t d = 8; d <= 64; ++d) {
        const ScaleFactor sf = ScaleFactor::from_input_side(d);
        CHECK(sf.input_side() == d);
        const ScaleFactor back = ScaleFactor::from_value(sf.value());
        CHECK(back.num() == sf.num());
        CHECK(back.den() == sf.den());
    }
}

TEST_CASE("input side bounds are enforced") {
    CHECK_THROWS_AS((void)ScaleFactor::from_input_side(7), Error);
    CHECK_THROWS_AS((void)ScaleFactor::from_input_side(65), Error);
    CHECK_THROWS_AS((void)ScaleFactor::from_input_side(0), Error);
    CHECK_THROWS_AS((void)ScaleFactor::from_value(5.0), Error); // 64/5 has no integer side
    CHECK_THROWS_AS((void)ScaleFactor::from_value(-1.0), Error);
}

TEST_CASE("scaling helpers use the exact rational") {
    const ScaleFactor sf = ScaleFactor::from_input_side(40); // 8/5
    CHECK(sf.scale_up(40) == 64);
    CHECK(sf.scale_down(64) == 40);
    CHECK(sf.scale_up(5) == 8);
}
