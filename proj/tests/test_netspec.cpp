#include <doctest.h>

#include <set>

#include "error.hpp"
#include "netspec.hpp"

using namespace voxfuse;

TEST_CASE("generator variants bucket by scale factor") {
    const GeneratorSpec a = build_generator_spec(ScaleFactor::from_input_side(8), 2, 3, 1);
    CHECK(a.variant == GenVariant::A); // sf 8
    const GeneratorSpec b = build_generator_spec(ScaleFactor::from_input_side(16), 2, 3, 1);
    CHECK(b.variant == GenVariant::B); // sf 4
    const GeneratorSpec c = build_generator_spec(ScaleFactor::from_input_side(32), 2, 3, 1);
    CHECK(c.variant == GenVariant::C); // sf 2
    const GeneratorSpec r = build_generator_spec(ScaleFactor::from_input_side(40), 2, 3, 1);
    CHECK(r.variant == GenVariant::C); // sf 1.6
}

TEST_CASE("generator maps the canonical input side to 64 for every factor") {
    for (int64_t d = 8; d <= 64; ++d) {
        const ScaleFactor sf = ScaleFactor::from_input_side(d);
        const GeneratorSpec spec = build_generator_spec(sf, 2, 3, 1);
        CHECK(spec.output_extent(d) == 64);
        // The plan is linear in the extent: twice the input, twice the output.
        if (d * 2 <= 64) CHECK(spec.output_extent(d * 2) == 128);
    }
}

TEST_CASE("generator channel plumbing and activations") {
    const GeneratorSpec spec = build_generator_spec(ScaleFactor::from_input_side(16), 2, 3, 2,
                                                    {16, 8});
    CHECK(spec.in_channels() == 4); // 2 phases + 2 noise
    CHECK(spec.layers.front().in_channels == 4);
    CHECK(spec.layers.back().out_channels == 3);
    CHECK(spec.layers.back().activation == Activation::softmax);
    for (size_t i = 0; i + 1 < spec.layers.size(); ++i)
        CHECK(spec.layers[i].activation == Activation::relu);
    // sf=4: two doubling stages (k4 s2 p1), then stride-1 refinements.
    CHECK(spec.layers[0].kind == LayerKind::transposed_conv);
    CHECK(spec.layers[0].stride == 2);
    CHECK(spec.layers[1].stride == 2);
    for (size_t i = 2; i < spec.layers.size(); ++i) CHECK(spec.layers[i].stride == 1);
}

TEST_CASE("rational factors end in an exact reduction stage") {
    const ScaleFactor sf = ScaleFactor::from_input_side(40); // 8/5
    const GeneratorSpec spec = build_generator_spec(sf, 2, 2, 1);
    const LayerSpec& last = spec.layers.back();
    CHECK(last.kind == LayerKind::conv);
    CHECK(last.kernel == 5);
    CHECK(last.stride == 5);
    CHECK(last.padding == 0);
    CHECK(spec.output_extent(40) == 64);
    CHECK(spec.output_extent(10) == 16);
}

TEST_CASE("input intervals cover exactly the receptive field") {
    const GeneratorSpec spec = build_generator_spec(ScaleFactor::from_input_side(16), 2, 3, 1);
    // Whole output needs the whole input plus padding halo.
    const auto iv = spec.input_interval(0, spec.output_extent(8) - 1);
    CHECK(iv[0] <= 0);
    CHECK(iv[1] >= 7);
    // A single output site needs a bounded window.
    const auto single = spec.input_interval(16, 16);
    CHECK(single[1] - single[0] + 1 >= 1);
    CHECK(single[1] - single[0] + 1 <= 16);
}

TEST_CASE("critics collapse their input to one scalar") {
    const auto critics = build_critic_specs(3, false, 56);
    REQUIRE(critics.size() == 1);
    const CriticSpec& c = critics[0];
    CHECK(c.orientation == Orientation::isotropic);
    CHECK(c.in_channels == 3);
    int64_t side = 56;
    for (const auto& l : c.layers) side = l.out_extent(side);
    CHECK(side == 1);
    CHECK(c.layers.back().activation == Activation::none);
    for (size_t i = 0; i + 1 < c.layers.size(); ++i) {
        CHECK(c.layers[i].activation == Activation::leaky_relu);
        CHECK(c.layers[i].kernel == 4);
        CHECK(c.layers[i].stride == 2);
    }
}

TEST_CASE("anisotropic mode builds one critic per orientation") {
    const auto critics = build_critic_specs(3, true, 40);
    REQUIRE(critics.size() == 3);
    CHECK(critics[0].orientation == Orientation::xy);
    CHECK(critics[1].orientation == Orientation::yz);
    CHECK(critics[2].orientation == Orientation::xz);
    for (const auto& c : critics) {
        CHECK(c.layers.size() == critics[0].layers.size());
        CHECK(c.input_side == 40);
    }
}

TEST_CASE("crop and slice: 64 cube, 4 layers off, 168 patches of 56") {
    const CropSlicePlan plan = crop_and_slice_plan(64, 4);
    CHECK(plan.cropped_side == 56);
    CHECK(plan.patches_per_axis == 56);
    CHECK(plan.patch_count == 168);

    const auto schedule = slice_schedule(plan);
    CHECK(int64_t(schedule.size()) == plan.patch_count);
    int64_t xy = 0, yz = 0, xz = 0;
    for (const auto& patch : schedule) {
        if (patch.orientation == Orientation::xy) ++xy;
        if (patch.orientation == Orientation::yz) ++yz;
        if (patch.orientation == Orientation::xz) ++xz;
        CHECK(patch.plane_index >= 0);
        CHECK(patch.plane_index < plan.cropped_side);
    }
    CHECK(xy == 56);
    CHECK(yz == 56);
    CHECK(xz == 56);

    CHECK_THROWS_AS((void)crop_and_slice_plan(64, 32), Error); // nothing left to slice
}

TEST_CASE("spec signatures separate different architectures") {
    const GeneratorSpec g1 = build_generator_spec(ScaleFactor::from_input_side(16), 2, 3, 1);
    const GeneratorSpec g2 = build_generator_spec(ScaleFactor::from_input_side(16), 2, 3, 0);
    const auto c1 = build_critic_specs(3, false, 56);
    const auto c2 = build_critic_specs(3, true, 56);

    std::set<uint64_t> hashes{fnv1a64(spec_signature(g1, c1)), fnv1a64(spec_signature(g2, c1)),
                              fnv1a64(spec_signature(g1, c2))};
    CHECK(hashes.size() == 3);
    CHECK(fnv1a64(spec_signature(g1, c1)) == fnv1a64(spec_signature(g1, c1)));
}

TEST_CASE("parameter counts follow the layer dimensions") {
    GeneratorSpec g;
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.in_channels = 2;
    l.out_channels = 3;
    l.kernel = 3;
    g.layers.push_back(l);
    CHECK(g.parameter_count() == 2 * 3 * 27 + 3);

    CriticSpec c;
    c.layers.push_back(l);
    CHECK(c.parameter_count() == 2 * 3 * 9 + 3);
}
