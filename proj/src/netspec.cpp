#include "netspec.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace voxfuse {

int64_t LayerSpec::out_extent(int64_t in) const {
    require(in >= 1, Errc::invalid_argument, "layer input extent must be positive");
    if (kind == LayerKind::transposed_conv) return stride * (in - 1) - 2 * padding + kernel;
    const int64_t span = in + 2 * padding - kernel;
    require(span >= 0, Errc::invalid_argument,
            "conv input extent " + std::to_string(in) + " smaller than kernel " +
                std::to_string(kernel));
    return span / stride + 1; // flooring, as usual for strided convolutions
}

std::array<int64_t, 2> LayerSpec::input_interval(int64_t o0, int64_t o1) const {
    if (kind == LayerKind::conv) return {o0 * stride - padding, o1 * stride - padding + kernel - 1};
    // transposed: output o draws on inputs i with s*i - p <= o <= s*i - p + k - 1
    auto ceil_div = [](int64_t a, int64_t b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); };
    auto floor_div = [](int64_t a, int64_t b) { return a >= 0 ? a / b : -(((-a) + b - 1) / b); };
    const int64_t lo = ceil_div(o0 + padding - kernel + 1, stride);
    const int64_t hi = floor_div(o1 + padding, stride);
    return {lo, hi};
}

int64_t GeneratorSpec::output_extent(int64_t in) const {
    int64_t e = in;
    for (const auto& l : layers) e = l.out_extent(e);
    return e;
}

std::array<int64_t, 2> GeneratorSpec::input_interval(int64_t o0, int64_t o1) const {
    std::array<int64_t, 2> iv{o0, o1};
    for (auto it = layers.rbegin(); it != layers.rend(); ++it)
        iv = it->input_interval(iv[0], iv[1]);
    return iv;
}

namespace {

int64_t conv_params(const LayerSpec& l, int dims) {
    int64_t k = 1;
    for (int i = 0; i < dims; ++i) k *= l.kernel;
    return k * l.in_channels * l.out_channels + l.out_channels;
}

} // namespace

int64_t GeneratorSpec::parameter_count() const {
    int64_t n = 0;
    for (const auto& l : layers) n += conv_params(l, 3);
    return n;
}

int64_t CriticSpec::parameter_count() const {
    int64_t n = 0;
    for (const auto& l : layers) n += conv_params(l, 2);
    return n;
}

GeneratorSpec build_generator_spec(ScaleFactor sf, int64_t n_lr_phases, int64_t n_hr_phases,
                                   int64_t noise_channels, std::vector<int64_t> widths) {
    require(n_lr_phases >= 1 && n_hr_phases >= 1, Errc::invalid_argument,
            "phase channel counts must be at least 1");
    require(noise_channels >= 0, Errc::invalid_argument, "noise channel count cannot be negative");
    if (widths.empty()) widths = {512, 256, 128, 64};
    for (int64_t w : widths)
        require(w >= 1, Errc::invalid_argument, "generator widths must be positive");

    GeneratorSpec spec;
    spec.scale = sf;
    spec.lr_channels = n_lr_phases;
    spec.noise_channels = noise_channels;
    spec.out_channels = n_hr_phases;

    const double v = sf.value();
    int64_t nominal = 0;
    if (v > 4.0) {
        spec.variant = GenVariant::A;
        nominal = 5;
    } else if (v > 2.0) {
        spec.variant = GenVariant::B;
        nominal = 4;
    } else {
        spec.variant = GenVariant::C;
        nominal = 4;
    }

    // Spatial plan: log2(num) doubling stages, stride-1 refinements, and a
    // trailing stride-den reduction when the factor is rational. Every stage
    // multiplies the extent exactly, so the composed plan is out = sf * in
    // for any input. Exotic factors may exceed the nominal stage count; the
    // size contract wins.
    int64_t ups = 0;
    for (int64_t p = sf.num(); p > 1; p /= 2) ++ups;
    const int64_t down = sf.den() > 1 ? 1 : 0;
    const int64_t refines = std::max<int64_t>(1, nominal - ups - down);
    const int64_t total = ups + refines + down;

    int64_t in_ch = spec.in_channels();
    for (int64_t i = 0; i < total; ++i) {
        LayerSpec l;
        const bool last = i == total - 1;
        l.in_channels = in_ch;
        l.out_channels = last ? n_hr_phases
                              : widths[size_t(std::min<int64_t>(i, int64_t(widths.size()) - 1))];
        if (i < ups) {
            l.kind = LayerKind::transposed_conv;
            l.kernel = 4;
            l.stride = 2;
            l.padding = 1; // out = 2*in
        } else if (i < ups + refines) {
            l.kind = LayerKind::transposed_conv;
            l.kernel = 3;
            l.stride = 1;
            l.padding = 1; // out = in
        } else {
            l.kind = LayerKind::conv;
            l.kernel = sf.den();
            l.stride = sf.den();
            l.padding = 0; // out = in / den
        }
        l.activation = last ? Activation::softmax : Activation::relu;
        spec.layers.push_back(l);
        in_ch = l.out_channels;
    }

    // Symbolic check of the size contract out = sf * in: every stage maps
    // extent e -> (a*e + b) with exact integers, composed over the plan.
    int64_t a_num = 1, a_den = 1, b_num = 0; // extent map e -> (a_num/a_den)*e + b_num/a_den
    for (const auto& l : spec.layers) {
        if (l.kind == LayerKind::transposed_conv) {
            // e -> s*e + (k - 2p - s)
            b_num = l.stride * b_num + (l.kernel - 2 * l.padding - l.stride) * a_den;
            a_num *= l.stride;
        } else {
            // e -> (e + 2p - k)/s + 1, exact only when divisible; here k == s, p == 0
            require(l.kernel == l.stride && l.padding == 0, Errc::internal,
                    "generator reduction stage must have kernel == stride, padding 0");
            a_den *= l.stride;
            b_num += (l.stride - l.kernel) * 1; // zero by construction
        }
    }
    require(a_num * sf.den() == a_den * sf.num() && b_num == 0, Errc::internal,
            "generator layer plan does not compose to the exact scale factor");

    // And concretely for the canonical training size.
    const int64_t d = sf.input_side();
    require(spec.output_extent(d) == 64, Errc::internal,
            "generator plan maps " + std::to_string(d) + " to " +
                std::to_string(spec.output_extent(d)) + ", expected 64");
    return spec;
}

std::vector<CriticSpec> build_critic_specs(int64_t n_hr_phases, bool anisotropic,
                                           int64_t input_side, std::vector<int64_t> widths) {
    require(n_hr_phases >= 2, Errc::invalid_argument, "critic needs at least two phase channels");
    require(input_side >= 4, Errc::invalid_argument, "critic input side must be at least 4");
    if (widths.empty()) widths = {64, 128, 256, 512};
    for (int64_t w : widths)
        require(w >= 1, Errc::invalid_argument, "critic widths must be positive");

    CriticSpec base;
    base.in_channels = n_hr_phases;
    base.input_side = input_side;
    int64_t side = input_side;
    int64_t in_ch = n_hr_phases;
    size_t wi = 0;
    while (side > 3) {
        LayerSpec l;
        l.kind = LayerKind::conv;
        l.in_channels = in_ch;
        l.out_channels = widths[std::min(wi, widths.size() - 1)];
        l.kernel = 4;
        l.stride = 2;
        l.padding = 1; // out = floor(side/2)
        l.activation = Activation::leaky_relu;
        base.layers.push_back(l);
        in_ch = l.out_channels;
        side = side / 2;
        ++wi;
    }
    LayerSpec last;
    last.kind = LayerKind::conv;
    last.in_channels = in_ch;
    last.out_channels = 1;
    last.kernel = side;
    last.stride = 1;
    last.padding = 0; // side -> 1
    last.activation = Activation::none;
    base.layers.push_back(last);

    // Verify the collapse to one scalar.
    int64_t e = input_side;
    for (const auto& l : base.layers) e = l.out_extent(e);
    require(e == 1, Errc::internal, "critic plan does not collapse to a single scalar");

    std::vector<CriticSpec> out;
    if (!anisotropic) {
        base.orientation = Orientation::isotropic;
        out.push_back(base);
    } else {
        for (Orientation o : {Orientation::xy, Orientation::yz, Orientation::xz}) {
            CriticSpec c = base;
            c.orientation = o;
            out.push_back(std::move(c));
        }
    }
    return out;
}

CropSlicePlan crop_and_slice_plan(int64_t cube_side, int64_t crop_layers) {
    require(cube_side >= 1 && crop_layers >= 0, Errc::invalid_argument,
            "crop/slice sizes must be non-negative");
    CropSlicePlan plan;
    plan.cube_side = cube_side;
    plan.crop_layers = crop_layers;
    plan.cropped_side = cube_side - 2 * crop_layers;
    require(plan.cropped_side >= 1, Errc::invalid_argument,
            "cropping " + std::to_string(crop_layers) + " layers per face exhausts a side of " +
                std::to_string(cube_side));
    plan.patches_per_axis = plan.cropped_side;
    plan.patch_count = 3 * plan.cropped_side;
    return plan;
}

std::vector<SlicePatch> slice_schedule(const CropSlicePlan& plan) {
    std::vector<SlicePatch> patches;
    patches.reserve(size_t(plan.patch_count));
    for (Orientation o : {Orientation::xy, Orientation::yz, Orientation::xz})
        for (int64_t i = 0; i < plan.cropped_side; ++i) patches.push_back({o, i});
    return patches;
}

namespace {

void describe_layers(std::ostringstream& os, const std::vector<LayerSpec>& layers) {
    for (const auto& l : layers) {
        os << (l.kind == LayerKind::conv ? "c" : "t") << l.in_channels << ">" << l.out_channels
           << "k" << l.kernel << "s" << l.stride << "p" << l.padding << "a" << int(l.activation)
           << ";";
    }
}

} // namespace

std::string spec_signature(const GeneratorSpec& gen, const std::vector<CriticSpec>& critics) {
    std::ostringstream os;
    os << "g:sf=" << gen.scale.num() << "/" << gen.scale.den() << ",lr=" << gen.lr_channels
       << ",nz=" << gen.noise_channels << ",hr=" << gen.out_channels << ",v="
       << (gen.variant == GenVariant::A ? 'A' : gen.variant == GenVariant::B ? 'B' : 'C') << "|";
    describe_layers(os, gen.layers);
    for (const auto& c : critics) {
        os << "|d:" << orientation_name(c.orientation) << ",in=" << c.in_channels
           << ",side=" << c.input_side << "|";
        describe_layers(os, c.layers);
    }
    return os.str();
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace voxfuse
