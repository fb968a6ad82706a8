#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scale.hpp"
#include "volgrid.hpp"

namespace voxfuse {

// One convolution stage of a network plan. Spatial size maps:
//   conv:            out = (in + 2*padding - kernel)/stride + 1
//   transposed conv: out = stride*(in - 1) - 2*padding + kernel
enum class LayerKind { conv, transposed_conv };
enum class Activation { none, relu, leaky_relu, softmax };

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int64_t in_channels = 0;
    int64_t out_channels = 0;
    int64_t kernel = 1;
    int64_t stride = 1;
    int64_t padding = 0;
    Activation activation = Activation::none;

    int64_t out_extent(int64_t in) const;
    // Closed input index interval required to produce output interval [o0, o1].
    std::array<int64_t, 2> input_interval(int64_t o0, int64_t o1) const;
};

// Structural family, bucketed by scale factor: A for sf in (4,8], B for
// (2,4], C for [1,2].
enum class GenVariant { A, B, C };

struct GeneratorSpec {
    ScaleFactor scale = ScaleFactor::from_input_side(16);
    GenVariant variant = GenVariant::B;
    int64_t lr_channels = 0;    // phases in the low-res input
    int64_t noise_channels = 1; // appended along the channel axis
    int64_t out_channels = 0;   // phases in the high-res output
    std::vector<LayerSpec> layers; // 3D convs; last layer ends in channel softmax

    int64_t in_channels() const { return lr_channels + noise_channels; }
    int64_t output_extent(int64_t in) const;
    // LR input interval needed to compute output interval [o0, o1] exactly.
    std::array<int64_t, 2> input_interval(int64_t o0, int64_t o1) const;
    int64_t parameter_count() const;
};

// widths: hidden output channels from the input end; defaults to
// {512, 256, 128, 64}; the final layer always maps to n_hr_phases.
GeneratorSpec build_generator_spec(ScaleFactor sf, int64_t n_lr_phases, int64_t n_hr_phases,
                                   int64_t noise_channels,
                                   std::vector<int64_t> widths = {});

struct CriticSpec {
    Orientation orientation = Orientation::isotropic;
    int64_t in_channels = 0;
    int64_t input_side = 56;
    std::vector<LayerSpec> layers; // 2D convs ending in a single scalar

    int64_t parameter_count() const;
};

// One critic (isotropic) or three (xy, yz, xz). widths default to
// {64, 128, 256, 512}, extended by repetition for small inputs needing more
// halvings.
std::vector<CriticSpec> build_critic_specs(int64_t n_hr_phases, bool anisotropic,
                                           int64_t input_side = 56,
                                           std::vector<int64_t> widths = {});

// Training geometry: crop `crop_layers` sites from each face of a cube of
// side `cube_side`, then slice the remainder into axis-aligned planes.
struct CropSlicePlan {
    int64_t cube_side = 64;
    int64_t crop_layers = 4;
    int64_t cropped_side = 56;
    int64_t patches_per_axis = 56;
    int64_t patch_count = 168; // 3 * cropped_side
};

CropSlicePlan crop_and_slice_plan(int64_t cube_side, int64_t crop_layers = 4);

// Slices a cropped cube of one-hot values into orientation-tagged 2D patches.
// Patch order: all xy planes (z index ascending), then yz (x ascending), then
// xz (y ascending).
struct SlicePatch {
    Orientation orientation = Orientation::xy;
    int64_t plane_index = 0;
};

std::vector<SlicePatch> slice_schedule(const CropSlicePlan& plan);

// Canonical textual signature of the architecture pair; hashed (FNV-1a 64)
// into checkpoints so incompatible weights are rejected on load.
std::string spec_signature(const GeneratorSpec& gen, const std::vector<CriticSpec>& critics);
uint64_t fnv1a64(const std::string& s);

} // namespace voxfuse
