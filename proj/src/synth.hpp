#pragma once

#include "checkpoint.hpp"
#include "volgrid.hpp"

namespace voxfuse {

// Torch-free generator evaluator. Every output value is accumulated in one
// fixed order (input channel, then kernel z/y/x taps ascending) against
// globally-indexed source positions, so evaluating any sub-box of the output
// yields bit-identical values to a single pass over the whole volume. Sites
// the network would read outside the input are materialized zeros, matching
// the zero padding of a whole-volume pass.
class PlainGenerator {
public:
    PlainGenerator(GeneratorSpec spec, std::vector<TensorBlob> params);
    static PlainGenerator from_checkpoint(const Checkpoint& cp);

    const GeneratorSpec& spec() const { return spec_; }

    // Raw (uncropped) output for the whole low-res field. Noise channels are
    // filled from a stateless spatially-indexed stream keyed on noise_seed
    // and the global low-res coordinate.
    OneHotField run(const OneHotField& lr, uint64_t noise_seed) const;

    // Output restricted to the global output box [lo, hi) per axis.
    OneHotField run_box(const OneHotField& lr, uint64_t noise_seed,
                        std::array<int64_t, 3> lo, std::array<int64_t, 3> hi) const;

private:
    GeneratorSpec spec_;
    std::vector<TensorBlob> params_; // weight, bias per layer
};

// Layers removed from every face of a raw output when boundary cropping is
// on: the output-voxel equivalent of one low-res voxel, rounded up.
int64_t boundary_crop_layers(ScaleFactor sf);

struct SynthOptions {
    uint64_t seed = 0;
    bool crop_boundary = true;
    // Low-res tile side for piecewise generation (0 = single pass). Must be
    // a multiple of the scale denominator.
    int64_t tile_lr = 0;
};

// Raw probability field (no cropping); memory scales with output volume.
OneHotField generate_probabilities(const Checkpoint& cp, const PhaseVolume& lr, uint64_t seed,
                                   int64_t tile_lr = 0);

// Argmax-decoded volume, cropped per options, voxel pitch divided by sf.
PhaseVolume generate_volume(const Checkpoint& cp, const PhaseVolume& lr,
                            const SynthOptions& options);

// One volume per seed, identical settings otherwise.
std::vector<PhaseVolume> generate_ensemble(const Checkpoint& cp, const PhaseVolume& lr,
                                           const std::vector<uint64_t>& seeds,
                                           bool crop_boundary = true, int64_t tile_lr = 0);

} // namespace voxfuse
