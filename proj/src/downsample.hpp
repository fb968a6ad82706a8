#pragma once

#include <torch/torch.h>

#include "degrade.hpp"
#include "scale.hpp"

namespace voxfuse {

// Differentiable counterpart of simulate_low_res, used inside the training
// loop to compare a generated probability field against its low-res source.
// Every step (channel merge, blur, resample, site pick, sharpening softmax)
// is expressed through autograd-friendly tensor ops.
struct DownsampleSpec {
    ScaleFactor scale;
    DegradeMode mode = DegradeMode::under_resolved;
    // hr channel -> lr channel; empty means identity (no merging). Values must
    // cover 0..max contiguously.
    std::vector<int> merge_map;
    BoundaryMode boundary = BoundaryMode::reflect;
    double temperature = 0.05;

    int64_t lr_channels(int64_t hr_channels) const;
    void validate(int64_t hr_channels) const;
};

// sr is (batch, channels, z, y, x); each spatial extent must be a multiple of
// the scale numerator. Returns (batch, lr_channels, z/sf, y/sf, x/sf), still
// normalized across channels. Works at 32- or 64-bit precision.
torch::Tensor differentiable_downsample(const torch::Tensor& sr, const DownsampleSpec& spec);

// Mean squared error over all sites and channels between the downsampled sr
// and the low-res one-hot target (batch, lr_channels, z/sf, y/sf, x/sf).
torch::Tensor voxelwise_loss(const torch::Tensor& sr, const torch::Tensor& lr,
                             const DownsampleSpec& spec);

} // namespace voxfuse
