#pragma once

// Torch-backed network containers. Internal header: only trainer code and
// tests include it, public headers stay torch-free.

#include <torch/torch.h>

#include "checkpoint.hpp"
#include "netspec.hpp"
#include "rng.hpp"

namespace voxfuse {

// Parameters are held as raw tensors (weight + bias per layer) so creation,
// serialization, and deterministic initialization stay under our control.
struct TorchGenerator {
    GeneratorSpec spec;
    std::vector<torch::Tensor> weights;
    std::vector<torch::Tensor> biases;

    // He-normal init drawn from `rng`, so runs are reproducible regardless of
    // torch's global generator.
    static TorchGenerator create(const GeneratorSpec& spec, Rng& rng);
    static TorchGenerator from_blobs(const GeneratorSpec& spec,
                                     const std::vector<TensorBlob>& blobs);

    std::vector<TensorBlob> to_blobs() const;
    std::vector<torch::Tensor> parameters() const;
    // x: (B, lr+noise channels, d, h, w) -> (B, hr channels, sf*d, ...),
    // channel softmax applied.
    torch::Tensor forward(const torch::Tensor& x) const;
};

struct TorchCritic {
    CriticSpec spec;
    std::vector<torch::Tensor> weights;
    std::vector<torch::Tensor> biases;

    static TorchCritic create(const CriticSpec& spec, Rng& rng);
    static TorchCritic from_blobs(const CriticSpec& spec, const std::vector<TensorBlob>& blobs);

    std::vector<TensorBlob> to_blobs() const;
    std::vector<torch::Tensor> parameters() const;
    // x: (B, C, s, s) -> (B) unbounded scores.
    torch::Tensor forward(const torch::Tensor& x) const;
};

// Minimal Adam over explicit tensors; moments serialize into checkpoints.
class Adam {
public:
    Adam(std::vector<torch::Tensor> params, double lr, double beta1, double beta2,
         double eps = 1e-8);

    void zero_grad();
    void step();

    int64_t step_count() const { return step_; }
    OptimizerBlobs to_blobs() const;
    void load_blobs(const OptimizerBlobs& blobs);

private:
    std::vector<torch::Tensor> params_, m_, v_;
    double lr_, beta1_, beta2_, eps_;
    int64_t step_ = 0;
};

// Shared helpers between nets and the differentiable downsampler.
torch::Tensor blob_to_tensor(const TensorBlob& blob);
TensorBlob tensor_to_blob(const std::string& name, const torch::Tensor& t);

// Wasserstein training objectives. Scores come straight from critic forwards;
// everything returns 0-dim tensors connected to the autograd graph.

// lambda * mean over interpolates of (||d critic / d x||_2 - 1)^2, with one
// uniform mixing coefficient per sample drawn from `rng`.
torch::Tensor gradient_penalty(const TorchCritic& critic, const torch::Tensor& fake,
                               const torch::Tensor& real, double lambda, Rng& rng);

// mean(fake) - mean(real) + gp
torch::Tensor critic_loss(const torch::Tensor& fake_scores, const torch::Tensor& real_scores,
                          const torch::Tensor& gp);

// -mean(scores), plus coefficient * voxelwise when voxelwise >= threshold
// (the free branch needs strictly smaller).
torch::Tensor generator_loss(const torch::Tensor& critic_scores, const torch::Tensor& voxelwise,
                             double threshold, double coefficient);

} // namespace voxfuse
