#include "nets.hpp"

#include <cmath>
#include <cstring>

namespace F = torch::nn::functional;

namespace voxfuse {

namespace {

std::vector<int64_t> weight_shape(const LayerSpec& l, int dims) {
    std::vector<int64_t> shape;
    if (l.kind == LayerKind::transposed_conv)
        shape = {l.in_channels, l.out_channels};
    else
        shape = {l.out_channels, l.in_channels};
    for (int i = 0; i < dims; ++i) shape.push_back(l.kernel);
    return shape;
}

int64_t shape_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

// Weights are drawn sequentially from the stream in tensor memory order, so a
// given seed always yields the same parameters. Hidden layers feeding a
// rectifier get std sqrt(2/fan_in); output layers get std sqrt(1/fan_in).
torch::Tensor init_weight(const LayerSpec& l, int dims, Rng& rng) {
    const auto shape = weight_shape(l, dims);
    int64_t fan_in = l.in_channels;
    for (int i = 0; i < dims; ++i) fan_in *= l.kernel;
    const bool rectified =
        l.activation == Activation::relu || l.activation == Activation::leaky_relu;
    const double std = std::sqrt((rectified ? 2.0 : 1.0) / double(fan_in));
    torch::Tensor w = torch::empty(shape, torch::kFloat32);
    float* p = w.data_ptr<float>();
    const int64_t n = shape_numel(shape);
    for (int64_t i = 0; i < n; ++i) p[i] = float(rng.normal() * std);
    return w.set_requires_grad(true);
}

torch::Tensor apply_activation(torch::Tensor x, Activation act, int64_t softmax_dim) {
    switch (act) {
    case Activation::none: return x;
    case Activation::relu: return torch::relu(x);
    case Activation::leaky_relu: return torch::leaky_relu(x, 0.2);
    case Activation::softmax: return torch::softmax(x, softmax_dim);
    }
    fail(Errc::internal, "unhandled activation");
}

void check_blob_shapes(const std::vector<LayerSpec>& layers, int dims,
                       const std::vector<TensorBlob>& blobs, const char* what) {
    require(blobs.size() == layers.size() * 2, Errc::format,
            std::string(what) + ": expected " + std::to_string(layers.size() * 2) +
                " parameter blobs, got " + std::to_string(blobs.size()));
    for (size_t i = 0; i < layers.size(); ++i) {
        const auto expect_w = weight_shape(layers[i], dims);
        require(blobs[2 * i].shape == expect_w, Errc::format,
                std::string(what) + ": weight shape mismatch at layer " + std::to_string(i));
        require(blobs[2 * i + 1].shape == std::vector<int64_t>{layers[i].out_channels},
                Errc::format,
                std::string(what) + ": bias shape mismatch at layer " + std::to_string(i));
    }
}

} // namespace

torch::Tensor blob_to_tensor(const TensorBlob& b) {
    require(int64_t(b.data.size()) == b.numel(), Errc::format,
            "blob '" + b.name + "' size does not match its shape");
    torch::Tensor t = torch::empty(b.shape, torch::kFloat32);
    std::memcpy(t.data_ptr<float>(), b.data.data(), b.data.size() * sizeof(float));
    return t;
}

TensorBlob tensor_to_blob(const std::string& name, const torch::Tensor& t) {
    torch::Tensor c = t.detach().to(torch::kFloat32).contiguous();
    TensorBlob b;
    b.name = name;
    b.shape.assign(c.sizes().begin(), c.sizes().end());
    b.data.resize(size_t(c.numel()));
    std::memcpy(b.data.data(), c.data_ptr<float>(), b.data.size() * sizeof(float));
    return b;
}

TorchGenerator TorchGenerator::create(const GeneratorSpec& spec, Rng& rng) {
    TorchGenerator g;
    g.spec = spec;
    for (const auto& l : spec.layers) {
        g.weights.push_back(init_weight(l, 3, rng));
        g.biases.push_back(torch::zeros({l.out_channels}, torch::kFloat32).set_requires_grad(true));
    }
    return g;
}

TorchGenerator TorchGenerator::from_blobs(const GeneratorSpec& spec,
                                          const std::vector<TensorBlob>& blobs) {
    check_blob_shapes(spec.layers, 3, blobs, "generator");
    TorchGenerator g;
    g.spec = spec;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        g.weights.push_back(blob_to_tensor(blobs[2 * i]).set_requires_grad(true));
        g.biases.push_back(blob_to_tensor(blobs[2 * i + 1]).set_requires_grad(true));
    }
    return g;
}

std::vector<TensorBlob> TorchGenerator::to_blobs() const {
    std::vector<TensorBlob> blobs;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        blobs.push_back(tensor_to_blob("generator." + std::to_string(i) + ".weight", weights[i]));
        blobs.push_back(tensor_to_blob("generator." + std::to_string(i) + ".bias", biases[i]));
    }
    return blobs;
}

std::vector<torch::Tensor> TorchGenerator::parameters() const {
    std::vector<torch::Tensor> params;
    for (size_t i = 0; i < weights.size(); ++i) {
        params.push_back(weights[i]);
        params.push_back(biases[i]);
    }
    return params;
}

torch::Tensor TorchGenerator::forward(const torch::Tensor& x) const {
    require(x.dim() == 5 && x.size(1) == spec.in_channels(), Errc::invalid_argument,
            "generator input must be (batch, " + std::to_string(spec.in_channels()) +
                ", depth, height, width)");
    torch::Tensor h = x;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        if (l.kind == LayerKind::transposed_conv)
            h = F::conv_transpose3d(h, weights[i],
                                    F::ConvTranspose3dFuncOptions()
                                        .bias(biases[i])
                                        .stride(l.stride)
                                        .padding(l.padding));
        else
            h = F::conv3d(h, weights[i], F::Conv3dFuncOptions()
                                             .bias(biases[i])
                                             .stride(l.stride)
                                             .padding(l.padding));
        h = apply_activation(h, l.activation, 1);
    }
    return h;
}

TorchCritic TorchCritic::create(const CriticSpec& spec, Rng& rng) {
    TorchCritic d;
    d.spec = spec;
    for (const auto& l : spec.layers) {
        d.weights.push_back(init_weight(l, 2, rng));
        d.biases.push_back(torch::zeros({l.out_channels}, torch::kFloat32).set_requires_grad(true));
    }
    return d;
}

TorchCritic TorchCritic::from_blobs(const CriticSpec& spec,
                                    const std::vector<TensorBlob>& blobs) {
    check_blob_shapes(spec.layers, 2, blobs, "critic");
    TorchCritic d;
    d.spec = spec;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        d.weights.push_back(blob_to_tensor(blobs[2 * i]).set_requires_grad(true));
        d.biases.push_back(blob_to_tensor(blobs[2 * i + 1]).set_requires_grad(true));
    }
    return d;
}

std::vector<TensorBlob> TorchCritic::to_blobs() const {
    const std::string prefix = "critic." + std::string(orientation_name(spec.orientation)) + ".";
    std::vector<TensorBlob> blobs;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        blobs.push_back(tensor_to_blob(prefix + std::to_string(i) + ".weight", weights[i]));
        blobs.push_back(tensor_to_blob(prefix + std::to_string(i) + ".bias", biases[i]));
    }
    return blobs;
}

std::vector<torch::Tensor> TorchCritic::parameters() const {
    std::vector<torch::Tensor> params;
    for (size_t i = 0; i < weights.size(); ++i) {
        params.push_back(weights[i]);
        params.push_back(biases[i]);
    }
    return params;
}

torch::Tensor TorchCritic::forward(const torch::Tensor& x) const {
    require(x.dim() == 4 && x.size(1) == spec.in_channels && x.size(2) == spec.input_side &&
                x.size(3) == spec.input_side,
            Errc::invalid_argument,
            "critic input must be (batch, " + std::to_string(spec.in_channels) + ", " +
                std::to_string(spec.input_side) + ", " + std::to_string(spec.input_side) + ")");
    torch::Tensor h = x;
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& l = spec.layers[i];
        h = F::conv2d(h, weights[i], F::Conv2dFuncOptions()
                                         .bias(biases[i])
                                         .stride(l.stride)
                                         .padding(l.padding));
        h = apply_activation(h, l.activation, 1);
    }
    return h.reshape({x.size(0)});
}

Adam::Adam(std::vector<torch::Tensor> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    require(!params_.empty(), Errc::invalid_argument, "optimizer needs at least one parameter");
    torch::NoGradGuard no_grad;
    for (const auto& p : params_) {
        m_.push_back(torch::zeros_like(p));
        v_.push_back(torch::zeros_like(p));
    }
}

void Adam::zero_grad() {
    for (auto& p : params_)
        if (p.grad().defined()) p.mutable_grad().zero_();
}

void Adam::step() {
    torch::NoGradGuard no_grad;
    ++step_;
    const double bc1 = 1.0 - std::pow(beta1_, double(step_));
    const double bc2 = 1.0 - std::pow(beta2_, double(step_));
    for (size_t i = 0; i < params_.size(); ++i) {
        torch::Tensor g = params_[i].grad();
        if (!g.defined()) continue;
        m_[i].mul_(beta1_).add_(g, 1.0 - beta1_);
        v_[i].mul_(beta2_).addcmul_(g, g, 1.0 - beta2_);
        torch::Tensor m_hat = m_[i] / bc1;
        torch::Tensor v_hat = v_[i] / bc2;
        params_[i].add_(m_hat / (v_hat.sqrt() + eps_), -lr_);
    }
}

OptimizerBlobs Adam::to_blobs() const {
    OptimizerBlobs out;
    out.step = step_;
    for (size_t i = 0; i < params_.size(); ++i) {
        out.first_moment.push_back(tensor_to_blob("m." + std::to_string(i), m_[i]));
        out.second_moment.push_back(tensor_to_blob("v." + std::to_string(i), v_[i]));
    }
    return out;
}

void Adam::load_blobs(const OptimizerBlobs& blobs) {
    require(blobs.first_moment.size() == params_.size() &&
                blobs.second_moment.size() == params_.size(),
            Errc::format, "optimizer moment count does not match parameter count");
    torch::NoGradGuard no_grad;
    for (size_t i = 0; i < params_.size(); ++i) {
        torch::Tensor m = blob_to_tensor(blobs.first_moment[i]);
        torch::Tensor v = blob_to_tensor(blobs.second_moment[i]);
        require(m.sizes() == params_[i].sizes() && v.sizes() == params_[i].sizes(), Errc::format,
                "optimizer moment shape does not match parameter " + std::to_string(i));
        m_[i].copy_(m);
        v_[i].copy_(v);
    }
    step_ = blobs.step;
}

torch::Tensor gradient_penalty(const TorchCritic& critic, const torch::Tensor& fake,
                               const torch::Tensor& real, double lambda, Rng& rng) {
    require(fake.sizes() == real.sizes(), Errc::invalid_argument,
            "fake and real patch batches must have matching shapes");
    if (lambda == 0.0) return torch::zeros({}, fake.options());
    const int64_t n = fake.size(0);
    // One mixing coefficient per interpolate, drawn before any autograd work
    // so the stream position is independent of tensor internals.
    std::vector<double> mix(size_t(n), 0.0);
    for (double& m : mix) m = rng.uniform();
    torch::Tensor eps = torch::tensor(mix, fake.options()).reshape({n, 1, 1, 1});
    torch::Tensor mixed =
        (eps * real.detach() + (1.0 - eps) * fake.detach()).requires_grad_(true);
    torch::Tensor scores = critic.forward(mixed);
    torch::Tensor grad = torch::autograd::grad({scores.sum()}, {mixed}, /*grad_outputs=*/{},
                                               /*retain_graph=*/true,
                                               /*create_graph=*/true)[0];
    torch::Tensor norms = grad.reshape({n, -1}).norm(2, 1);
    return lambda * torch::mean(torch::square(norms - 1.0));
}

torch::Tensor critic_loss(const torch::Tensor& fake_scores, const torch::Tensor& real_scores,
                          const torch::Tensor& gp) {
    return fake_scores.mean() - real_scores.mean() + gp;
}

torch::Tensor generator_loss(const torch::Tensor& critic_scores, const torch::Tensor& voxelwise,
                             double threshold, double coefficient) {
    torch::Tensor adversarial = -critic_scores.mean();
    if (voxelwise.item<double>() < threshold) return adversarial;
    return adversarial + coefficient * voxelwise;
}

} // namespace voxfuse
