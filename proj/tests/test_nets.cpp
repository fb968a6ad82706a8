#include "testing.hpp"

#include <cmath>

#include "error.hpp"
#include "nets.hpp"

using namespace voxfuse;
using doctest::Approx;

namespace {

GeneratorSpec small_gen_spec(int64_t noise = 1) {
    return build_generator_spec(ScaleFactor::from_input_side(16), 2, 3, noise, {6, 5});
}

// A critic that is a pure linear functional of its input: one full-extent
// convolution with constant weight and zero bias. Its input gradient is the
// weight tensor itself, which makes the gradient penalty a closed form.
TorchCritic linear_critic(int64_t channels, int64_t side, float weight_value) {
    CriticSpec spec;
    spec.orientation = Orientation::isotropic;
    spec.in_channels = channels;
    spec.input_side = side;
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.in_channels = channels;
    l.out_channels = 1;
    l.kernel = side;
    l.stride = 1;
    l.padding = 0;
    l.activation = Activation::none;
    spec.layers.push_back(l);

    TensorBlob w;
    w.name = "weight";
    w.shape = {1, channels, side, side};
    w.data.assign(size_t(channels * side * side), weight_value);
    TensorBlob b;
    b.name = "bias";
    b.shape = {1};
    b.data = {0.0f};
    return TorchCritic::from_blobs(spec, {w, b});
}

} // namespace

TEST_CASE("generator forward produces softmax volumes at the planned size") {
    Rng rng(11);
    const GeneratorSpec spec = small_gen_spec();
    const TorchGenerator gen = TorchGenerator::create(spec, rng);

    torch::manual_seed(0);
    torch::Tensor x = torch::rand({2, spec.in_channels(), 4, 4, 4});
    torch::Tensor y = gen.forward(x);
    REQUIRE(y.sizes() == torch::IntArrayRef({2, 3, 16, 16, 16}));

    torch::Tensor sums = y.sum(1);
    CHECK((sums - 1.0).abs().max().item<double>() < 1e-5);
    CHECK(y.min().item<double>() > 0.0);
}

TEST_CASE("generator runs without noise channels") {
    Rng rng(3);
    const GeneratorSpec spec = small_gen_spec(0);
    CHECK(spec.in_channels() == 2);
    const TorchGenerator gen = TorchGenerator::create(spec, rng);
    torch::Tensor y = gen.forward(torch::rand({1, 2, 4, 4, 4}));
    CHECK(y.sizes() == torch::IntArrayRef({1, 3, 16, 16, 16}));
}

TEST_CASE("generator parameters round-trip through blobs exactly") {
    Rng rng(21);
    const GeneratorSpec spec = small_gen_spec();
    const TorchGenerator gen = TorchGenerator::create(spec, rng);

    const auto blobs = gen.to_blobs();
    CHECK(blobs.size() == 2 * spec.layers.size());
    const TorchGenerator back = TorchGenerator::from_blobs(spec, blobs);

    torch::manual_seed(1);
    torch::Tensor x = torch::rand({1, spec.in_channels(), 4, 4, 4});
    CHECK(torch::equal(gen.forward(x), back.forward(x)));
}

TEST_CASE("blob loading rejects mismatched payloads") {
    Rng rng(2);
    const GeneratorSpec spec = small_gen_spec();
    auto blobs = TorchGenerator::create(spec, rng).to_blobs();

    auto missing = blobs;
    missing.pop_back();
    CHECK_THROWS_AS((void)TorchGenerator::from_blobs(spec, missing), Error);

    auto reshaped = blobs;
    reshaped[0].shape[0] += 1;
    CHECK_THROWS_AS((void)TorchGenerator::from_blobs(spec, reshaped), Error);
}

TEST_CASE("parameter initialization is seeded, not global") {
    const GeneratorSpec spec = small_gen_spec();
    Rng a(7), b(7), c(8);
    const auto ba = TorchGenerator::create(spec, a).to_blobs();
    const auto bb = TorchGenerator::create(spec, b).to_blobs();
    const auto bc = TorchGenerator::create(spec, c).to_blobs();
    REQUIRE(ba.size() == bb.size());
    bool all_equal = true, any_diff_seed = false;
    for (size_t i = 0; i < ba.size(); ++i) {
        if (ba[i].data != bb[i].data) all_equal = false;
        if (ba[i].data != bc[i].data) any_diff_seed = true;
    }
    CHECK(all_equal);
    CHECK(any_diff_seed);
}

TEST_CASE("critic forward yields one score per sample") {
    const auto specs = build_critic_specs(3, false, 8, {4, 8});
    Rng rng(5);
    const TorchCritic critic = TorchCritic::create(specs[0], rng);
    torch::manual_seed(2);
    torch::Tensor scores = critic.forward(torch::rand({5, 3, 8, 8}));
    CHECK(scores.sizes() == torch::IntArrayRef({5}));

    const TorchCritic back = TorchCritic::from_blobs(specs[0], critic.to_blobs());
    torch::Tensor x = torch::rand({2, 3, 8, 8});
    CHECK(torch::equal(critic.forward(x), back.forward(x)));
}

TEST_CASE("optimizer follows the reference update rule") {
    const double lr = 0.01, beta1 = 0.0, beta2 = 0.9, eps = 1e-8;
    torch::Tensor p =
        torch::tensor({0.5f, -0.3f, 1.2f, 0.0f}).set_requires_grad(true);
    Adam opt({p}, lr, beta1, beta2, eps);

    std::vector<std::vector<double>> grads = {{0.1, -0.2, 0.3, 0.0},
                                              {-0.05, 0.4, 0.1, 1.0},
                                              {0.2, 0.2, -0.2, -0.5}};
    std::vector<double> ref = {0.5, -0.3, 1.2, 0.0};
    std::vector<double> m(4, 0.0), v(4, 0.0);

    for (size_t t = 0; t < grads.size(); ++t) {
        opt.zero_grad();
        torch::Tensor g = torch::tensor(grads[t]).to(torch::kFloat32);
        (p * g).sum().backward();
        opt.step();

        const double bc1 = 1.0 - std::pow(beta1, double(t + 1));
        const double bc2 = 1.0 - std::pow(beta2, double(t + 1));
        for (int i = 0; i < 4; ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grads[t][i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grads[t][i] * grads[t][i];
            ref[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
    CHECK(opt.step_count() == 3);
    for (int i = 0; i < 4; ++i) CHECK(p[i].item<double>() == Approx(ref[i]).epsilon(1e-5));
}

TEST_CASE("optimizer state restores bit-exactly") {
    auto make_param = [] {
        return torch::tensor({1.0f, 2.0f, -3.0f}).set_requires_grad(true);
    };
    torch::Tensor g = torch::tensor({0.3f, -0.1f, 0.7f});

    torch::Tensor p1 = make_param();
    Adam opt1({p1}, 1e-3, 0.0, 0.9);
    for (int t = 0; t < 2; ++t) {
        opt1.zero_grad();
        (p1 * g).sum().backward();
        opt1.step();
    }

    const OptimizerBlobs saved = opt1.to_blobs();
    CHECK(saved.step == 2);

    torch::Tensor p2 = p1.detach().clone().set_requires_grad(true);
    Adam opt2({p2}, 1e-3, 0.0, 0.9);
    opt2.load_blobs(saved);
    CHECK(opt2.step_count() == 2);

    opt1.zero_grad();
    (p1 * g).sum().backward();
    opt1.step();
    opt2.zero_grad();
    (p2 * g).sum().backward();
    opt2.step();
    CHECK(torch::equal(p1.detach(), p2.detach()));
}

TEST_CASE("gradient penalty of a linear critic is a closed form") {
    const int64_t side = 4, channels = 2;
    const float w = 0.1f;
    const TorchCritic critic = linear_critic(channels, side, w);

    torch::manual_seed(3);
    torch::Tensor fake = torch::rand({3, channels, side, side});
    torch::Tensor real = torch::rand({3, channels, side, side});

    const double norm = double(w) * std::sqrt(double(channels * side * side));
    const double expected = 10.0 * (norm - 1.0) * (norm - 1.0);

    Rng rng(9);
    torch::Tensor gp = gradient_penalty(critic, fake, real, 10.0, rng);
    CHECK(gp.item<double>() == Approx(expected).epsilon(1e-4));

    Rng rng2(10);
    CHECK(gradient_penalty(critic, fake, real, 0.0, rng2).item<double>() == 0.0);

    Rng rng3(11);
    CHECK_THROWS_AS(
        (void)gradient_penalty(critic, fake, torch::rand({2, channels, side, side}), 10.0, rng3),
        Error);
}

TEST_CASE("critic objective combines means and penalty") {
    torch::Tensor fake = torch::tensor({1.0, 2.0, 3.0}, torch::kFloat64);
    torch::Tensor real = torch::tensor({0.0, 1.0, 2.0}, torch::kFloat64);
    torch::Tensor gp = torch::tensor(0.5, torch::kFloat64);
    CHECK(critic_loss(fake, real, gp).item<double>() == Approx(1.5).epsilon(1e-12));
}

TEST_CASE("generator objective switches branches exactly at the threshold") {
    torch::Tensor scores = torch::tensor({1.0, 2.0, 3.0}, torch::kFloat64);
    const double b = 0.005, c = 10.0;

    auto loss_at = [&](double vw) {
        return generator_loss(scores, torch::tensor(vw, torch::kFloat64), b, c).item<double>();
    };

    // Below the threshold the voxel-wise term is dropped entirely.
    const double just_below = std::nextafter(b, 0.0);
    CHECK(loss_at(just_below) == -2.0);
    // At and above the threshold it contributes with the fixed coefficient.
    CHECK(loss_at(b) == Approx(-2.0 + c * b).epsilon(1e-12));
    CHECK(loss_at(0.1) == Approx(-1.0).epsilon(1e-12));
}
