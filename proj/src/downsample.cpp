#include "downsample.hpp"

#include <algorithm>

namespace F = torch::nn::functional;

namespace voxfuse {

int64_t DownsampleSpec::lr_channels(int64_t hr_channels) const {
    if (merge_map.empty()) return hr_channels;
    return int64_t(*std::max_element(merge_map.begin(), merge_map.end())) + 1;
}

void DownsampleSpec::validate(int64_t hr_channels) const {
    require(temperature > 0.0, Errc::invalid_argument, "softmax temperature must be positive");
    if (merge_map.empty()) return;
    require(int64_t(merge_map.size()) == hr_channels, Errc::invalid_argument,
            "merge map covers " + std::to_string(merge_map.size()) + " channels, field has " +
                std::to_string(hr_channels));
    const int64_t lr = lr_channels(hr_channels);
    std::vector<bool> hit(size_t(lr), false);
    for (int m : merge_map) {
        require(m >= 0 && int64_t(m) < lr, Errc::invalid_argument,
                "merge map entry out of range");
        hit[size_t(m)] = true;
    }
    for (int64_t m = 0; m < lr; ++m)
        require(hit[size_t(m)], Errc::invalid_argument,
                "merge map skips low-res channel " + std::to_string(m));
}

namespace {

// Pads one spatial axis by gathering boundary-folded source rows, keeping the
// op differentiable and honoring the same edge rule as the plain-grid blur.
torch::Tensor pad_axis(const torch::Tensor& x, int64_t dim, int64_t radius, BoundaryMode mode) {
    if (radius == 0) return x;
    const int64_t n = x.size(dim);
    std::vector<int64_t> idx;
    idx.reserve(size_t(n + 2 * radius));
    for (int64_t i = -radius; i < n + radius; ++i) idx.push_back(map_index(i, n, mode));
    return x.index_select(dim, torch::tensor(idx, torch::kInt64));
}

torch::Tensor blur_axis(const torch::Tensor& x, int64_t dim, const std::vector<double>& taps,
                        BoundaryMode mode, torch::Dtype dtype) {
    const int64_t k = int64_t(taps.size());
    if (k == 1) return x;
    torch::Tensor padded = pad_axis(x, dim, k / 2, mode);
    const int64_t channels = x.size(1);
    torch::Tensor taps_t = torch::tensor(taps, dtype);
    torch::Tensor w = taps_t.reshape({1, 1, dim == 2 ? k : 1, dim == 3 ? k : 1, dim == 4 ? k : 1})
                          .repeat({channels, 1, 1, 1, 1});
    return F::conv3d(padded, w, F::Conv3dFuncOptions().groups(channels));
}

torch::Tensor linear_axis(const torch::Tensor& x, int64_t dim, int64_t out_n,
                          torch::Dtype dtype) {
    const int64_t in_n = x.size(dim);
    if (in_n == out_n) return x;
    const auto plan = linear_sample_plan(in_n, out_n);
    std::vector<int64_t> lo, hi;
    std::vector<double> w_lo, w_hi;
    for (const auto& s : plan) {
        lo.push_back(s.lo);
        hi.push_back(s.hi);
        w_lo.push_back(s.w_lo);
        w_hi.push_back(s.w_hi);
    }
    std::vector<int64_t> wshape(5, 1);
    wshape[size_t(dim)] = out_n;
    torch::Tensor wl = torch::tensor(w_lo, dtype).reshape(wshape);
    torch::Tensor wh = torch::tensor(w_hi, dtype).reshape(wshape);
    return x.index_select(dim, torch::tensor(lo, torch::kInt64)) * wl +
           x.index_select(dim, torch::tensor(hi, torch::kInt64)) * wh;
}

torch::Tensor pick_axis(const torch::Tensor& x, int64_t dim, int64_t out_n, int64_t num,
                        int64_t den) {
    const int64_t in_n = x.size(dim);
    std::vector<int64_t> idx;
    idx.reserve(size_t(out_n));
    for (int64_t i = 0; i < out_n; ++i)
        idx.push_back(std::min((2 * i * num + den) / (2 * den), in_n - 1));
    return x.index_select(dim, torch::tensor(idx, torch::kInt64));
}

} // namespace

torch::Tensor differentiable_downsample(const torch::Tensor& sr, const DownsampleSpec& spec) {
    require(sr.dim() == 5, Errc::invalid_argument,
            "expected a (batch, channels, z, y, x) field");
    const int64_t hr_channels = sr.size(1);
    require(hr_channels >= 2, Errc::invalid_argument, "field needs at least two channels");
    spec.validate(hr_channels);
    const int64_t num = spec.scale.num(), den = spec.scale.den();
    for (int64_t dim = 2; dim < 5; ++dim)
        require(sr.size(dim) % num == 0, Errc::invalid_argument,
                "extent " + std::to_string(sr.size(dim)) + " is not a multiple of " +
                    std::to_string(num));
    const auto dtype = sr.scalar_type() == torch::kFloat64 ? torch::kFloat64 : torch::kFloat32;
    torch::Tensor x = sr.to(dtype);

    // 1. Collapse HR phases onto the LR palette by summing probabilities.
    if (!spec.merge_map.empty()) {
        const int64_t lr_ch = spec.lr_channels(hr_channels);
        torch::Tensor m = torch::zeros({lr_ch, hr_channels, 1, 1, 1}, dtype);
        for (int64_t c = 0; c < hr_channels; ++c)
            m[spec.merge_map[size_t(c)]][c][0][0][0] = 1.0;
        x = F::conv3d(x, m, F::Conv3dFuncOptions());
    }

    // 2. Shrink to the LR grid.
    if (spec.mode == DegradeMode::under_resolved) {
        const BlurSpec blur = kernel_for(spec.scale.value());
        const auto taps = gaussian_taps(blur.kernel, blur.sigma);
        for (int64_t dim = 2; dim < 5; ++dim) x = blur_axis(x, dim, taps, spec.boundary, dtype);
        for (int64_t dim = 2; dim < 5; ++dim)
            x = linear_axis(x, dim, sr.size(dim) / num * den, dtype);
    } else {
        for (int64_t dim = 2; dim < 5; ++dim)
            x = pick_axis(x, dim, sr.size(dim) / num * den, num, den);
    }

    // 3. Sharpen back toward a one-hot field.
    return torch::softmax(x / spec.temperature, 1);
}

torch::Tensor voxelwise_loss(const torch::Tensor& sr, const torch::Tensor& lr,
                             const DownsampleSpec& spec) {
    torch::Tensor down = differentiable_downsample(sr, spec);
    require(down.sizes() == lr.sizes(), Errc::invalid_argument,
            "low-res target shape does not match the downsampled field");
    return torch::mean(torch::square(down - lr.to(down.scalar_type())));
}

} // namespace voxfuse
