#include "degrade.hpp"

#include <algorithm>
#include <cmath>

namespace voxfuse {

BlurSpec kernel_for(double scale_factor) {
    require(scale_factor >= 1.0 && scale_factor <= 64.0, Errc::invalid_argument,
            "blur kernel is only defined for scale factors in [1, 64]");
    int k = int(std::ceil(scale_factor));
    if (k % 2 == 0) --k;
    if (k < 1) k = 1;
    BlurSpec spec;
    spec.kernel = k;
    spec.sigma = 0.3 * ((double(k) - 1.0) * 0.5 - 1.0) + 0.8;
    return spec;
}

std::vector<double> gaussian_taps(int kernel, double sigma) {
    require(kernel >= 1 && kernel % 2 == 1, Errc::invalid_argument,
            "Gaussian kernel side must be odd and positive");
    if (kernel == 1) return {1.0};
    require(sigma > 0.0, Errc::invalid_argument, "Gaussian sigma must be positive");
    std::vector<double> taps(size_t(kernel), 0.0);
    const int c = kernel / 2;
    double sum = 0.0;
    for (int i = 0; i < kernel; ++i) {
        const double d = double(i - c);
        taps[size_t(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += taps[size_t(i)];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

int64_t map_index(int64_t p, int64_t n, BoundaryMode mode) {
    if (p >= 0 && p < n) return p;
    if (mode == BoundaryMode::wrap) return ((p % n) + n) % n;
    // mirror without repeating the edge sample (period 2n-2)
    if (n == 1) return 0;
    const int64_t period = 2 * (n - 1);
    int64_t q = ((p % period) + period) % period;
    return q < n ? q : period - q;
}

namespace {

// Convolves along one axis of an x-fastest grid.
void blur_axis(std::vector<double>& grid, std::array<int64_t, 3> dims, int axis,
               const std::vector<double>& taps, BoundaryMode mode) {
    const int64_t nx = dims[0], ny = dims[1], nz = dims[2];
    const int64_t n = dims[size_t(axis)];
    const int64_t stride = axis == 0 ? 1 : axis == 1 ? nx : nx * ny;
    const int radius = int(taps.size() / 2);
    std::vector<double> line(size_t(n), 0.0);
    const int64_t na = axis == 0 ? ny : nx; // iterate the two fixed axes
    const int64_t nb = axis == 2 ? ny : nz;
    const int64_t sa = axis == 0 ? nx : 1;
    const int64_t sb = axis == 2 ? nx : nx * ny;
    for (int64_t b = 0; b < nb; ++b)
        for (int64_t a = 0; a < na; ++a) {
            const int64_t base = a * sa + b * sb;
            for (int64_t i = 0; i < n; ++i) line[size_t(i)] = grid[size_t(base + i * stride)];
            for (int64_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int t = -radius; t <= radius; ++t)
                    acc += taps[size_t(t + radius)] * line[size_t(map_index(i + t, n, mode))];
                grid[size_t(base + i * stride)] = acc;
            }
        }
}

} // namespace

void gaussian_blur_3d(std::vector<double>& grid, std::array<int64_t, 3> dims,
                      const BlurSpec& blur, BoundaryMode boundary) {
    require(int64_t(grid.size()) == dims[0] * dims[1] * dims[2], Errc::invalid_argument,
            "grid size does not match dims");
    if (blur.kernel == 1) return;
    const auto taps = gaussian_taps(blur.kernel, blur.sigma);
    for (int axis = 0; axis < 3; ++axis) blur_axis(grid, dims, axis, taps, boundary);
}

std::vector<LinearSample> linear_sample_plan(int64_t in, int64_t out) {
    require(in >= 1 && out >= 1, Errc::invalid_argument, "resample extents must be positive");
    std::vector<LinearSample> plan(size_t(out), LinearSample{});
    const double step = double(in) / double(out);
    for (int64_t i = 0; i < out; ++i) {
        double src = (double(i) + 0.5) * step - 0.5;
        src = std::clamp(src, 0.0, double(in - 1));
        LinearSample s;
        s.lo = int64_t(std::floor(src));
        s.hi = std::min(s.lo + 1, in - 1);
        s.w_hi = src - double(s.lo);
        s.w_lo = 1.0 - s.w_hi;
        plan[size_t(i)] = s;
    }
    return plan;
}

namespace {

// Linear resample along one axis; separable passes compose to trilinear.
std::vector<double> resample_axis(const std::vector<double>& grid, std::array<int64_t, 3>& dims,
                                  int axis, int64_t out_n) {
    const auto plan = linear_sample_plan(dims[size_t(axis)], out_n);
    std::array<int64_t, 3> od = dims;
    od[size_t(axis)] = out_n;
    std::vector<double> out(size_t(od[0] * od[1] * od[2]));
    const int64_t in_stride = axis == 0 ? 1 : axis == 1 ? dims[0] : dims[0] * dims[1];
    for (int64_t z = 0; z < od[2]; ++z)
        for (int64_t y = 0; y < od[1]; ++y)
            for (int64_t x = 0; x < od[0]; ++x) {
                const int64_t oi = axis == 0 ? x : axis == 1 ? y : z;
                const LinearSample& s = plan[size_t(oi)];
                int64_t ix = x, iy = y, iz = z;
                (axis == 0 ? ix : axis == 1 ? iy : iz) = 0;
                const int64_t base = (iz * dims[1] + iy) * dims[0] + ix;
                const double v = s.w_lo * grid[size_t(base + s.lo * in_stride)] +
                                 s.w_hi * grid[size_t(base + s.hi * in_stride)];
                out[size_t((z * od[1] + y) * od[0] + x)] = v;
            }
    dims = od;
    return out;
}

} // namespace

std::vector<double> trilinear_resample(const std::vector<double>& grid,
                                       std::array<int64_t, 3> in_dims,
                                       std::array<int64_t, 3> out_dims) {
    require(int64_t(grid.size()) == in_dims[0] * in_dims[1] * in_dims[2], Errc::invalid_argument,
            "grid size does not match dims");
    std::array<int64_t, 3> dims = in_dims;
    std::vector<double> cur = grid;
    for (int axis = 0; axis < 3; ++axis)
        if (dims[size_t(axis)] != out_dims[size_t(axis)])
            cur = resample_axis(cur, dims, axis, out_dims[size_t(axis)]);
    return cur;
}

PhaseVolume simulate_low_res(const PhaseVolume& high_res, const DegradeSpec& spec) {
    PhaseVolume merged = spec.merge_mapping.empty()
                             ? high_res
                             : merge_phases(high_res, spec.merge_mapping, spec.merged_palette);

    // Crop (leading corner) so every axis shrinks exactly.
    std::array<int64_t, 3> used{}, lr_dims{};
    for (int a = 0; a < 3; ++a) {
        used[size_t(a)] = spec.scale.usable_high_res(merged.dims[size_t(a)]);
        lr_dims[size_t(a)] = spec.scale.scale_down(used[size_t(a)]);
    }
    const double lr_pitch = merged.voxel_pitch_nm * spec.scale.value();

    if (spec.mode == DegradeMode::under_sampled) {
        std::vector<uint8_t> labels(size_t(lr_dims[0] * lr_dims[1] * lr_dims[2]));
        const int64_t p = spec.scale.num(), q = spec.scale.den();
        // round(i * sf) in exact integer arithmetic; sf = p/q with q odd, so
        // true half-way ties cannot occur.
        auto src = [p, q](int64_t i, int64_t limit) {
            return std::min((2 * i * p + q) / (2 * q), limit - 1);
        };
        for (int64_t z = 0; z < lr_dims[2]; ++z)
            for (int64_t y = 0; y < lr_dims[1]; ++y)
                for (int64_t x = 0; x < lr_dims[0]; ++x)
                    labels[size_t((z * lr_dims[1] + y) * lr_dims[0] + x)] =
                        merged.at(src(x, used[0]), src(y, used[1]), src(z, used[2]));
        return PhaseVolume::create(lr_dims, lr_pitch, merged.palette, std::move(labels));
    }

    require(merged.phase_count() == 2, Errc::invalid_argument,
            "under-resolved degradation needs exactly two classes after merging, got " +
                std::to_string(merged.phase_count()));
    std::vector<double> grid(size_t(used[0] * used[1] * used[2]));
    for (int64_t z = 0; z < used[2]; ++z)
        for (int64_t y = 0; y < used[1]; ++y)
            for (int64_t x = 0; x < used[0]; ++x)
                grid[size_t((z * used[1] + y) * used[0] + x)] = double(merged.at(x, y, z));

    gaussian_blur_3d(grid, used, kernel_for(spec.scale.value()), spec.boundary);
    std::vector<double> low = trilinear_resample(grid, used, lr_dims);

    std::vector<uint8_t> labels(low.size());
    for (size_t i = 0; i < low.size(); ++i) labels[i] = low[i] >= 0.5 ? 1 : 0;
    return PhaseVolume::create(lr_dims, lr_pitch, merged.palette, std::move(labels));
}

PhaseImage rotate90(const PhaseImage& img, int times) {
    int t = ((times % 4) + 4) % 4;
    PhaseImage cur = img;
    while (t-- > 0) {
        std::array<int64_t, 2> od{cur.dims[1], cur.dims[0]};
        std::vector<uint8_t> labels(size_t(od[0] * od[1]));
        for (int64_t y = 0; y < od[1]; ++y)
            for (int64_t x = 0; x < od[0]; ++x)
                labels[size_t(y * od[0] + x)] = cur.at(y, cur.dims[1] - 1 - x);
        cur = PhaseImage::create(od, cur.pixel_pitch_nm, cur.palette, std::move(labels),
                                 cur.orientation);
    }
    return cur;
}

PhaseImage mirror_x(const PhaseImage& img) {
    std::vector<uint8_t> labels(size_t(img.total()));
    for (int64_t y = 0; y < img.ny(); ++y)
        for (int64_t x = 0; x < img.nx(); ++x)
            labels[size_t(y * img.nx() + x)] = img.at(img.nx() - 1 - x, y);
    return PhaseImage::create(img.dims, img.pixel_pitch_nm, img.palette, std::move(labels),
                              img.orientation);
}

PhaseImage mirror_y(const PhaseImage& img) {
    std::vector<uint8_t> labels(size_t(img.total()));
    for (int64_t y = 0; y < img.ny(); ++y)
        for (int64_t x = 0; x < img.nx(); ++x)
            labels[size_t(y * img.nx() + x)] = img.at(x, img.ny() - 1 - y);
    return PhaseImage::create(img.dims, img.pixel_pitch_nm, img.palette, std::move(labels),
                              img.orientation);
}

std::vector<PhaseImage> dihedral_variants(const PhaseImage& img) {
    std::vector<PhaseImage> out;
    out.reserve(8);
    for (int r = 0; r < 4; ++r) out.push_back(rotate90(img, r));
    const PhaseImage m = mirror_x(img);
    for (int r = 0; r < 4; ++r) out.push_back(rotate90(m, r));
    return out;
}

std::vector<PhaseImage> axis_preserving_variants(const PhaseImage& img) {
    return {img, mirror_x(img), mirror_y(img), mirror_y(mirror_x(img))};
}

namespace {

void check_common_palette(const std::vector<PhaseImage>& sources,
                          std::vector<std::string>& palette) {
    for (const auto& img : sources) {
        if (palette.empty()) palette = img.palette;
        require(img.palette == palette, Errc::invalid_argument,
                "slice pool sources disagree on the palette");
    }
}

} // namespace

HRSliceBank HRSliceBank::isotropic(const std::vector<PhaseImage>& sources) {
    require(!sources.empty(), Errc::invalid_argument, "slice pool needs at least one source");
    HRSliceBank bank;
    bank.isotropic_ = true;
    check_common_palette(sources, bank.palette_);
    bank.phase_count_ = int(bank.palette_.size());
    auto& pool = bank.pools_[Orientation::isotropic];
    for (const auto& img : sources)
        for (auto& v : dihedral_variants(img)) pool.push_back(std::move(v));
    return bank;
}

HRSliceBank HRSliceBank::anisotropic(const std::vector<PhaseImage>& xy,
                                     const std::vector<PhaseImage>& yz,
                                     const std::vector<PhaseImage>& xz) {
    require(!xy.empty() && !yz.empty() && !xz.empty(), Errc::invalid_argument,
            "anisotropic slice pool needs sources for all three orientations");
    HRSliceBank bank;
    bank.isotropic_ = false;
    check_common_palette(xy, bank.palette_);
    check_common_palette(yz, bank.palette_);
    check_common_palette(xz, bank.palette_);
    bank.phase_count_ = int(bank.palette_.size());
    const std::pair<Orientation, const std::vector<PhaseImage>*> groups[] = {
        {Orientation::xy, &xy}, {Orientation::yz, &yz}, {Orientation::xz, &xz}};
    for (const auto& [o, sources] : groups) {
        auto& pool = bank.pools_[o];
        for (const auto& img : *sources)
            for (auto& v : axis_preserving_variants(img)) pool.push_back(std::move(v));
    }
    return bank;
}

const std::vector<PhaseImage>& HRSliceBank::variants(Orientation o) const {
    if (isotropic_) return pools_.at(Orientation::isotropic);
    const auto it = pools_.find(o);
    require(it != pools_.end() && o != Orientation::isotropic, Errc::invalid_argument,
            "anisotropic slice pool has no variants for the requested orientation");
    return it->second;
}

OneHotField HRSliceBank::sample_patch(Orientation o, int64_t side, Rng& rng) const {
    const auto& pool = variants(o);
    const PhaseImage& img = pool[size_t(rng.below(uint64_t(pool.size())))];
    require(side >= 1 && side <= img.nx() && side <= img.ny(), Errc::invalid_argument,
            "patch side " + std::to_string(side) + " exceeds slice extent " +
                std::to_string(img.nx()) + "x" + std::to_string(img.ny()));
    const int64_t x0 = int64_t(rng.below(uint64_t(img.nx() - side + 1)));
    const int64_t y0 = int64_t(rng.below(uint64_t(img.ny() - side + 1)));
    OneHotField f(phase_count_, {side, side});
    for (int64_t y = 0; y < side; ++y)
        for (int64_t x = 0; x < side; ++x) f.at2(img.at(x0 + x, y0 + y), x, y) = 1.0f;
    return f;
}

OneHotField sample_cube(const PhaseVolume& v, int64_t side, Rng& rng) {
    require(side >= 1 && side <= v.nx() && side <= v.ny() && side <= v.nz(),
            Errc::invalid_argument,
            "cube side " + std::to_string(side) + " exceeds volume extent");
    const int64_t x0 = int64_t(rng.below(uint64_t(v.nx() - side + 1)));
    const int64_t y0 = int64_t(rng.below(uint64_t(v.ny() - side + 1)));
    const int64_t z0 = int64_t(rng.below(uint64_t(v.nz() - side + 1)));
    OneHotField f(v.phase_count(), {side, side, side});
    for (int64_t z = 0; z < side; ++z)
        for (int64_t y = 0; y < side; ++y)
            for (int64_t x = 0; x < side; ++x)
                f.at3(v.at(x0 + x, y0 + y, z0 + z), x, y, z) = 1.0f;
    return f;
}

} // namespace voxfuse
