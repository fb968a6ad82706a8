#include "synth.hpp"

#include <algorithm>
#include <cmath>

#include "netspec.hpp"
#include "rng.hpp"

namespace voxfuse {

namespace {

// Activation values over a global box [lo, hi) per axis, channel-major.
// Positions outside the layer's true extent hold explicit zeros.
struct BoxBuffer {
    std::array<int64_t, 3> lo{0, 0, 0};
    std::array<int64_t, 3> hi{0, 0, 0};
    int64_t channels = 0;
    std::vector<float> v;

    int64_t extent(int axis) const { return hi[size_t(axis)] - lo[size_t(axis)]; }
    int64_t sites() const { return extent(0) * extent(1) * extent(2); }
    // global coordinates; caller guarantees containment
    float at(int64_t c, int64_t gx, int64_t gy, int64_t gz) const {
        const int64_t x = gx - lo[0], y = gy - lo[1], z = gz - lo[2];
        return v[size_t(((c * extent(2) + z) * extent(1) + y) * extent(0) + x)];
    }
};

// (kernel tap, global source coordinate) pairs for one output coordinate,
// taps ascending. Shared between the whole-volume and tiled paths because
// they are keyed purely on the global output coordinate.
using TapList = std::vector<std::pair<int, int64_t>>;

std::vector<TapList> axis_taps(const LayerSpec& l, int64_t o_lo, int64_t o_hi) {
    std::vector<TapList> lists(size_t(o_hi - o_lo));
    for (int64_t o = o_lo; o < o_hi; ++o) {
        TapList& taps = lists[size_t(o - o_lo)];
        if (l.kind == LayerKind::conv) {
            for (int64_t k = 0; k < l.kernel; ++k)
                taps.emplace_back(int(k), o * l.stride - l.padding + k);
        } else {
            for (int64_t k = 0; k < l.kernel; ++k) {
                const int64_t num = o + l.padding - k;
                if (num % l.stride == 0) taps.emplace_back(int(k), num / l.stride);
            }
        }
    }
    return lists;
}

void softmax_site(std::vector<float>& v, int64_t channels, int64_t sites, int64_t site) {
    double m = v[size_t(site)];
    for (int64_t c = 1; c < channels; ++c)
        m = std::max(m, double(v[size_t(c * sites + site)]));
    double sum = 0.0;
    for (int64_t c = 0; c < channels; ++c)
        sum += std::exp(double(v[size_t(c * sites + site)]) - m);
    for (int64_t c = 0; c < channels; ++c) {
        const size_t i = size_t(c * sites + site);
        v[i] = float(std::exp(double(v[i]) - m) / sum);
    }
}

BoxBuffer eval_layer(const LayerSpec& l, const TensorBlob& weight, const TensorBlob& bias,
                     const BoxBuffer& in, std::array<int64_t, 3> out_lo,
                     std::array<int64_t, 3> out_hi, std::array<int64_t, 3> out_extent_global) {
    BoxBuffer out;
    out.lo = out_lo;
    out.hi = out_hi;
    out.channels = l.out_channels;
    out.v.assign(size_t(l.out_channels * out.sites()), 0.0f);

    const auto tx = axis_taps(l, out_lo[0], out_hi[0]);
    const auto ty = axis_taps(l, out_lo[1], out_hi[1]);
    const auto tz = axis_taps(l, out_lo[2], out_hi[2]);

    const float* w = weight.data.data();
    const int64_t K = l.kernel;
    const int64_t in_ch = l.in_channels, out_ch = l.out_channels;
    const int64_t xn = out.extent(0), yn = out.extent(1), zn = out.extent(2);

    for (int64_t oc = 0; oc < out_ch; ++oc) {
        for (int64_t oz = 0; oz < zn; ++oz) {
            const int64_t gz = out_lo[2] + oz;
            const bool z_live = gz >= 0 && gz < out_extent_global[2];
            for (int64_t oy = 0; oy < yn; ++oy) {
                const int64_t gy = out_lo[1] + oy;
                const bool y_live = z_live && gy >= 0 && gy < out_extent_global[1];
                float* row = out.v.data() + size_t(((oc * zn + oz) * yn + oy) * xn);
                for (int64_t ox = 0; ox < xn; ++ox) {
                    const int64_t gx = out_lo[0] + ox;
                    if (!y_live || gx < 0 || gx >= out_extent_global[0]) continue;
                    double acc = double(bias.data[size_t(oc)]);
                    // Fixed accumulation order: ic, kz, ky, kx ascending.
                    for (int64_t ic = 0; ic < in_ch; ++ic) {
                        const int64_t wc = l.kind == LayerKind::conv
                                               ? (oc * in_ch + ic) * K * K * K
                                               : (ic * out_ch + oc) * K * K * K;
                        for (const auto& [kz, iz] : tz[size_t(oz)]) {
                            const int64_t wz = wc + kz * K * K;
                            for (const auto& [ky, iy] : ty[size_t(oy)]) {
                                const int64_t wy = wz + ky * K;
                                for (const auto& [kx, ix] : tx[size_t(ox)])
                                    acc += double(w[size_t(wy + kx)]) *
                                           double(in.at(ic, ix, iy, iz));
                            }
                        }
                    }
                    float r = float(acc);
                    if (l.activation == Activation::relu) r = r > 0.0f ? r : 0.0f;
                    row[ox] = r;
                }
            }
        }
    }

    if (l.activation == Activation::softmax) {
        const int64_t sites = out.sites();
        for (int64_t oz = 0; oz < zn; ++oz) {
            const int64_t gz = out_lo[2] + oz;
            if (gz < 0 || gz >= out_extent_global[2]) continue;
            for (int64_t oy = 0; oy < yn; ++oy) {
                const int64_t gy = out_lo[1] + oy;
                if (gy < 0 || gy >= out_extent_global[1]) continue;
                for (int64_t ox = 0; ox < xn; ++ox) {
                    const int64_t gx = out_lo[0] + ox;
                    if (gx < 0 || gx >= out_extent_global[0]) continue;
                    softmax_site(out.v, out.channels, sites, (oz * yn + oy) * xn + ox);
                }
            }
        }
    }
    return out;
}

} // namespace

PlainGenerator::PlainGenerator(GeneratorSpec spec, std::vector<TensorBlob> params)
    : spec_(std::move(spec)), params_(std::move(params)) {
    require(params_.size() == spec_.layers.size() * 2, Errc::format,
            "generator expects " + std::to_string(spec_.layers.size() * 2) +
                " parameter blobs, got " + std::to_string(params_.size()));
    for (size_t i = 0; i < spec_.layers.size(); ++i) {
        const auto& l = spec_.layers[i];
        const int64_t w_numel = l.in_channels * l.out_channels * l.kernel * l.kernel * l.kernel;
        require(params_[2 * i].numel() == w_numel &&
                    int64_t(params_[2 * i].data.size()) == w_numel,
                Errc::format, "weight blob size mismatch at layer " + std::to_string(i));
        require(params_[2 * i + 1].numel() == l.out_channels, Errc::format,
                "bias blob size mismatch at layer " + std::to_string(i));
    }
}

PlainGenerator PlainGenerator::from_checkpoint(const Checkpoint& cp) {
    return PlainGenerator(cp.gen, cp.gen_params);
}

OneHotField PlainGenerator::run(const OneHotField& lr, uint64_t noise_seed) const {
    std::array<int64_t, 3> hi{};
    for (int a = 0; a < 3; ++a) hi[size_t(a)] = spec_.output_extent(lr.spatial()[size_t(a)]);
    return run_box(lr, noise_seed, {0, 0, 0}, hi);
}

OneHotField PlainGenerator::run_box(const OneHotField& lr, uint64_t noise_seed,
                                    std::array<int64_t, 3> lo, std::array<int64_t, 3> hi) const {
    require(lr.rank() == 3, Errc::invalid_argument, "expected a 3D low-res field");
    require(lr.channels() == spec_.lr_channels, Errc::invalid_argument,
            "low-res field has " + std::to_string(lr.channels()) + " channels, generator expects " +
                std::to_string(spec_.lr_channels));
    const auto& in_dims = lr.spatial();
    const size_t n_layers = spec_.layers.size();

    // Global extent of every layer's output.
    std::vector<std::array<int64_t, 3>> extents(n_layers + 1);
    extents[0] = {in_dims[0], in_dims[1], in_dims[2]};
    for (size_t L = 0; L < n_layers; ++L)
        for (int a = 0; a < 3; ++a)
            extents[L + 1][size_t(a)] = spec_.layers[L].out_extent(extents[L][size_t(a)]);
    for (int a = 0; a < 3; ++a)
        require(lo[size_t(a)] >= 0 && lo[size_t(a)] < hi[size_t(a)] &&
                    hi[size_t(a)] <= extents[n_layers][size_t(a)],
                Errc::invalid_argument, "output box outside the generated volume");

    // Interval chain: what part of each layer feeds the requested box.
    std::vector<std::array<std::array<int64_t, 2>, 3>> boxes(n_layers + 1);
    for (int a = 0; a < 3; ++a) boxes[n_layers][size_t(a)] = {lo[size_t(a)], hi[size_t(a)] - 1};
    for (size_t L = n_layers; L-- > 0;)
        for (int a = 0; a < 3; ++a)
            boxes[L][size_t(a)] = spec_.layers[L].input_interval(boxes[L + 1][size_t(a)][0],
                                                                 boxes[L + 1][size_t(a)][1]);

    // Materialize the input box: one-hot channels where inside the volume,
    // spatially-keyed noise, zeros beyond the boundary.
    BoxBuffer buf;
    for (int a = 0; a < 3; ++a) {
        buf.lo[size_t(a)] = boxes[0][size_t(a)][0];
        buf.hi[size_t(a)] = boxes[0][size_t(a)][1] + 1;
    }
    buf.channels = spec_.in_channels();
    buf.v.assign(size_t(buf.channels * buf.sites()), 0.0f);
    const int64_t bxn = buf.extent(0), byn = buf.extent(1), bzn = buf.extent(2);
    for (int64_t c = 0; c < buf.channels; ++c)
        for (int64_t z = 0; z < bzn; ++z)
            for (int64_t y = 0; y < byn; ++y)
                for (int64_t x = 0; x < bxn; ++x) {
                    const int64_t gx = buf.lo[0] + x, gy = buf.lo[1] + y, gz = buf.lo[2] + z;
                    if (gx < 0 || gx >= in_dims[0] || gy < 0 || gy >= in_dims[1] || gz < 0 ||
                        gz >= in_dims[2])
                        continue;
                    float value;
                    if (c < spec_.lr_channels)
                        value = lr.at3(c, gx, gy, gz);
                    else
                        value = float(
                            spatial_normal(noise_seed, c - spec_.lr_channels, gx, gy, gz));
                    buf.v[size_t(((c * bzn + z) * byn + y) * bxn + x)] = value;
                }

    for (size_t L = 0; L < n_layers; ++L) {
        std::array<int64_t, 3> out_lo{}, out_hi{};
        for (int a = 0; a < 3; ++a) {
            out_lo[size_t(a)] = boxes[L + 1][size_t(a)][0];
            out_hi[size_t(a)] = boxes[L + 1][size_t(a)][1] + 1;
        }
        buf = eval_layer(spec_.layers[L], params_[2 * L], params_[2 * L + 1], buf, out_lo,
                         out_hi, extents[L + 1]);
    }

    OneHotField out(spec_.out_channels,
                    {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
    out.values() = std::move(buf.v);
    return out;
}

int64_t boundary_crop_layers(ScaleFactor sf) { return (sf.num() + sf.den() - 1) / sf.den(); }

namespace {

void validate_synth(const Checkpoint& cp, const PhaseVolume& lr, int64_t tile_lr) {
    lr.validate();
    require(lr.palette == cp.lr_palette, Errc::invalid_argument,
            "low-res palette does not match the one this model was trained on");
    const ScaleFactor sf = cp.settings.scale();
    for (int a = 0; a < 3; ++a) {
        require(lr.dims[size_t(a)] >= cp.settings.input_side, Errc::invalid_argument,
                "low-res extent " + std::to_string(lr.dims[size_t(a)]) + " is below the minimum " +
                    std::to_string(cp.settings.input_side));
        require(lr.dims[size_t(a)] % sf.den() == 0, Errc::invalid_argument,
                "low-res extent " + std::to_string(lr.dims[size_t(a)]) +
                    " is not a multiple of the scale denominator " + std::to_string(sf.den()));
    }
    if (tile_lr > 0)
        require(tile_lr % sf.den() == 0, Errc::invalid_argument,
                "tile side must be a multiple of the scale denominator");
}

// Disjoint output boxes covering [0, out_dims), aligned to whole low-res
// voxels so noise and taps resolve identically in every tile.
std::vector<std::array<std::array<int64_t, 3>, 2>> tile_boxes(std::array<int64_t, 3> lr_dims,
                                                              std::array<int64_t, 3> out_dims,
                                                              ScaleFactor sf, int64_t tile_lr) {
    std::vector<std::array<std::array<int64_t, 3>, 2>> tiles;
    const int64_t num = sf.num(), den = sf.den();
    auto to_out = [&](int64_t lr_coord) { return lr_coord / den * num; };
    for (int64_t z = 0; z < lr_dims[2]; z += tile_lr)
        for (int64_t y = 0; y < lr_dims[1]; y += tile_lr)
            for (int64_t x = 0; x < lr_dims[0]; x += tile_lr) {
                std::array<int64_t, 3> lo{to_out(x), to_out(y), to_out(z)};
                std::array<int64_t, 3> hi{
                    std::min(to_out(x + tile_lr), out_dims[0]),
                    std::min(to_out(y + tile_lr), out_dims[1]),
                    std::min(to_out(z + tile_lr), out_dims[2]),
                };
                tiles.push_back({lo, hi});
            }
    return tiles;
}

} // namespace

OneHotField generate_probabilities(const Checkpoint& cp, const PhaseVolume& lr, uint64_t seed,
                                   int64_t tile_lr) {
    validate_synth(cp, lr, tile_lr);
    PlainGenerator gen = PlainGenerator::from_checkpoint(cp);
    OneHotField lr_field = one_hot_encode(lr);
    if (tile_lr <= 0) return gen.run(lr_field, seed);

    std::array<int64_t, 3> out_dims{};
    for (int a = 0; a < 3; ++a)
        out_dims[size_t(a)] = cp.gen.output_extent(lr.dims[size_t(a)]);
    OneHotField out(cp.gen.out_channels, {out_dims[0], out_dims[1], out_dims[2]});
    for (const auto& tile : tile_boxes(lr.dims, out_dims, cp.settings.scale(), tile_lr)) {
        OneHotField piece = gen.run_box(lr_field, seed, tile[0], tile[1]);
        const auto& sp = piece.spatial();
        for (int64_t c = 0; c < piece.channels(); ++c)
            for (int64_t z = 0; z < sp[2]; ++z)
                for (int64_t y = 0; y < sp[1]; ++y)
                    for (int64_t x = 0; x < sp[0]; ++x)
                        out.at3(c, tile[0][0] + x, tile[0][1] + y, tile[0][2] + z) =
                            piece.at3(c, x, y, z);
    }
    return out;
}

PhaseVolume generate_volume(const Checkpoint& cp, const PhaseVolume& lr,
                            const SynthOptions& options) {
    validate_synth(cp, lr, options.tile_lr);
    const ScaleFactor sf = cp.settings.scale();
    const int64_t crop = options.crop_boundary ? boundary_crop_layers(sf) : 0;

    std::array<int64_t, 3> raw_dims{};
    for (int a = 0; a < 3; ++a)
        raw_dims[size_t(a)] = cp.gen.output_extent(lr.dims[size_t(a)]);
    std::array<int64_t, 3> out_dims{};
    for (int a = 0; a < 3; ++a) {
        out_dims[size_t(a)] = raw_dims[size_t(a)] - 2 * crop;
        require(out_dims[size_t(a)] >= 1, Errc::invalid_argument,
                "volume too small to survive boundary cropping");
    }

    PlainGenerator gen = PlainGenerator::from_checkpoint(cp);
    OneHotField lr_field = one_hot_encode(lr);
    std::vector<uint8_t> labels(size_t(out_dims[0] * out_dims[1] * out_dims[2]), 0);

    auto boxes = options.tile_lr > 0
                     ? tile_boxes(lr.dims, raw_dims, sf, options.tile_lr)
                     : std::vector<std::array<std::array<int64_t, 3>, 2>>{
                           {std::array<int64_t, 3>{0, 0, 0}, raw_dims}};
    for (const auto& tile : boxes) {
        OneHotField piece = gen.run_box(lr_field, options.seed, tile[0], tile[1]);
        const auto& sp = piece.spatial();
        const int64_t sites = sp[0] * sp[1] * sp[2];
        for (int64_t z = 0; z < sp[2]; ++z) {
            const int64_t oz = tile[0][2] + z - crop;
            if (oz < 0 || oz >= out_dims[2]) continue;
            for (int64_t y = 0; y < sp[1]; ++y) {
                const int64_t oy = tile[0][1] + y - crop;
                if (oy < 0 || oy >= out_dims[1]) continue;
                for (int64_t x = 0; x < sp[0]; ++x) {
                    const int64_t ox = tile[0][0] + x - crop;
                    if (ox < 0 || ox >= out_dims[0]) continue;
                    const int64_t site = (z * sp[1] + y) * sp[0] + x;
                    int best = 0;
                    float best_v = piece.values()[size_t(site)];
                    for (int64_t c = 1; c < piece.channels(); ++c) {
                        const float v = piece.values()[size_t(c * sites + site)];
                        if (v > best_v) {
                            best_v = v;
                            best = int(c);
                        }
                    }
                    labels[size_t((oz * out_dims[1] + oy) * out_dims[0] + ox)] = uint8_t(best);
                }
            }
        }
    }

    return PhaseVolume::create(out_dims, lr.voxel_pitch_nm * double(sf.den()) / double(sf.num()),
                               cp.hr_palette, std::move(labels));
}

std::vector<PhaseVolume> generate_ensemble(const Checkpoint& cp, const PhaseVolume& lr,
                                           const std::vector<uint64_t>& seeds,
                                           bool crop_boundary, int64_t tile_lr) {
    require(!seeds.empty(), Errc::invalid_argument, "ensemble needs at least one seed");
    std::vector<PhaseVolume> volumes;
    volumes.reserve(seeds.size());
    for (uint64_t seed : seeds) {
        SynthOptions opt;
        opt.seed = seed;
        opt.crop_boundary = crop_boundary;
        opt.tile_lr = tile_lr;
        volumes.push_back(generate_volume(cp, lr, opt));
    }
    return volumes;
}

} // namespace voxfuse
