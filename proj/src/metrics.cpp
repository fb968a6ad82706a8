#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <numeric>

#include <fftw3.h>

#include "rng.hpp"

namespace voxfuse {

namespace {

void check_phase(int phase, int count) {
    require(phase >= 0 && phase < count, Errc::invalid_argument,
            "phase index " + std::to_string(phase) + " outside palette of " +
                std::to_string(count));
}

} // namespace

double volume_fraction(const PhaseVolume& v, int phase) {
    check_phase(phase, v.phase_count());
    int64_t n = 0;
    for (uint8_t l : v.labels) n += l == phase;
    return double(n) / double(v.total());
}

double volume_fraction(const PhaseImage& img, int phase) {
    check_phase(phase, img.phase_count());
    int64_t n = 0;
    for (uint8_t l : img.labels) n += l == phase;
    return double(n) / double(img.total());
}

double interphase_surface_area(const PhaseVolume& v, int phase_a, int phase_b) {
    check_phase(phase_a, v.phase_count());
    check_phase(phase_b, v.phase_count());
    require(phase_a != phase_b, Errc::invalid_argument, "surface area needs distinct phases");
    const int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
    int64_t hits = 0;
    auto pair = [&](uint8_t p, uint8_t q) {
        return (p == phase_a && q == phase_b) || (p == phase_b && q == phase_a);
    };
    for (int64_t z = 0; z < nz; ++z)
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t x = 0; x < nx; ++x) {
                const uint8_t l = v.at(x, y, z);
                if (x + 1 < nx) hits += pair(l, v.at(x + 1, y, z));
                if (y + 1 < ny) hits += pair(l, v.at(x, y + 1, z));
                if (z + 1 < nz) hits += pair(l, v.at(x, y, z + 1));
            }
    const int64_t pairs =
        (nx - 1) * ny * nz + nx * (ny - 1) * nz + nx * ny * (nz - 1);
    return pairs == 0 ? 0.0 : double(hits) / double(pairs);
}

double interphase_surface_area(const PhaseImage& img, int phase_a, int phase_b) {
    check_phase(phase_a, img.phase_count());
    check_phase(phase_b, img.phase_count());
    require(phase_a != phase_b, Errc::invalid_argument, "surface area needs distinct phases");
    const int64_t nx = img.nx(), ny = img.ny();
    int64_t hits = 0;
    auto pair = [&](uint8_t p, uint8_t q) {
        return (p == phase_a && q == phase_b) || (p == phase_b && q == phase_a);
    };
    for (int64_t y = 0; y < ny; ++y)
        for (int64_t x = 0; x < nx; ++x) {
            const uint8_t l = img.at(x, y);
            if (x + 1 < nx) hits += pair(l, img.at(x + 1, y));
            if (y + 1 < ny) hits += pair(l, img.at(x, y + 1));
        }
    const int64_t pairs = (nx - 1) * ny + nx * (ny - 1);
    return pairs == 0 ? 0.0 : double(hits) / double(pairs);
}

double tpb_density(const PhaseVolume& v) {
    require(v.phase_count() == 3, Errc::invalid_argument,
            "triple-phase boundary density is defined for exactly 3 phases, palette has " +
                std::to_string(v.phase_count()));
    const int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
    int64_t hits = 0;
    auto all_three = [](uint8_t a, uint8_t b, uint8_t c, uint8_t d) {
        const unsigned mask = (1u << a) | (1u << b) | (1u << c) | (1u << d);
        return mask == 0b111u;
    };
    // Edges parallel to z: surrounded by 4 voxels in the same z layer.
    for (int64_t z = 0; z < nz; ++z)
        for (int64_t y = 0; y + 1 < ny; ++y)
            for (int64_t x = 0; x + 1 < nx; ++x)
                hits += all_three(v.at(x, y, z), v.at(x + 1, y, z), v.at(x, y + 1, z),
                                  v.at(x + 1, y + 1, z));
    // Edges parallel to x.
    for (int64_t z = 0; z + 1 < nz; ++z)
        for (int64_t y = 0; y + 1 < ny; ++y)
            for (int64_t x = 0; x < nx; ++x)
                hits += all_three(v.at(x, y, z), v.at(x, y + 1, z), v.at(x, y, z + 1),
                                  v.at(x, y + 1, z + 1));
    // Edges parallel to y.
    for (int64_t z = 0; z + 1 < nz; ++z)
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t x = 0; x + 1 < nx; ++x)
                hits += all_three(v.at(x, y, z), v.at(x + 1, y, z), v.at(x, y, z + 1),
                                  v.at(x + 1, y, z + 1));
    const int64_t edges = (nx - 1) * (ny - 1) * nz + nx * (ny - 1) * (nz - 1) +
                          (nx - 1) * ny * (nz - 1);
    return edges == 0 ? 0.0 : double(hits) / double(edges);
}

namespace {

// Axis-agnostic view: coordinates (i, j, k) with k along the transport axis.
struct AxisView {
    const PhaseVolume* v = nullptr;
    int axis = 2;
    int64_t ni = 0, nj = 0, nk = 0;

    AxisView(const PhaseVolume& vol, int ax) : v(&vol), axis(ax) {
        const auto& d = vol.dims;
        switch (axis) {
        case 0: ni = d[1]; nj = d[2]; nk = d[0]; break;
        case 1: ni = d[0]; nj = d[2]; nk = d[1]; break;
        default: ni = d[0]; nj = d[1]; nk = d[2]; break;
        }
    }
    size_t index(int64_t i, int64_t j, int64_t k) const {
        switch (axis) {
        case 0: return v->index(k, i, j);
        case 1: return v->index(i, k, j);
        default: return v->index(i, j, k);
        }
    }
    uint8_t label(int64_t i, int64_t j, int64_t k) const { return v->labels[index(i, j, k)]; }
};

} // namespace

TransportResult transport_solve(const PhaseVolume& v, int phase, int axis,
                                const TransportOptions& opt) {
    check_phase(phase, v.phase_count());
    require(axis >= 0 && axis <= 2, Errc::invalid_argument, "transport axis must be 0, 1 or 2");
    const AxisView view(v, axis);
    const int64_t ni = view.ni, nj = view.nj, nk = view.nk;
    const int64_t total = ni * nj * nk;

    TransportResult res;
    res.volume_fraction = volume_fraction(v, phase);
    if (res.volume_fraction == 0.0) return res;

    // Flood fill from the inlet face through the phase; voxels outside the
    // inlet-connected component are treated as walls.
    std::vector<uint8_t> mask(size_t(total), 0); // indexed (k*nj + j)*ni + i
    auto midx = [&](int64_t i, int64_t j, int64_t k) { return size_t((k * nj + j) * ni + i); };
    std::deque<std::array<int64_t, 3>> queue;
    for (int64_t j = 0; j < nj; ++j)
        for (int64_t i = 0; i < ni; ++i)
            if (view.label(i, j, 0) == phase) {
                mask[midx(i, j, 0)] = 1;
                queue.push_back({i, j, 0});
            }
    while (!queue.empty()) {
        const auto [i, j, k] = queue.front();
        queue.pop_front();
        const int64_t di[6] = {1, -1, 0, 0, 0, 0};
        const int64_t dj[6] = {0, 0, 1, -1, 0, 0};
        const int64_t dk[6] = {0, 0, 0, 0, 1, -1};
        for (int t = 0; t < 6; ++t) {
            const int64_t a = i + di[t], b = j + dj[t], c = k + dk[t];
            if (a < 0 || a >= ni || b < 0 || b >= nj || c < 0 || c >= nk) continue;
            if (mask[midx(a, b, c)]) continue;
            if (view.label(a, b, c) != phase) continue;
            mask[midx(a, b, c)] = 1;
            queue.push_back({a, b, c});
        }
    }
    for (int64_t j = 0; j < nj && !res.percolating; ++j)
        for (int64_t i = 0; i < ni; ++i)
            if (mask[midx(i, j, nk - 1)]) {
                res.percolating = true;
                break;
            }
    if (!res.percolating) return res;

    // SOR on the masked domain, linear initial profile (exact for straight
    // geometry, so those converge on the first check).
    std::vector<double> c(size_t(total), 0.0);
    for (int64_t k = 0; k < nk; ++k) {
        const double init = 1.0 - (double(k) + 0.5) / double(nk);
        for (int64_t j = 0; j < nj; ++j)
            for (int64_t i = 0; i < ni; ++i)
                if (mask[midx(i, j, k)]) c[midx(i, j, k)] = init;
    }

    auto boundary_flux = [&](bool inlet) {
        double q = 0.0;
        const int64_t k = inlet ? 0 : nk - 1;
        for (int64_t j = 0; j < nj; ++j)
            for (int64_t i = 0; i < ni; ++i)
                if (mask[midx(i, j, k)])
                    q += inlet ? 2.0 * (1.0 - c[midx(i, j, k)]) : 2.0 * c[midx(i, j, k)];
        return q;
    };

    double last_q = boundary_flux(true);
    bool converged = false;
    int64_t sweeps = 0;
    while (sweeps < opt.max_sweeps && !converged) {
        const int64_t burst = std::min(opt.check_interval, opt.max_sweeps - sweeps);
        for (int64_t s = 0; s < burst; ++s) {
            for (int64_t k = 0; k < nk; ++k)
                for (int64_t j = 0; j < nj; ++j)
                    for (int64_t i = 0; i < ni; ++i) {
                        const size_t m = midx(i, j, k);
                        if (!mask[m]) continue;
                        double num = 0.0, den = 0.0;
                        if (i > 0 && mask[m - 1]) { num += c[m - 1]; den += 1.0; }
                        if (i + 1 < ni && mask[m + 1]) { num += c[m + 1]; den += 1.0; }
                        if (j > 0 && mask[m - size_t(ni)]) { num += c[m - size_t(ni)]; den += 1.0; }
                        if (j + 1 < nj && mask[m + size_t(ni)]) { num += c[m + size_t(ni)]; den += 1.0; }
                        if (k > 0 && mask[m - size_t(ni * nj)]) { num += c[m - size_t(ni * nj)]; den += 1.0; }
                        if (k + 1 < nk && mask[m + size_t(ni * nj)]) { num += c[m + size_t(ni * nj)]; den += 1.0; }
                        if (k == 0) { num += 2.0; den += 2.0; }           // inlet reservoir at C=1
                        if (k == nk - 1) { den += 2.0; }                   // outlet reservoir at C=0
                        if (den == 0.0) continue;                          // isolated cell, keep value
                        c[m] = (1.0 - opt.omega) * c[m] + opt.omega * num / den;
                    }
        }
        sweeps += burst;
        const double q_in = boundary_flux(true);
        const double q_out = boundary_flux(false);
        const double q = 0.5 * (q_in + q_out);
        const double denom = std::max(std::abs(q), 1e-30);
        if (std::abs(q - last_q) / denom < opt.rel_tol &&
            std::abs(q_in - q_out) / denom < opt.conservation_tol)
            converged = true;
        last_q = q;
    }
    res.converged = converged;
    res.sweeps = sweeps;

    // Per-plane fluxes: inlet half-links, nk-1 internal link planes, outlet.
    std::vector<double> planes;
    planes.reserve(size_t(nk + 1));
    planes.push_back(boundary_flux(true));
    for (int64_t k = 0; k + 1 < nk; ++k) {
        double q = 0.0;
        for (int64_t j = 0; j < nj; ++j)
            for (int64_t i = 0; i < ni; ++i)
                if (mask[midx(i, j, k)] && mask[midx(i, j, k + 1)])
                    q += c[midx(i, j, k)] - c[midx(i, j, k + 1)];
        planes.push_back(q);
    }
    planes.push_back(boundary_flux(false));

    const double mean_q = std::accumulate(planes.begin(), planes.end(), 0.0) /
                          double(planes.size());
    double spread = 0.0;
    for (double q : planes)
        spread = std::max(spread, std::abs(q - mean_q) / std::max(std::abs(mean_q), 1e-30));
    res.plane_flux_spread = spread;
    res.flux = mean_q;

    // efficiency = D_eff / D_bulk = Q * L / (A * dC), with unit spacing and dC = 1
    const double area = double(ni * nj);
    res.efficiency = mean_q * double(nk) / area;
    res.tortuosity = res.efficiency > 0.0 ? res.volume_fraction / res.efficiency : 0.0;
    require(res.converged, Errc::numeric,
            "transport solver did not converge within " + std::to_string(opt.max_sweeps) +
                " sweeps");
    return res;
}

double transport_efficiency(const PhaseVolume& v, int phase, int axis,
                            const TransportOptions& opt) {
    return transport_solve(v, phase, axis, opt).efficiency;
}

std::vector<double> two_point_correlation(const PhaseVolume& v, int phase_a, int phase_b,
                                          int axis, int64_t dmax) {
    check_phase(phase_a, v.phase_count());
    check_phase(phase_b, v.phase_count());
    require(axis >= 0 && axis <= 2, Errc::invalid_argument, "correlation axis must be 0, 1 or 2");
    const AxisView view(v, axis);
    require(dmax >= 0 && dmax < view.nk, Errc::invalid_argument,
            "correlation distance cap " + std::to_string(dmax) + " must stay below the axis extent " +
                std::to_string(view.nk));
    std::vector<double> s(size_t(dmax + 1), 0.0);
    for (int64_t d = 0; d <= dmax; ++d) {
        int64_t hits = 0;
        for (int64_t k = 0; k + d < view.nk; ++k)
            for (int64_t j = 0; j < view.nj; ++j)
                for (int64_t i = 0; i < view.ni; ++i)
                    hits += view.label(i, j, k) == phase_a && view.label(i, j, k + d) == phase_b;
        const int64_t sites = view.ni * view.nj * (view.nk - d);
        s[size_t(d)] = double(hits) / double(sites);
    }
    return s;
}

std::vector<double> chord_length_distribution(const PhaseVolume& v, int phase, int axis,
                                              int64_t dmax, bool include_censored) {
    check_phase(phase, v.phase_count());
    require(axis >= 0 && axis <= 2, Errc::invalid_argument, "chord axis must be 0, 1 or 2");
    const AxisView view(v, axis);
    require(dmax >= 1 && dmax < view.nk, Errc::invalid_argument,
            "chord length cap " + std::to_string(dmax) + " must stay below the axis extent " +
                std::to_string(view.nk));
    int64_t phase_voxels = 0;
    for (uint8_t l : v.labels) phase_voxels += l == phase;
    std::vector<double> p(size_t(dmax), 0.0); // p[d-1] for chord length d
    if (phase_voxels == 0) return p;

    for (int64_t j = 0; j < view.nj; ++j)
        for (int64_t i = 0; i < view.ni; ++i) {
            int64_t k = 0;
            while (k < view.nk) {
                if (view.label(i, j, k) != phase) {
                    ++k;
                    continue;
                }
                const int64_t start = k;
                while (k < view.nk && view.label(i, j, k) == phase) ++k;
                const int64_t len = k - start;
                const bool censored = start == 0 || k == view.nk;
                if (censored && !include_censored) continue;
                if (len <= dmax) p[size_t(len - 1)] += double(len);
            }
        }
    for (double& x : p) x /= double(phase_voxels);
    return p;
}

Distribution Distribution::from_samples(std::vector<double> samples) {
    require(!samples.empty(), Errc::invalid_argument, "distribution needs at least one sample");
    Distribution d;
    d.samples = std::move(samples);
    const double n = double(d.samples.size());
    d.mean = std::accumulate(d.samples.begin(), d.samples.end(), 0.0) / n;
    if (d.samples.size() >= 2) {
        double acc = 0.0;
        for (double x : d.samples) acc += (x - d.mean) * (x - d.mean);
        d.stddev = std::sqrt(acc / (n - 1.0));
    }
    return d;
}

void Distribution::check_consistent(double tol) const {
    const Distribution fresh = from_samples(samples);
    require(std::abs(fresh.mean - mean) <= tol && std::abs(fresh.stddev - stddev) <= tol,
            Errc::numeric, "distribution mean/std do not match the stored samples");
}

Distribution subvolume_distribution(const PhaseVolume& v, const MetricSpec& metric, int64_t n,
                                    int64_t size, uint64_t seed) {
    require(n >= 1, Errc::invalid_argument, "need at least one subvolume");
    for (int a = 0; a < 3; ++a)
        require(v.dims[size_t(a)] >= size, Errc::invalid_argument,
                "volume side " + std::to_string(v.dims[size_t(a)]) +
                    " smaller than sampling cube " + std::to_string(size));
    require(bool(metric.evaluate), Errc::invalid_argument, "metric spec has no evaluator");

    std::vector<double> samples(size_t(n), 0.0);
    for (int64_t i = 0; i < n; ++i) {
        // Per-index stream so evaluation order / worker count cannot matter.
        Rng rng(splitmix64(seed ^ splitmix64(uint64_t(i) + 0x632be59bd9b4e019ull)));
        const int64_t x0 = int64_t(rng.below(uint64_t(v.nx() - size + 1)));
        const int64_t y0 = int64_t(rng.below(uint64_t(v.ny() - size + 1)));
        const int64_t z0 = int64_t(rng.below(uint64_t(v.nz() - size + 1)));
        samples[size_t(i)] = metric.evaluate(extract_box(v, {x0, y0, z0}, {size, size, size}));
    }
    return Distribution::from_samples(std::move(samples));
}

std::vector<double> radial_fft_profile(const std::vector<double>& grey,
                                       std::array<int64_t, 2> dims) {
    const int64_t nx = dims[0], ny = dims[1];
    require(nx >= 2 && ny >= 2, Errc::invalid_argument,
            "spectral profile needs a full 2D image, got " + std::to_string(nx) + "x" +
                std::to_string(ny));
    require(int64_t(grey.size()) == nx * ny, Errc::invalid_argument,
            "image buffer does not match dims");

    std::vector<std::complex<double>> in(size_t(nx * ny)), out(size_t(nx * ny));
    for (size_t i = 0; i < grey.size(); ++i) in[i] = grey[i];
    fftw_plan plan = fftw_plan_dft_2d(int(ny), int(nx), // row-major: ny rows of nx
                                      reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()),
                                      FFTW_FORWARD, FFTW_ESTIMATE);
    require(plan != nullptr, Errc::internal, "FFT planning failed");
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    constexpr double floor_mag = 1e-12;
    const double norm = double(nx * ny);
    const int64_t rings = std::llround(std::hypot(double(nx / 2), double(ny / 2)));
    std::vector<double> sum(size_t(rings + 1), 0.0);
    std::vector<int64_t> count(size_t(rings + 1), 0);
    for (int64_t vfreq = 0; vfreq < ny; ++vfreq)
        for (int64_t u = 0; u < nx; ++u) {
            const double fu = u <= nx / 2 ? double(u) : double(u - nx);
            const double fv = vfreq <= ny / 2 ? double(vfreq) : double(vfreq - ny);
            const int64_t r = std::llround(std::hypot(fu, fv));
            if (r > rings) continue;
            const double mag = std::abs(out[size_t(vfreq * nx + u)]) / norm;
            sum[size_t(r)] += std::log10(mag + floor_mag);
            ++count[size_t(r)];
        }
    std::vector<double> profile(size_t(rings + 1));
    for (int64_t r = 0; r <= rings; ++r)
        profile[size_t(r)] =
            count[size_t(r)] > 0 ? sum[size_t(r)] / double(count[size_t(r)])
                                 : std::log10(floor_mag);
    return profile;
}

std::vector<double> radial_fft_profile(const PhaseImage& img) {
    std::vector<double> acc;
    for (int phase = 0; phase < img.phase_count(); ++phase) {
        std::vector<double> indicator(size_t(img.total()));
        for (size_t i = 0; i < indicator.size(); ++i)
            indicator[i] = img.labels[i] == phase ? 1.0 : 0.0;
        auto profile = radial_fft_profile(indicator, img.dims);
        if (acc.empty()) acc.assign(profile.size(), 0.0);
        for (size_t i = 0; i < profile.size(); ++i) acc[i] += profile[i];
    }
    for (double& x : acc) x /= double(img.phase_count());
    return acc;
}

double profile_band_mean(const std::vector<double>& profile, double lo_frac, double hi_frac) {
    require(!profile.empty() && lo_frac >= 0.0 && hi_frac <= 1.0 && lo_frac < hi_frac,
            Errc::invalid_argument, "bad band range");
    const int64_t n = int64_t(profile.size());
    int64_t lo = int64_t(std::ceil(lo_frac * double(n - 1)));
    int64_t hi = int64_t(std::floor(hi_frac * double(n - 1)));
    lo = std::clamp<int64_t>(lo, 0, n - 1);
    hi = std::clamp<int64_t>(hi, lo, n - 1);
    double acc = 0.0;
    for (int64_t i = lo; i <= hi; ++i) acc += profile[size_t(i)];
    return acc / double(hi - lo + 1);
}

} // namespace voxfuse
