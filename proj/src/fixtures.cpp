#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "rng.hpp"

namespace voxfuse {

namespace {

const std::vector<std::string> k_palette{"pore", "AM", "binder"};

struct Sphere {
    double x, y, z, r;
    double cx, cy, cz; // exposure-cap direction (unit)
};

} // namespace

PhaseVolume make_sphere_shell_fixture(int64_t side, uint64_t seed, double pitch_nm) {
    require(side >= 16, Errc::invalid_argument, "fixture side must be at least 16");
    Rng rng(seed);

    // Poisson-placed spheres sized for roughly 45% active material after
    // overlap; the shell adds a thin binder skin around every particle.
    const double r_min = double(side) * 0.08, r_max = double(side) * 0.15;
    const double mean_vol = 4.0 / 3.0 * 3.14159265358979323846 *
                            (std::pow(r_min, 3) + std::pow(r_max, 3)) / 2.0;
    const int64_t count =
        std::max<int64_t>(4, int64_t(0.62 * double(side * side * side) / mean_vol));
    const double shell = std::max(1.5, double(side) / 48.0);

    std::vector<Sphere> spheres;
    spheres.reserve(size_t(count));
    for (int64_t i = 0; i < count; ++i) {
        Sphere s;
        s.x = rng.uniform() * double(side);
        s.y = rng.uniform() * double(side);
        s.z = rng.uniform() * double(side);
        s.r = r_min + rng.uniform() * (r_max - r_min);
        // Direction of the uncoated patch; binder never coats perfectly, and
        // the exposed cap gives every phase pair a real interface.
        double nx = rng.normal(), ny = rng.normal(), nz = rng.normal();
        const double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
        if (norm > 1e-9) {
            s.cx = nx / norm, s.cy = ny / norm, s.cz = nz / norm;
        } else {
            s.cx = 0.0, s.cy = 0.0, s.cz = 1.0;
        }
        spheres.push_back(s);
    }

    std::vector<uint8_t> labels(size_t(side * side * side), 0);
    auto at = [&](int64_t x, int64_t y, int64_t z) -> uint8_t& {
        return labels[size_t((z * side + y) * side + x)];
    };
    // Uncoated solid-angle cap per sphere (dot(dir, cap) > cos means bare).
    const double cos_cap = 0.45;
    auto paint = [&](const Sphere& s, double radius, uint8_t phase, bool skip_cap) {
        const int64_t x0 = std::max<int64_t>(0, int64_t(std::floor(s.x - radius)));
        const int64_t x1 = std::min(side - 1, int64_t(std::ceil(s.x + radius)));
        const int64_t y0 = std::max<int64_t>(0, int64_t(std::floor(s.y - radius)));
        const int64_t y1 = std::min(side - 1, int64_t(std::ceil(s.y + radius)));
        const int64_t z0 = std::max<int64_t>(0, int64_t(std::floor(s.z - radius)));
        const int64_t z1 = std::min(side - 1, int64_t(std::ceil(s.z + radius)));
        const double r2 = radius * radius;
        for (int64_t z = z0; z <= z1; ++z)
            for (int64_t y = y0; y <= y1; ++y)
                for (int64_t x = x0; x <= x1; ++x) {
                    const double dx = double(x) + 0.5 - s.x;
                    const double dy = double(y) + 0.5 - s.y;
                    const double dz = double(z) + 0.5 - s.z;
                    const double d2 = dx * dx + dy * dy + dz * dz;
                    if (d2 > r2) continue;
                    if (skip_cap && d2 > 0.0 &&
                        (dx * s.cx + dy * s.cy + dz * s.cz) / std::sqrt(d2) > cos_cap)
                        continue;
                    at(x, y, z) = phase;
                }
    };
    for (const Sphere& s : spheres) paint(s, s.r + shell, 2, true); // skin, cap bare
    for (const Sphere& s : spheres) paint(s, s.r, 1, false);        // cores overwrite

    return PhaseVolume::create({side, side, side}, pitch_nm, k_palette, std::move(labels));
}

PhaseVolume make_lamellae_fixture(int64_t side, uint64_t seed, double pitch_nm) {
    require(side >= 16, Errc::invalid_argument, "fixture side must be at least 16");
    Rng rng(seed);

    std::vector<uint8_t> labels(size_t(side * side * side), 0);
    auto at = [&](int64_t x, int64_t y, int64_t z) -> uint8_t& {
        return labels[size_t((z * side + y) * side + x)];
    };

    // Alternating AM/pore slabs along z with jittered thicknesses and a
    // gently waving interface, so xy slices look nothing like xz/yz slices.
    const double base = std::max(3.0, double(side) / 12.0);
    double z_cursor = -rng.uniform() * base;
    bool solid = rng.uniform() < 0.5;
    std::vector<std::pair<double, bool>> slabs; // (end z, is AM)
    while (z_cursor < double(side) + base) {
        const double thickness = base * (0.7 + 0.6 * rng.uniform());
        z_cursor += thickness;
        slabs.emplace_back(z_cursor, solid);
        solid = !solid;
    }
    const double wave_amp = base * 0.35;
    const double wx = 2.0 * 3.14159265358979323846 * (1.0 + rng.uniform());
    const double wy = 2.0 * 3.14159265358979323846 * (1.0 + rng.uniform());
    auto slab_at = [&](double z) -> bool {
        for (const auto& [end, is_am] : slabs)
            if (z < end) return is_am;
        return slabs.empty() ? false : slabs.back().second;
    };
    for (int64_t z = 0; z < side; ++z)
        for (int64_t y = 0; y < side; ++y)
            for (int64_t x = 0; x < side; ++x) {
                const double warp =
                    wave_amp * (std::sin(wx * double(x) / double(side)) +
                                std::cos(wy * double(y) / double(side)));
                if (slab_at(double(z) + 0.5 + warp)) at(x, y, z) = 1;
            }

    // Binder fibrils: z-aligned rods through the pore space. Sized so the
    // binder lands at a few percent of the volume rather than a trace.
    const int64_t fibrils = std::max<int64_t>(6, side * side / 112);
    const double rod_r = std::max(1.5, double(side) / 48.0);
    for (int64_t i = 0; i < fibrils; ++i) {
        const double cx = rng.uniform() * double(side);
        const double cy = rng.uniform() * double(side);
        const int64_t x0 = std::max<int64_t>(0, int64_t(std::floor(cx - rod_r)));
        const int64_t x1 = std::min(side - 1, int64_t(std::ceil(cx + rod_r)));
        const int64_t y0 = std::max<int64_t>(0, int64_t(std::floor(cy - rod_r)));
        const int64_t y1 = std::min(side - 1, int64_t(std::ceil(cy + rod_r)));
        for (int64_t y = y0; y <= y1; ++y)
            for (int64_t x = x0; x <= x1; ++x) {
                const double dx = double(x) + 0.5 - cx, dy = double(y) + 0.5 - cy;
                if (dx * dx + dy * dy > rod_r * rod_r) continue;
                for (int64_t z = 0; z < side; ++z) {
                    uint8_t& cell = at(x, y, z);
                    if (cell == 0) cell = 2;
                }
            }
    }

    return PhaseVolume::create({side, side, side}, pitch_nm, k_palette, std::move(labels));
}

} // namespace voxfuse
