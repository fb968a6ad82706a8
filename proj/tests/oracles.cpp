#include "oracles.hpp"

#include <set>

#include "rng.hpp"

namespace voxfuse::oracle {

double volume_fraction(const PhaseVolume& v, int phase) {
    int64_t count = 0;
    for (int64_t z = 0; z < v.nz(); ++z)
        for (int64_t y = 0; y < v.ny(); ++y)
            for (int64_t x = 0; x < v.nx(); ++x)
                if (v.at(x, y, z) == phase) ++count;
    return double(count) / double(v.total());
}

double surface_area(const PhaseVolume& v, int phase_a, int phase_b) {
    int64_t hits = 0, pairs = 0;
    auto tally = [&](uint8_t l1, uint8_t l2) {
        ++pairs;
        if ((l1 == phase_a && l2 == phase_b) || (l1 == phase_b && l2 == phase_a)) ++hits;
    };
    for (int64_t z = 0; z < v.nz(); ++z)
        for (int64_t y = 0; y < v.ny(); ++y)
            for (int64_t x = 0; x < v.nx(); ++x) {
                if (x + 1 < v.nx()) tally(v.at(x, y, z), v.at(x + 1, y, z));
                if (y + 1 < v.ny()) tally(v.at(x, y, z), v.at(x, y + 1, z));
                if (z + 1 < v.nz()) tally(v.at(x, y, z), v.at(x, y, z + 1));
            }
    return double(hits) / double(pairs);
}

double tpb_density(const PhaseVolume& v) {
    int64_t hits = 0, edges = 0;
    // Edges parallel to `axis` sit between 2x2 voxel blocks in the two
    // perpendicular axes (u, w) and span one voxel along the axis itself.
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3, w = (axis + 2) % 3;
        std::array<int64_t, 3> n = v.dims;
        for (int64_t i = 0; i < n[size_t(axis)]; ++i)
            for (int64_t j = 1; j < n[size_t(u)]; ++j)
                for (int64_t k = 1; k < n[size_t(w)]; ++k) {
                    ++edges;
                    std::set<uint8_t> labels;
                    for (int dj = -1; dj <= 0; ++dj)
                        for (int dk = -1; dk <= 0; ++dk) {
                            std::array<int64_t, 3> p{};
                            p[size_t(axis)] = i;
                            p[size_t(u)] = j + dj;
                            p[size_t(w)] = k + dk;
                            labels.insert(v.at(p[0], p[1], p[2]));
                        }
                    if (labels.size() == 3) ++hits;
                }
    }
    return double(hits) / double(edges);
}

std::vector<double> two_point_correlation(const PhaseVolume& v, int phase_a, int phase_b,
                                          int axis, int64_t dmax) {
    std::vector<double> out;
    std::array<int64_t, 3> step{0, 0, 0};
    step[size_t(axis)] = 1;
    for (int64_t d = 0; d <= dmax; ++d) {
        int64_t hits = 0, pairs = 0;
        for (int64_t z = 0; z < v.nz(); ++z)
            for (int64_t y = 0; y < v.ny(); ++y)
                for (int64_t x = 0; x < v.nx(); ++x) {
                    const int64_t x2 = x + d * step[0], y2 = y + d * step[1], z2 = z + d * step[2];
                    if (x2 >= v.nx() || y2 >= v.ny() || z2 >= v.nz()) continue;
                    ++pairs;
                    if (v.at(x, y, z) == phase_a && v.at(x2, y2, z2) == phase_b) ++hits;
                }
        out.push_back(double(hits) / double(pairs));
    }
    return out;
}

std::vector<double> chord_length_distribution(const PhaseVolume& v, int phase, int axis,
                                              int64_t dmax) {
    std::vector<int64_t> tally(size_t(dmax) + 1, 0);
    int64_t phase_voxels = 0;
    for (int64_t z = 0; z < v.nz(); ++z)
        for (int64_t y = 0; y < v.ny(); ++y)
            for (int64_t x = 0; x < v.nx(); ++x)
                if (v.at(x, y, z) == phase) ++phase_voxels;

    const int u = (axis + 1) % 3, w = (axis + 2) % 3;
    std::array<int64_t, 3> n = v.dims;
    for (int64_t j = 0; j < n[size_t(u)]; ++j)
        for (int64_t k = 0; k < n[size_t(w)]; ++k) {
            const int64_t len = n[size_t(axis)];
            auto label_at = [&](int64_t i) {
                std::array<int64_t, 3> p{};
                p[size_t(axis)] = i;
                p[size_t(u)] = j;
                p[size_t(w)] = k;
                return v.at(p[0], p[1], p[2]);
            };
            int64_t i = 0;
            while (i < len) {
                if (label_at(i) != phase) {
                    ++i;
                    continue;
                }
                int64_t end = i;
                while (end + 1 < len && label_at(end + 1) == phase) ++end;
                const int64_t run = end - i + 1;
                const bool censored = i == 0 || end == len - 1;
                if (!censored && run <= dmax) tally[size_t(run)] += run;
                i = end + 1;
            }
        }

    std::vector<double> out;
    for (int64_t d = 1; d <= dmax; ++d)
        out.push_back(phase_voxels == 0 ? 0.0 : double(tally[size_t(d)]) / double(phase_voxels));
    return out;
}

PhaseVolume random_volume(std::array<int64_t, 3> dims, int phases, uint64_t seed) {
    Rng rng(seed);
    std::vector<uint8_t> labels(size_t(dims[0] * dims[1] * dims[2]));
    for (auto& l : labels) l = uint8_t(rng.below(uint64_t(phases)));
    std::vector<std::string> palette;
    for (int p = 0; p < phases; ++p) palette.push_back("phase" + std::to_string(p));
    return PhaseVolume::create(dims, 1.0, std::move(palette), std::move(labels));
}

} // namespace voxfuse::oracle
