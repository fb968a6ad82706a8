#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rng.hpp"
#include "scale.hpp"
#include "volgrid.hpp"

namespace voxfuse {

// Gaussian blur parameters tied to a scale factor: the largest odd kernel
// side not exceeding ceil(sf), with sigma = 0.3*((k-1)*0.5 - 1) + 0.8.
struct BlurSpec {
    int kernel = 1;
    double sigma = 0.0;
};

BlurSpec kernel_for(double scale_factor);

// Normalized 1D Gaussian taps of odd length k.
std::vector<double> gaussian_taps(int kernel, double sigma);

enum class BoundaryMode { reflect, wrap }; // reflect = mirror without edge repeat

// Fold an out-of-range position p into [0, n) under the boundary rule.
int64_t map_index(int64_t p, int64_t n, BoundaryMode mode);

// In-place separable blur over an x-fastest f64 grid. kernel == 1 is the
// identity.
void gaussian_blur_3d(std::vector<double>& grid, std::array<int64_t, 3> dims,
                      const BlurSpec& blur, BoundaryMode boundary);

// One axis of an align_corners=false linear resample: output i reads input
// coordinate (i + 0.5) * (in/out) - 0.5, clamped to the valid range.
struct LinearSample {
    int64_t lo = 0, hi = 0;
    double w_lo = 1.0, w_hi = 0.0;
};

std::vector<LinearSample> linear_sample_plan(int64_t in, int64_t out);

// Trilinear resample of an x-fastest f64 grid onto out_dims.
std::vector<double> trilinear_resample(const std::vector<double>& grid,
                                       std::array<int64_t, 3> in_dims,
                                       std::array<int64_t, 3> out_dims);

// How a high-res label volume is turned into a plausible low-res one.
//  * under_resolved: binarize (exactly two classes after merging), blur at
//    kernel_for(sf), trilinear downsample, threshold at 0.5 (ties -> phase 1).
//  * under_sampled: keep all classes, pick the nearest source voxel on a
//    stride-sf lattice (no blur).
enum class DegradeMode { under_resolved, under_sampled };

struct DegradeSpec {
    DegradeMode mode = DegradeMode::under_resolved;
    ScaleFactor scale = ScaleFactor::from_input_side(16);
    // Optional relabeling applied first (mapping[old] = new); empty = identity.
    std::vector<int> merge_mapping;
    std::vector<std::string> merged_palette;
    BoundaryMode boundary = BoundaryMode::reflect;
};

// Dims that do not shrink exactly are cropped (leading region kept) to the
// largest extent that does.
PhaseVolume simulate_low_res(const PhaseVolume& high_res, const DegradeSpec& spec);

// 2D label-image symmetries.
PhaseImage rotate90(const PhaseImage& img, int times); // counter-clockwise quarter turns
PhaseImage mirror_x(const PhaseImage& img);
PhaseImage mirror_y(const PhaseImage& img);

// The 8 dihedral variants: id, r90, r180, r270, m, m*r90, m*r180, m*r270.
std::vector<PhaseImage> dihedral_variants(const PhaseImage& img);
// The 4 variants that keep each image axis on its own volume axis:
// id, mirror_x, mirror_y, rot180.
std::vector<PhaseImage> axis_preserving_variants(const PhaseImage& img);

// Pool of augmented high-res training slices. Isotropic pools serve every
// orientation from one set (8 variants per source); anisotropic pools keep
// one set per orientation (4 axis-preserving variants per source).
class HRSliceBank {
public:
    static HRSliceBank isotropic(const std::vector<PhaseImage>& sources);
    static HRSliceBank anisotropic(const std::vector<PhaseImage>& xy,
                                   const std::vector<PhaseImage>& yz,
                                   const std::vector<PhaseImage>& xz);

    bool is_isotropic() const { return isotropic_; }
    int phase_count() const { return phase_count_; }
    const std::vector<std::string>& palette() const { return palette_; }
    const std::vector<PhaseImage>& variants(Orientation o) const;

    // Uniformly random variant + uniformly random side*side window, one-hot.
    OneHotField sample_patch(Orientation o, int64_t side, Rng& rng) const;

private:
    bool isotropic_ = true;
    int phase_count_ = 0;
    std::vector<std::string> palette_;
    std::map<Orientation, std::vector<PhaseImage>> pools_;
};

// Uniformly random side^3 cube from a label volume, one-hot.
OneHotField sample_cube(const PhaseVolume& v, int64_t side, Rng& rng);

} // namespace voxfuse
