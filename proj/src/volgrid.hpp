#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace voxfuse {

// Orientation of a 2D phase image relative to the volume axes it came from.
enum class Orientation { xy, yz, xz, isotropic };

const char* orientation_name(Orientation o);
Orientation orientation_from_name(const std::string& name);

// Dense 3D grid of phase labels, x fastest. The universal currency of the
// pipeline; treated as immutable once built.
struct PhaseVolume {
    std::array<int64_t, 3> dims{0, 0, 0}; // nx, ny, nz
    double voxel_pitch_nm = 1.0;
    std::vector<std::string> palette;
    std::vector<uint8_t> labels;

    static PhaseVolume create(std::array<int64_t, 3> dims, double voxel_pitch_nm,
                              std::vector<std::string> palette, std::vector<uint8_t> labels);

    int64_t nx() const { return dims[0]; }
    int64_t ny() const { return dims[1]; }
    int64_t nz() const { return dims[2]; }
    int64_t total() const { return dims[0] * dims[1] * dims[2]; }
    int phase_count() const { return (int)palette.size(); }

    size_t index(int64_t x, int64_t y, int64_t z) const {
        return size_t((z * dims[1] + y) * dims[0] + x);
    }
    uint8_t at(int64_t x, int64_t y, int64_t z) const { return labels[index(x, y, z)]; }
    uint8_t& at(int64_t x, int64_t y, int64_t z) { return labels[index(x, y, z)]; }

    void validate() const;
};

struct PhaseImage {
    std::array<int64_t, 2> dims{0, 0}; // nx, ny
    double pixel_pitch_nm = 1.0;
    std::vector<std::string> palette;
    std::vector<uint8_t> labels;
    Orientation orientation = Orientation::isotropic;

    static PhaseImage create(std::array<int64_t, 2> dims, double pixel_pitch_nm,
                             std::vector<std::string> palette, std::vector<uint8_t> labels,
                             Orientation orientation = Orientation::isotropic);

    int64_t nx() const { return dims[0]; }
    int64_t ny() const { return dims[1]; }
    int64_t total() const { return dims[0] * dims[1]; }
    int phase_count() const { return (int)palette.size(); }

    size_t index(int64_t x, int64_t y) const { return size_t(y * dims[0] + x); }
    uint8_t at(int64_t x, int64_t y) const { return labels[index(x, y)]; }
    uint8_t& at(int64_t x, int64_t y) { return labels[index(x, y)]; }

    void validate() const;
};

// Per-site probability channels, channel-major: [c][z][y][x] (z absent for 2D).
class OneHotField {
public:
    OneHotField() = default;
    OneHotField(int64_t channels, std::vector<int64_t> spatial);

    int64_t channels() const { return channels_; }
    int rank() const { return (int)spatial_.size(); }
    const std::vector<int64_t>& spatial() const { return spatial_; }
    int64_t sites() const;

    float& at3(int64_t c, int64_t x, int64_t y, int64_t z) {
        return v_[size_t(((c * spatial_[2] + z) * spatial_[1] + y) * spatial_[0] + x)];
    }
    float at3(int64_t c, int64_t x, int64_t y, int64_t z) const {
        return v_[size_t(((c * spatial_[2] + z) * spatial_[1] + y) * spatial_[0] + x)];
    }
    float& at2(int64_t c, int64_t x, int64_t y) {
        return v_[size_t((c * spatial_[1] + y) * spatial_[0] + x)];
    }
    float at2(int64_t c, int64_t x, int64_t y) const {
        return v_[size_t((c * spatial_[1] + y) * spatial_[0] + x)];
    }

    std::vector<float>& values() { return v_; }
    const std::vector<float>& values() const { return v_; }

    // sum-to-one within tol at every site
    void check_normalized(double tol = 1e-6) const;
    bool is_hard() const;

private:
    int64_t channels_ = 0;
    std::vector<int64_t> spatial_;
    std::vector<float> v_;
};

OneHotField one_hot_encode(const PhaseVolume& v);
OneHotField one_hot_encode(const PhaseImage& img);

// Per-site argmax; ties break toward the lowest channel index.
PhaseVolume one_hot_decode_volume(const OneHotField& f, std::vector<std::string> palette,
                                  double voxel_pitch_nm);
PhaseImage one_hot_decode_image(const OneHotField& f, std::vector<std::string> palette,
                                double pixel_pitch_nm,
                                Orientation orientation = Orientation::isotropic);

// mapping[old_label] = new_label; must cover the palette and its image must be
// a contiguous 0..k-1. Empty new_palette derives names by joining sources
// with '+'.
PhaseVolume merge_phases(const PhaseVolume& v, const std::vector<int>& mapping,
                         std::vector<std::string> new_palette = {});
PhaseImage merge_phases(const PhaseImage& img, const std::vector<int>& mapping,
                        std::vector<std::string> new_palette = {});

// Index of a named phase in a palette; errors when absent.
int palette_index(const std::vector<std::string>& palette, const std::string& name);

// Axis-aligned sub-box copy (same palette and pitch).
PhaseVolume extract_box(const PhaseVolume& v, std::array<int64_t, 3> origin,
                        std::array<int64_t, 3> size);

// Plane normal to `axis` (0=x,1=y,2=z) at `index`. Orientation: x->yz, y->xz, z->xy.
PhaseImage extract_slice(const PhaseVolume& v, int axis, int64_t index);

// The six boundary planes, ordered x-,x+,y-,y+,z-,z+.
std::vector<PhaseImage> extract_facets(const PhaseVolume& v);

// Container I/O: "VOXFUSE1" magic line, one-line JSON header, raw u8 payload,
// x fastest. Bit-exact round trip.
void save_volume(const PhaseVolume& v, const std::string& path);
PhaseVolume load_volume(const std::string& path);
void save_image(const PhaseImage& img, const std::string& path);
PhaseImage load_image(const std::string& path);

// Greyscale image-stack ingestion (PNG/TIFF, one image per z-slice) with a
// sidecar "greyvalue=label" map. Paths are taken in the given order.
PhaseVolume load_image_stack(const std::vector<std::string>& slice_paths,
                             const std::string& palette_map_path, double voxel_pitch_nm);

// Sorted expansion of a directory (all .png/.tif/.tiff files).
std::vector<std::string> list_image_stack(const std::string& directory);

// 8-bit greyscale preview writers used by report emission.
void write_grey_png(const std::string& path, const PhaseImage& img);

} // namespace voxfuse
