#include "volgrid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace voxfuse {

const char* orientation_name(Orientation o) {
    switch (o) {
    case Orientation::xy: return "xy";
    case Orientation::yz: return "yz";
    case Orientation::xz: return "xz";
    case Orientation::isotropic: return "isotropic";
    }
    fail(Errc::internal, "unknown orientation value");
}

Orientation orientation_from_name(const std::string& name) {
    if (name == "xy") return Orientation::xy;
    if (name == "yz") return Orientation::yz;
    if (name == "xz") return Orientation::xz;
    if (name == "isotropic") return Orientation::isotropic;
    fail(Errc::format, "unknown orientation '" + name + "'");
}

namespace {

void validate_palette(const std::vector<std::string>& palette) {
    require(!palette.empty(), Errc::invalid_argument, "palette must name at least one phase");
    require(palette.size() <= 256, Errc::invalid_argument, "palette exceeds 256 phases");
    std::set<std::string> seen;
    for (const auto& name : palette) {
        require(!name.empty(), Errc::invalid_argument, "palette contains an empty phase name");
        require(seen.insert(name).second, Errc::invalid_argument,
                "palette contains duplicate phase name '" + name + "'");
    }
}

void validate_labels(const std::vector<uint8_t>& labels, size_t expected, size_t phases) {
    require(labels.size() == expected, Errc::invalid_argument,
            "label buffer holds " + std::to_string(labels.size()) + " voxels, dims imply " +
                std::to_string(expected));
    for (uint8_t l : labels)
        require(l < phases, Errc::invalid_argument,
                "label out of range: " + std::to_string(int(l)) + " with " +
                    std::to_string(phases) + " palette entries");
}

} // namespace

PhaseVolume PhaseVolume::create(std::array<int64_t, 3> dims, double voxel_pitch_nm,
                                std::vector<std::string> palette, std::vector<uint8_t> labels) {
    PhaseVolume v;
    v.dims = dims;
    v.voxel_pitch_nm = voxel_pitch_nm;
    v.palette = std::move(palette);
    v.labels = std::move(labels);
    v.validate();
    return v;
}

void PhaseVolume::validate() const {
    for (int64_t d : dims)
        require(d >= 1, Errc::invalid_argument, "volume dimensions must be positive");
    require(voxel_pitch_nm > 0.0, Errc::invalid_argument, "voxel pitch must be positive");
    validate_palette(palette);
    validate_labels(labels, size_t(total()), palette.size());
}

PhaseImage PhaseImage::create(std::array<int64_t, 2> dims, double pixel_pitch_nm,
                              std::vector<std::string> palette, std::vector<uint8_t> labels,
                              Orientation orientation) {
    PhaseImage img;
    img.dims = dims;
    img.pixel_pitch_nm = pixel_pitch_nm;
    img.palette = std::move(palette);
    img.labels = std::move(labels);
    img.orientation = orientation;
    img.validate();
    return img;
}

void PhaseImage::validate() const {
    for (int64_t d : dims)
        require(d >= 1, Errc::invalid_argument, "image dimensions must be positive");
    require(pixel_pitch_nm > 0.0, Errc::invalid_argument, "pixel pitch must be positive");
    validate_palette(palette);
    validate_labels(labels, size_t(total()), palette.size());
}

OneHotField::OneHotField(int64_t channels, std::vector<int64_t> spatial)
    : channels_(channels), spatial_(std::move(spatial)) {
    require(channels_ >= 1, Errc::invalid_argument, "one-hot field needs at least one channel");
    require(spatial_.size() == 2 || spatial_.size() == 3, Errc::invalid_argument,
            "one-hot field must be 2D or 3D");
    int64_t n = 1;
    for (int64_t d : spatial_) {
        require(d >= 1, Errc::invalid_argument, "one-hot spatial dims must be positive");
        n *= d;
    }
    v_.assign(size_t(channels_ * n), 0.0f);
}

int64_t OneHotField::sites() const {
    int64_t n = 1;
    for (int64_t d : spatial_) n *= d;
    return n;
}

void OneHotField::check_normalized(double tol) const {
    const int64_t n = sites();
    for (int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int64_t c = 0; c < channels_; ++c) s += double(v_[size_t(c * n + i)]);
        require(std::abs(s - 1.0) <= tol, Errc::numeric,
                "one-hot field not normalized: site sum " + std::to_string(s));
    }
}

bool OneHotField::is_hard() const {
    for (float x : v_)
        if (x != 0.0f && x != 1.0f) return false;
    return true;
}

namespace {

OneHotField encode_labels(const std::vector<uint8_t>& labels, int64_t channels,
                          std::vector<int64_t> spatial) {
    OneHotField f(channels, std::move(spatial));
    const int64_t n = f.sites();
    auto& v = f.values();
    for (int64_t i = 0; i < n; ++i) v[size_t(labels[size_t(i)] * n + i)] = 1.0f;
    return f;
}

std::vector<uint8_t> decode_values(const OneHotField& f) {
    const int64_t n = f.sites();
    const int64_t ch = f.channels();
    const auto& v = f.values();
    std::vector<uint8_t> labels(size_t(n), 0);
    for (int64_t i = 0; i < n; ++i) {
        int64_t best = 0;
        float best_val = v[size_t(i)];
        for (int64_t c = 1; c < ch; ++c) {
            const float x = v[size_t(c * n + i)];
            if (x > best_val) { // strict: ties keep the lowest channel
                best_val = x;
                best = c;
            }
        }
        labels[size_t(i)] = uint8_t(best);
    }
    return labels;
}

} // namespace

OneHotField one_hot_encode(const PhaseVolume& v) {
    return encode_labels(v.labels, v.phase_count(), {v.dims[0], v.dims[1], v.dims[2]});
}

OneHotField one_hot_encode(const PhaseImage& img) {
    return encode_labels(img.labels, img.phase_count(), {img.dims[0], img.dims[1]});
}

PhaseVolume one_hot_decode_volume(const OneHotField& f, std::vector<std::string> palette,
                                  double voxel_pitch_nm) {
    require(f.rank() == 3, Errc::invalid_argument, "decode_volume needs a 3D field");
    require(int64_t(palette.size()) == f.channels(), Errc::invalid_argument,
            "palette size does not match channel count");
    const auto& s = f.spatial();
    return PhaseVolume::create({s[0], s[1], s[2]}, voxel_pitch_nm, std::move(palette),
                               decode_values(f));
}

PhaseImage one_hot_decode_image(const OneHotField& f, std::vector<std::string> palette,
                                double pixel_pitch_nm, Orientation orientation) {
    require(f.rank() == 2, Errc::invalid_argument, "decode_image needs a 2D field");
    require(int64_t(palette.size()) == f.channels(), Errc::invalid_argument,
            "palette size does not match channel count");
    const auto& s = f.spatial();
    return PhaseImage::create({s[0], s[1]}, pixel_pitch_nm, std::move(palette), decode_values(f),
                              orientation);
}

namespace {

// Validates the mapping and produces the merged palette (join names with '+'
// in source order when none is supplied).
std::vector<std::string> merged_palette(const std::vector<std::string>& palette,
                                        const std::vector<int>& mapping,
                                        std::vector<std::string> new_palette) {
    require(mapping.size() == palette.size(), Errc::invalid_argument,
            "merge mapping must cover every palette entry");
    int max_label = -1;
    for (int m : mapping) {
        require(m >= 0, Errc::invalid_argument, "merge mapping contains a negative label");
        max_label = std::max(max_label, m);
    }
    const int k = max_label + 1;
    std::vector<bool> hit(size_t(k), false);
    for (int m : mapping) hit[size_t(m)] = true;
    for (int i = 0; i < k; ++i)
        require(hit[size_t(i)], Errc::invalid_argument,
                "merge mapping image must be contiguous: label " + std::to_string(i) + " unused");
    if (new_palette.empty()) {
        new_palette.assign(size_t(k), "");
        for (size_t i = 0; i < mapping.size(); ++i) {
            auto& name = new_palette[size_t(mapping[i])];
            if (!name.empty()) name += '+';
            name += palette[i];
        }
    }
    require(int(new_palette.size()) == k, Errc::invalid_argument,
            "merged palette size does not match mapping image");
    validate_palette(new_palette);
    return new_palette;
}

std::vector<uint8_t> remap(const std::vector<uint8_t>& labels, const std::vector<int>& mapping) {
    std::vector<uint8_t> out(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) out[i] = uint8_t(mapping[labels[i]]);
    return out;
}

} // namespace

PhaseVolume merge_phases(const PhaseVolume& v, const std::vector<int>& mapping,
                         std::vector<std::string> new_palette) {
    auto pal = merged_palette(v.palette, mapping, std::move(new_palette));
    return PhaseVolume::create(v.dims, v.voxel_pitch_nm, std::move(pal), remap(v.labels, mapping));
}

PhaseImage merge_phases(const PhaseImage& img, const std::vector<int>& mapping,
                        std::vector<std::string> new_palette) {
    auto pal = merged_palette(img.palette, mapping, std::move(new_palette));
    return PhaseImage::create(img.dims, img.pixel_pitch_nm, std::move(pal),
                              remap(img.labels, mapping), img.orientation);
}

int palette_index(const std::vector<std::string>& palette, const std::string& name) {
    const auto it = std::find(palette.begin(), palette.end(), name);
    require(it != palette.end(), Errc::invalid_argument,
            "phase '" + name + "' is not in the palette");
    return int(it - palette.begin());
}

PhaseVolume extract_box(const PhaseVolume& v, std::array<int64_t, 3> origin,
                        std::array<int64_t, 3> size) {
    for (int a = 0; a < 3; ++a) {
        require(size[size_t(a)] >= 1, Errc::invalid_argument, "box size must be positive");
        require(origin[size_t(a)] >= 0 &&
                    origin[size_t(a)] + size[size_t(a)] <= v.dims[size_t(a)],
                Errc::invalid_argument, "box exceeds volume bounds");
    }
    std::vector<uint8_t> labels(size_t(size[0] * size[1] * size[2]));
    for (int64_t z = 0; z < size[2]; ++z)
        for (int64_t y = 0; y < size[1]; ++y)
            for (int64_t x = 0; x < size[0]; ++x)
                labels[size_t((z * size[1] + y) * size[0] + x)] =
                    v.at(origin[0] + x, origin[1] + y, origin[2] + z);
    return PhaseVolume::create(size, v.voxel_pitch_nm, v.palette, std::move(labels));
}

PhaseImage extract_slice(const PhaseVolume& v, int axis, int64_t index) {
    require(axis >= 0 && axis <= 2, Errc::invalid_argument, "slice axis must be 0, 1 or 2");
    require(index >= 0 && index < v.dims[size_t(axis)], Errc::invalid_argument,
            "slice index " + std::to_string(index) + " outside axis extent " +
                std::to_string(v.dims[size_t(axis)]));
    std::array<int64_t, 2> dims{};
    Orientation o{};
    switch (axis) {
    case 0: dims = {v.dims[1], v.dims[2]}; o = Orientation::yz; break;
    case 1: dims = {v.dims[0], v.dims[2]}; o = Orientation::xz; break;
    default: dims = {v.dims[0], v.dims[1]}; o = Orientation::xy; break;
    }
    std::vector<uint8_t> labels(size_t(dims[0] * dims[1]));
    for (int64_t b = 0; b < dims[1]; ++b)
        for (int64_t a = 0; a < dims[0]; ++a) {
            uint8_t l;
            switch (axis) {
            case 0: l = v.at(index, a, b); break;
            case 1: l = v.at(a, index, b); break;
            default: l = v.at(a, b, index); break;
            }
            labels[size_t(b * dims[0] + a)] = l;
        }
    return PhaseImage::create(dims, v.voxel_pitch_nm, v.palette, std::move(labels), o);
}

std::vector<PhaseImage> extract_facets(const PhaseVolume& v) {
    std::vector<PhaseImage> facets;
    facets.reserve(6);
    for (int axis = 0; axis < 3; ++axis) {
        facets.push_back(extract_slice(v, axis, 0));
        facets.push_back(extract_slice(v, axis, v.dims[size_t(axis)] - 1));
    }
    return facets;
}

namespace {

constexpr const char* k_magic = "VOXFUSE1";

void write_container(const std::string& path, const json& header,
                     const std::vector<uint8_t>& payload) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), Errc::io, "cannot open '" + path + "' for writing");
    out << k_magic << '\n' << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(payload.data()),
              std::streamsize(payload.size()));
    out.flush();
    require(out.good(), Errc::io, "short write to '" + path + "'");
}

json read_container(const std::string& path, std::vector<uint8_t>& payload) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), Errc::io, "cannot open '" + path + "' for reading");
    std::string magic, header_line;
    std::getline(in, magic);
    require(in.good() && magic == k_magic, Errc::format,
            "'" + path + "' is not a voxfuse container (bad magic)");
    std::getline(in, header_line);
    require(in.good(), Errc::format, "'" + path + "': missing container header");
    json header = json::parse(header_line, nullptr, false);
    require(!header.is_discarded() && header.is_object(), Errc::format,
            "'" + path + "': malformed container header");
    payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return header;
}

json palette_json(const std::vector<std::string>& palette) {
    return json(palette);
}

std::vector<std::string> palette_from_json(const json& j) {
    require(j.is_array(), Errc::format, "container palette must be an array");
    std::vector<std::string> palette;
    for (const auto& e : j) {
        require(e.is_string(), Errc::format, "container palette entries must be strings");
        palette.push_back(e.get<std::string>());
    }
    return palette;
}

std::vector<int64_t> dims_from_json(const json& j, size_t rank) {
    require(j.is_array() && j.size() == rank, Errc::format,
            "container dims must be an array of " + std::to_string(rank));
    std::vector<int64_t> dims;
    for (const auto& e : j) {
        require(e.is_number_integer(), Errc::format, "container dims must be integers");
        dims.push_back(e.get<int64_t>());
    }
    return dims;
}

} // namespace

void save_volume(const PhaseVolume& v, const std::string& path) {
    v.validate();
    json header{{"kind", "volume"},
                {"dims", json::array({v.dims[0], v.dims[1], v.dims[2]})},
                {"voxel_pitch_nm", v.voxel_pitch_nm},
                {"palette", palette_json(v.palette)},
                {"encoding", "u8"},
                {"axis_order", "x-fastest"}};
    write_container(path, header, v.labels);
}

PhaseVolume load_volume(const std::string& path) {
    std::vector<uint8_t> payload;
    json header = read_container(path, payload);
    require(header.value("kind", "") == "volume", Errc::format,
            "'" + path + "' does not hold a volume");
    require(header.value("encoding", "") == "u8", Errc::format,
            "'" + path + "': unsupported encoding");
    auto dims = dims_from_json(header.at("dims"), 3);
    const int64_t expected = dims[0] * dims[1] * dims[2];
    require(int64_t(payload.size()) == expected, Errc::format,
            "'" + path + "': truncated payload (" + std::to_string(payload.size()) +
                " bytes, header implies " + std::to_string(expected) + ")");
    return PhaseVolume::create({dims[0], dims[1], dims[2]},
                               header.value("voxel_pitch_nm", 1.0),
                               palette_from_json(header.at("palette")), std::move(payload));
}

void save_image(const PhaseImage& img, const std::string& path) {
    img.validate();
    json header{{"kind", "image"},
                {"dims", json::array({img.dims[0], img.dims[1]})},
                {"pixel_pitch_nm", img.pixel_pitch_nm},
                {"palette", palette_json(img.palette)},
                {"encoding", "u8"},
                {"axis_order", "x-fastest"},
                {"orientation", orientation_name(img.orientation)}};
    write_container(path, header, img.labels);
}

PhaseImage load_image(const std::string& path) {
    std::vector<uint8_t> payload;
    json header = read_container(path, payload);
    require(header.value("kind", "") == "image", Errc::format,
            "'" + path + "' does not hold an image");
    require(header.value("encoding", "") == "u8", Errc::format,
            "'" + path + "': unsupported encoding");
    auto dims = dims_from_json(header.at("dims"), 2);
    const int64_t expected = dims[0] * dims[1];
    require(int64_t(payload.size()) == expected, Errc::format,
            "'" + path + "': truncated payload (" + std::to_string(payload.size()) +
                " bytes, header implies " + std::to_string(expected) + ")");
    return PhaseImage::create({dims[0], dims[1]}, header.value("pixel_pitch_nm", 1.0),
                              palette_from_json(header.at("palette")), std::move(payload),
                              orientation_from_name(header.value("orientation", "isotropic")));
}

} // namespace voxfuse
