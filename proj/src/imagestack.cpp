#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "volgrid.hpp"

namespace fs = std::filesystem;

namespace voxfuse {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace((unsigned char)s[a])) ++a;
    while (b > a && std::isspace((unsigned char)s[b - 1])) --b;
    return s.substr(a, b - a);
}

// Sidecar map: one "greyvalue = phase name" per line, '#' comments. Label
// indices follow file order.
struct PaletteMap {
    std::map<int, uint8_t> grey_to_label;
    std::vector<std::string> palette;
};

PaletteMap parse_palette_map(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot open palette map '" + path + "'");
    PaletteMap pm;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, Errc::format,
                path + ":" + std::to_string(line_no) + ": expected 'greyvalue = name'");
        const std::string key = trim(line.substr(0, eq));
        const std::string name = trim(line.substr(eq + 1));
        require(!name.empty(), Errc::format,
                path + ":" + std::to_string(line_no) + ": empty phase name");
        size_t pos = 0;
        int grey = 0;
        try {
            grey = std::stoi(key, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        require(pos == key.size() && grey >= 0 && grey <= 65535, Errc::format,
                path + ":" + std::to_string(line_no) + ": bad grey value '" + key + "'");
        require(!pm.grey_to_label.count(grey), Errc::format,
                path + ":" + std::to_string(line_no) + ": grey value " + key + " mapped twice");
        require(pm.palette.size() < 256, Errc::format,
                path + ": palette map exceeds 256 phases");
        pm.grey_to_label[grey] = uint8_t(pm.palette.size());
        pm.palette.push_back(name);
    }
    require(!pm.palette.empty(), Errc::format, path + ": palette map names no phases");
    return pm;
}

// Loads one slice as greyscale values. Accepts 8/16-bit single-channel
// images; colour images are accepted only when all channels agree.
cv::Mat load_grey(const std::string& path) {
    cv::Mat raw = cv::imread(path, cv::IMREAD_UNCHANGED);
    require(!raw.empty(), Errc::io, "cannot decode image '" + path + "'");
    require(raw.dims == 2, Errc::format, "'" + path + "': not a 2D image");
    const int depth = raw.depth();
    require(depth == CV_8U || depth == CV_16U, Errc::format,
            "'" + path + "': unsupported bit depth (need 8- or 16-bit unsigned)");
    if (raw.channels() == 1) return raw;
    require(raw.channels() == 3 || raw.channels() == 4, Errc::format,
            "'" + path + "': unsupported channel count");
    std::vector<cv::Mat> ch;
    cv::split(raw, ch);
    for (int c = 1; c < 3; ++c) {
        cv::Mat diff;
        cv::compare(ch[0], ch[size_t(c)], diff, cv::CMP_NE);
        require(cv::countNonZero(diff) == 0, Errc::format,
                "'" + path + "': colour image is not greyscale");
    }
    return ch[0];
}

} // namespace

PhaseVolume load_image_stack(const std::vector<std::string>& slice_paths,
                             const std::string& palette_map_path, double voxel_pitch_nm) {
    require(!slice_paths.empty(), Errc::invalid_argument, "image stack is empty");
    const PaletteMap pm = parse_palette_map(palette_map_path);

    const int64_t nz = int64_t(slice_paths.size());
    int64_t nx = 0, ny = 0;
    std::vector<uint8_t> labels;
    for (int64_t z = 0; z < nz; ++z) {
        const std::string& path = slice_paths[size_t(z)];
        cv::Mat grey = load_grey(path);
        if (z == 0) {
            nx = grey.cols;
            ny = grey.rows;
            labels.assign(size_t(nx * ny * nz), 0);
        } else {
            require(grey.cols == nx && grey.rows == ny, Errc::format,
                    "'" + path + "': slice size " + std::to_string(grey.cols) + "x" +
                        std::to_string(grey.rows) + " differs from first slice " +
                        std::to_string(nx) + "x" + std::to_string(ny));
        }
        for (int64_t y = 0; y < ny; ++y)
            for (int64_t x = 0; x < nx; ++x) {
                const int value = grey.depth() == CV_8U ? grey.at<uint8_t>(int(y), int(x))
                                                        : grey.at<uint16_t>(int(y), int(x));
                const auto it = pm.grey_to_label.find(value);
                require(it != pm.grey_to_label.end(), Errc::format,
                        "'" + path + "': grey value " + std::to_string(value) +
                            " missing from palette map");
                labels[size_t((z * ny + y) * nx + x)] = it->second;
            }
    }
    return PhaseVolume::create({nx, ny, nz}, voxel_pitch_nm, pm.palette, std::move(labels));
}

std::vector<std::string> list_image_stack(const std::string& directory) {
    require(fs::is_directory(directory), Errc::io,
            "'" + directory + "' is not a directory");
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return char(std::tolower(c)); });
        if (ext == ".png" || ext == ".tif" || ext == ".tiff")
            paths.push_back(entry.path().string());
    }
    require(!paths.empty(), Errc::io, "'" + directory + "' holds no .png/.tif/.tiff slices");
    std::sort(paths.begin(), paths.end());
    return paths;
}

void write_grey_png(const std::string& path, const PhaseImage& img) {
    const int phases = img.phase_count();
    cv::Mat out(int(img.ny()), int(img.nx()), CV_8U);
    for (int64_t y = 0; y < img.ny(); ++y)
        for (int64_t x = 0; x < img.nx(); ++x) {
            const int l = img.at(x, y);
            const int grey = phases > 1 ? l * 255 / (phases - 1) : 0;
            out.at<uint8_t>(int(y), int(x)) = uint8_t(grey);
        }
    require(cv::imwrite(path, out), Errc::io, "cannot write PNG '" + path + "'");
}

} // namespace voxfuse
