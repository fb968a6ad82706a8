#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "scale.hpp"

namespace voxfuse {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(uint8_t(s[a]))) ++a;
    while (b > a && std::isspace(uint8_t(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

int64_t to_int(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const int64_t r = std::stoll(v, &used);
        require(used == v.size(), Errc::format, "");
        return r;
    } catch (...) {
        fail(Errc::format, "config key '" + key + "': '" + v + "' is not an integer");
    }
}

uint64_t to_uint(const std::string& key, const std::string& v) {
    const int64_t r = to_int(key, v);
    require(r >= 0, Errc::format, "config key '" + key + "' cannot be negative");
    return uint64_t(r);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double r = std::stod(v, &used);
        require(used == v.size(), Errc::format, "");
        return r;
    } catch (...) {
        fail(Errc::format, "config key '" + key + "': '" + v + "' is not a number");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(Errc::format, "config key '" + key + "': '" + v + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T, typename Fn>
void take(const std::map<std::string, std::string>& kv, const std::string& key, T& dst, Fn&& fn) {
    auto it = kv.find(key);
    if (it != kv.end()) dst = fn(key, it->second);
}

} // namespace

std::map<std::string, std::string> parse_ini(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            require(line.back() == ']', Errc::format,
                    "config line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            require(!section.empty(), Errc::format,
                    "config line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const size_t eq = line.find('=');
        require(eq != std::string::npos, Errc::format,
                "config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), Errc::format,
                "config line " + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        require(!kv.count(full), Errc::format,
                "config line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
        kv[full] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::map<std::string, std::string> load_ini(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_ini(buf.str());
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_ini(load_ini(path));
}

ExperimentConfig ExperimentConfig::from_ini(const std::map<std::string, std::string>& kv) {
    ExperimentConfig cfg;
    auto str = [](const std::string&, const std::string& v) { return v; };

    take(kv, "data.lr_volume", cfg.lr_volume, str);
    take(kv, "data.hr_volume", cfg.hr_volume, str);
    take(kv, "data.hr_slices", cfg.hr_slices, str);
    take(kv, "data.hr_slices_yz", cfg.hr_slices_yz, str);
    take(kv, "data.hr_slices_xz", cfg.hr_slices_xz, str);
    take(kv, "data.palette_map", cfg.palette_map, str);
    take(kv, "data.voxel_pitch_nm", cfg.voxel_pitch_nm, to_double);

    take(kv, "prepare.fixture", cfg.fixture, str);
    take(kv, "prepare.fixture_side", cfg.fixture_side, to_int);
    take(kv, "prepare.fixture_seed", cfg.fixture_seed, to_uint);
    if (auto it = kv.find("prepare.mode"); it != kv.end()) {
        require(it->second == "under_resolved" || it->second == "under_sampled", Errc::format,
                "prepare.mode must be under_resolved or under_sampled");
        cfg.mode = it->second == "under_resolved" ? DegradeMode::under_resolved
                                                  : DegradeMode::under_sampled;
    }
    if (auto it = kv.find("prepare.boundary"); it != kv.end()) {
        require(it->second == "reflect" || it->second == "wrap", Errc::format,
                "prepare.boundary must be reflect or wrap");
        cfg.boundary = it->second == "reflect" ? BoundaryMode::reflect : BoundaryMode::wrap;
    }
    if (auto it = kv.find("prepare.merge"); it != kv.end()) {
        for (const std::string& pair : split_list(it->second)) {
            const size_t colon = pair.find(':');
            require(colon != std::string::npos && colon > 0 && colon + 1 < pair.size(),
                    Errc::format, "prepare.merge entries look like hr_phase:lr_phase");
            cfg.merge.push_back({trim(pair.substr(0, colon)), trim(pair.substr(colon + 1))});
        }
    }

    if (auto it = kv.find("train.scale_factor"); it != kv.end())
        cfg.train.input_side =
            ScaleFactor::from_value(to_double("train.scale_factor", it->second)).input_side();
    take(kv, "train.input_side", cfg.train.input_side, to_int);
    take(kv, "train.output_side", cfg.train.train_output_side, to_int);
    take(kv, "train.crop_layers", cfg.train.crop_layers, to_int);
    take(kv, "train.voxelwise_threshold", cfg.train.vw_threshold, to_double);
    take(kv, "train.voxelwise_coefficient", cfg.train.vw_coefficient, to_double);
    take(kv, "train.critic_iters_per_g", cfg.train.critic_iters_per_g, to_int);
    take(kv, "train.gp_lambda", cfg.train.gp_lambda, to_double);
    take(kv, "train.learning_rate", cfg.train.learning_rate, to_double);
    take(kv, "train.adam_beta1", cfg.train.adam_beta1, to_double);
    take(kv, "train.adam_beta2", cfg.train.adam_beta2, to_double);
    take(kv, "train.batch", cfg.train.batch_size, to_int);
    take(kv, "train.noise_channels", cfg.train.noise_channels, to_int);
    take(kv, "train.temperature", cfg.train.temperature, to_double);
    take(kv, "train.iterations", cfg.train.iterations, to_int);
    take(kv, "train.monitor_interval", cfg.train.monitor_interval, to_int);
    take(kv, "train.checkpoint_interval", cfg.train.checkpoint_interval, to_int);
    take(kv, "train.anisotropic", cfg.train.anisotropic, to_bool);
    take(kv, "train.seed", cfg.train_seed, to_uint);
    if (auto it = kv.find("train.gen_widths"); it != kv.end()) {
        cfg.train.gen_widths.clear();
        for (const std::string& w : split_list(it->second))
            cfg.train.gen_widths.push_back(to_int("train.gen_widths", w));
    }
    if (auto it = kv.find("train.critic_widths"); it != kv.end()) {
        cfg.train.critic_widths.clear();
        for (const std::string& w : split_list(it->second))
            cfg.train.critic_widths.push_back(to_int("train.critic_widths", w));
    }
    cfg.train.mode = cfg.mode;

    if (auto it = kv.find("generate.seeds"); it != kv.end()) {
        cfg.generate_seeds.clear();
        for (const std::string& s : split_list(it->second))
            cfg.generate_seeds.push_back(to_uint("generate.seeds", s));
        require(!cfg.generate_seeds.empty(), Errc::format, "generate.seeds is empty");
    }
    take(kv, "generate.crop", cfg.crop_boundary, to_bool);
    take(kv, "generate.tile_lr", cfg.tile_lr, to_int);

    take(kv, "evaluate.samples", cfg.evaluation.samples, to_int);
    take(kv, "evaluate.cube", cfg.evaluation.cube, to_int);
    take(kv, "evaluate.seed", cfg.evaluation.seed, to_uint);
    take(kv, "evaluate.transport_samples", cfg.evaluation.transport_samples, to_int);
    take(kv, "evaluate.transport_cube", cfg.evaluation.transport_cube, to_int);
    take(kv, "evaluate.correlation_dmax", cfg.evaluation.correlation_dmax, to_int);

    take(kv, "output.dir", cfg.out_dir, str);

    // Reject unknown keys so typos surface instead of silently using defaults.
    static const char* known[] = {
        "data.lr_volume", "data.hr_volume", "data.hr_slices", "data.hr_slices_yz",
        "data.hr_slices_xz", "data.palette_map", "data.voxel_pitch_nm", "prepare.fixture",
        "prepare.fixture_side", "prepare.fixture_seed", "prepare.mode", "prepare.boundary",
        "prepare.merge", "train.scale_factor", "train.input_side", "train.output_side",
        "train.crop_layers", "train.voxelwise_threshold", "train.voxelwise_coefficient",
        "train.critic_iters_per_g", "train.gp_lambda", "train.learning_rate",
        "train.adam_beta1", "train.adam_beta2", "train.batch", "train.noise_channels",
        "train.temperature", "train.iterations", "train.monitor_interval",
        "train.checkpoint_interval", "train.anisotropic", "train.seed", "train.gen_widths",
        "train.critic_widths", "generate.seeds", "generate.crop", "generate.tile_lr",
        "evaluate.samples", "evaluate.cube", "evaluate.seed", "evaluate.transport_samples",
        "evaluate.transport_cube", "evaluate.correlation_dmax", "output.dir",
    };
    for (const auto& [key, value] : kv) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) {
                ok = true;
                break;
            }
        require(ok, Errc::format, "unknown config key '" + key + "'");
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    train.validate();
    require(!out_dir.empty(), Errc::invalid_argument, "output.dir cannot be empty");
    require(fixture.empty() || fixture == "spheres" || fixture == "lamellae",
            Errc::invalid_argument, "prepare.fixture must be spheres or lamellae");
    require(fixture_side >= 16, Errc::invalid_argument, "prepare.fixture_side too small");
    require(tile_lr >= 0, Errc::invalid_argument, "generate.tile_lr cannot be negative");
    require(evaluation.samples >= 1 && evaluation.cube >= 2, Errc::invalid_argument,
            "evaluation sampling spec invalid");
    require(evaluation.transport_samples >= 0 && evaluation.transport_cube >= 2,
            Errc::invalid_argument, "transport sampling spec invalid");
    require(evaluation.correlation_dmax >= 1, Errc::invalid_argument,
            "evaluate.correlation_dmax must be positive");
    require(voxel_pitch_nm > 0.0, Errc::invalid_argument, "data.voxel_pitch_nm must be positive");

    // When no fixture synthesizes them, the referenced inputs must exist.
    auto must_exist = [](const std::string& what, const std::string& path) {
        if (path.empty()) return;
        require(std::filesystem::exists(path), Errc::invalid_argument,
                what + " '" + path + "' does not exist");
    };
    must_exist("data.lr_volume", lr_volume);
    must_exist("data.hr_volume", hr_volume);
    must_exist("data.hr_slices", hr_slices);
    must_exist("data.hr_slices_yz", hr_slices_yz);
    must_exist("data.hr_slices_xz", hr_slices_xz);
    must_exist("data.palette_map", palette_map);
    if (fixture.empty())
        require(!hr_volume.empty() || !hr_slices.empty() || !lr_volume.empty(),
                Errc::invalid_argument,
                "no inputs: set prepare.fixture or point [data] at real files");
}

} // namespace voxfuse
