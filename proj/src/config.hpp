#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "degrade.hpp"

namespace voxfuse {

// Flat INI: [section] headers, key = value lines, '#'/';' comments. Values
// keep internal whitespace; keys are addressed as "section.key".
std::map<std::string, std::string> parse_ini(const std::string& text);
std::map<std::string, std::string> load_ini(const std::string& path);

// One named HR->LR phase mapping entry, e.g. "binder:pore".
struct MergeRule {
    std::string hr_phase;
    std::string lr_phase;
};

struct EvaluationSpec {
    int64_t samples = 256;    // subvolumes per distribution metric
    int64_t cube = 64;        // subvolume side
    uint64_t seed = 17;
    int64_t transport_samples = 8; // diffusion solves are costly; kept separate
    int64_t transport_cube = 48;
    int64_t correlation_dmax = 80;
};

struct ExperimentConfig {
    // [data]
    std::string lr_volume;    // prepared LR container (input to train/generate)
    std::string hr_volume;    // HR ground truth container (simulated cases)
    std::string hr_slices;    // image-stack dir or single image (isotropic)
    std::string hr_slices_yz; // extra pools for anisotropic training
    std::string hr_slices_xz;
    std::string palette_map;  // grey value -> phase name table for images
    double voxel_pitch_nm = 1.0;

    // [prepare]
    std::string fixture;          // "", "spheres", "lamellae"
    int64_t fixture_side = 96;
    uint64_t fixture_seed = 101;
    std::vector<MergeRule> merge; // HR phase -> LR phase (empty = identity)
    DegradeMode mode = DegradeMode::under_resolved;
    BoundaryMode boundary = BoundaryMode::reflect;

    // [train]
    TrainSettings train;
    uint64_t train_seed = 7;

    // [generate]
    std::vector<uint64_t> generate_seeds{1};
    bool crop_boundary = true;
    int64_t tile_lr = 0;

    // [evaluate]
    EvaluationSpec evaluation;

    // [output]
    std::string out_dir = "run";

    double scale_factor() const { return train.scale().value(); }

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_ini(const std::map<std::string, std::string>& kv);

    // Checks consistency and that referenced input files exist.
    void validate() const;
};

} // namespace voxfuse
