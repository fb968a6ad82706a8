#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "degrade.hpp"
#include "netspec.hpp"

namespace voxfuse {

// Raw parameter tensor: shape plus little-endian f32 payload.
struct TensorBlob {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<float> data;

    int64_t numel() const;
};

// Adam state for one parameter list, in parameter order.
struct OptimizerBlobs {
    int64_t step = 0;
    std::vector<TensorBlob> first_moment;
    std::vector<TensorBlob> second_moment;
};

struct MetricRow {
    int64_t iteration = 0;
    std::string name;
    double value = 0.0;
};

// Everything the training loop needs to know, serializable and diffable.
struct TrainSettings {
    int64_t input_side = 16;        // d; scale factor is 64/d
    int64_t train_output_side = 64; // generated training cube side
    int64_t crop_layers = 4;        // faces trimmed before slicing
    double vw_threshold = 0.005;    // voxel-wise loss threshold (b)
    double vw_coefficient = 10.0;   // voxel-wise loss coefficient (c)
    int64_t critic_iters_per_g = 5;
    double gp_lambda = 10.0;
    double learning_rate = 1e-4;
    double adam_beta1 = 0.0;
    double adam_beta2 = 0.9;
    double adam_eps = 1e-8;
    int64_t batch_size = 8;
    int64_t noise_channels = 1;
    double temperature = 0.05;      // sharpening softmax temperature
    int64_t iterations = 20000;     // total update budget (one update = one iteration)
    int64_t monitor_interval = 100;
    int64_t checkpoint_interval = 2000;
    bool anisotropic = false;
    DegradeMode mode = DegradeMode::under_resolved;
    std::vector<int> merge_map;        // HR channel -> LR channel; empty = identity
    std::vector<int64_t> gen_widths;   // empty = architecture default
    std::vector<int64_t> critic_widths;

    ScaleFactor scale() const { return ScaleFactor::from_input_side(input_side); }
    // Side of the low-res cube sampled each iteration; the generator maps it
    // onto a train_output_side cube.
    int64_t lr_cube_side() const {
        return train_output_side / scale().num() * scale().den();
    }
    void validate() const;
};

// Complete training state: specs, parameters, optimizer moments, counters,
// rng state, metric history. Round-trips bit-exactly through save/load.
struct Checkpoint {
    GeneratorSpec gen;
    std::vector<CriticSpec> critics;
    TrainSettings settings;
    std::vector<std::string> lr_palette;
    std::vector<std::string> hr_palette;
    double lr_pitch_nm = 1.0;
    int64_t iteration = 0;
    std::string rng_state;
    std::vector<TensorBlob> gen_params; // weight, bias per layer
    std::vector<std::vector<TensorBlob>> critic_params;
    OptimizerBlobs gen_opt;
    std::vector<OptimizerBlobs> critic_opts;
    std::vector<MetricRow> history;

    uint64_t spec_hash() const;
};

// Atomic (write-temp-rename) versioned container: magic line, JSON header,
// then the parameter/moment payload in a canonical order derived from the
// specs.
void save_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// iteration,name,value rows.
void write_history_csv(const std::vector<MetricRow>& history, const std::string& path);

} // namespace voxfuse
