#pragma once

#include <functional>
#include <string>

#include "checkpoint.hpp"
#include "degrade.hpp"
#include "volgrid.hpp"

namespace voxfuse {

// Progress callback payload, emitted once per monitor interval.
struct TrainProgress {
    int64_t iteration = 0; // network updates completed so far
    int64_t total = 0;     // iteration budget
    double critic_loss = 0.0;
    double generator_loss = 0.0;
    double voxelwise = 0.0;
};

using TrainProgressFn = std::function<void(const TrainProgress&)>;

struct TrainResult {
    std::string checkpoint_path; // latest checkpoint written
    std::vector<MetricRow> history;
    int64_t iterations = 0;
};

// Builds an untrained model (specs, seeded parameters, zeroed optimizer
// state) for the given data pair, without running any updates.
Checkpoint initialize_model(const PhaseVolume& lr, const HRSliceBank& bank,
                            const TrainSettings& settings, uint64_t seed);

// Adversarial training: per cycle, critic_iters_per_g critic updates then one
// generator update; every update counts one iteration. Checkpoints land in
// checkpoint_dir (checkpoint_<iter>.vfck plus latest.vfck and history.csv).
// A non-empty resume_path continues from that checkpoint; settings and data
// must describe the same architecture.
TrainResult train_model(const PhaseVolume& lr, const HRSliceBank& bank,
                        const TrainSettings& settings, uint64_t seed,
                        const std::string& checkpoint_dir,
                        const std::string& resume_path = {},
                        const TrainProgressFn& progress = {});

} // namespace voxfuse
