#pragma once

#include <string>

#include "config.hpp"
#include "trainer.hpp"
#include "volgrid.hpp"

namespace voxfuse {

inline constexpr const char* k_code_version = "1.0.0";

enum class Stage { prepare, train, generate, evaluate, report };

const char* stage_name(Stage s);

// Error carrying the stage it surfaced in, so callers can map failures to
// stage-specific exit codes. Partial artifacts written before the failure
// stay on disk.
class StageError : public Error {
public:
    StageError(Stage stage, Errc code, const std::string& msg)
        : Error(code, std::string(stage_name(stage)) + ": " + msg), stage_(stage) {}
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

// Layout of one experiment directory. Stages communicate exclusively through
// these paths, so each stage can run in a separate process.
struct RunPaths {
    std::string root;

    explicit RunPaths(std::string root_dir) : root(std::move(root_dir)) {}

    std::string inputs_dir() const { return root + "/inputs"; }
    std::string checkpoints_dir() const { return root + "/checkpoints"; }
    std::string volumes_dir() const { return root + "/volumes"; }
    std::string metrics_dir() const { return root + "/metrics"; }
    std::string report_dir() const { return root + "/report"; }
    std::string manifest_file() const { return root + "/manifest.json"; }

    std::string lr_volume() const { return inputs_dir() + "/lr.vox"; }
    std::string hr_volume() const { return inputs_dir() + "/hr.vox"; }
    std::string slices_dir(Orientation o) const;
    std::string latest_checkpoint() const { return checkpoints_dir() + "/latest.vfck"; }
    std::string history_csv() const { return checkpoints_dir() + "/history.csv"; }
    std::string sr_volume(uint64_t seed) const {
        return volumes_dir() + "/sr_seed" + std::to_string(seed) + ".vox";
    }
};

// Pipeline stages. Each validates its own inputs, writes its artifacts under
// cfg.out_dir, and records itself in <out_dir>/manifest.json. Failures throw
// StageError. Stages are independent processes in spirit: each one reads only
// the config and what earlier stages left in the run directory.

// Synthesize or ingest the data pair: high-res ground truth (when available),
// low-res volume (ingested or degraded from the ground truth), and the
// high-res training slices.
void run_prepare(const ExperimentConfig& cfg);

// Adversarial training on the prepared pair; resumes automatically from
// <checkpoints>/latest.vfck when present.
void run_train(const ExperimentConfig& cfg, const TrainProgressFn& progress = {});

// Super-resolve the prepared low-res volume once per configured seed.
void run_generate(const ExperimentConfig& cfg);

// Mesostructural metrics for every generated volume, the ground truth, and
// the 2D training slice; distribution samples plus correlation/chord/spectral
// curves land under <out_dir>/metrics.
void run_evaluate(const ExperimentConfig& cfg);

// Comparison table and SVG figures from the evaluation artifacts.
void run_report(const ExperimentConfig& cfg);

// All five stages in order.
void run_case_study(const ExperimentConfig& cfg, const TrainProgressFn& progress = {});

} // namespace voxfuse
