#include "voxfuse/voxfuse.h"

#include <memory>
#include <string>

#include "fixtures.hpp"
#include "harness.hpp"
#include "metrics.hpp"
#include "volgrid.hpp"

namespace {

thread_local std::string t_error;
thread_local int32_t t_stage = 0;

vf_status map_code(voxfuse::Errc code) {
    switch (code) {
    case voxfuse::Errc::invalid_argument: return VF_ERR_INVALID_ARGUMENT;
    case voxfuse::Errc::io: return VF_ERR_IO;
    case voxfuse::Errc::format: return VF_ERR_FORMAT;
    case voxfuse::Errc::state: return VF_ERR_STATE;
    case voxfuse::Errc::numeric: return VF_ERR_NUMERIC;
    case voxfuse::Errc::internal: return VF_ERR_INTERNAL;
    }
    return VF_ERR_INTERNAL;
}

int32_t stage_code(voxfuse::Stage stage) {
    switch (stage) {
    case voxfuse::Stage::prepare: return 3;
    case voxfuse::Stage::train: return 4;
    case voxfuse::Stage::generate: return 5;
    case voxfuse::Stage::evaluate: return 6;
    case voxfuse::Stage::report: return 7;
    }
    return 0;
}

template <typename Fn>
vf_status guard(Fn&& fn) noexcept {
    t_error.clear();
    t_stage = 0;
    try {
        fn();
        return VF_OK;
    } catch (const voxfuse::StageError& e) {
        t_error = e.what();
        t_stage = stage_code(e.stage());
        return map_code(e.code());
    } catch (const voxfuse::Error& e) {
        t_error = e.what();
        return map_code(e.code());
    } catch (const std::exception& e) {
        t_error = e.what();
        return VF_ERR_INTERNAL;
    } catch (...) {
        t_error = "unknown failure";
        return VF_ERR_INTERNAL;
    }
}

void check(bool cond, const char* msg) {
    voxfuse::require(cond, voxfuse::Errc::invalid_argument, msg);
}

} // namespace

struct vf_volume {
    voxfuse::PhaseVolume v;
};

struct vf_experiment {
    voxfuse::ExperimentConfig cfg;
    bool seed_overridden = false;
    uint64_t seed = 0;

    // Stage-specific view of the config with any seed override applied.
    voxfuse::ExperimentConfig for_stage(voxfuse::Stage stage) const {
        voxfuse::ExperimentConfig c = cfg;
        if (seed_overridden) {
            switch (stage) {
            case voxfuse::Stage::prepare: c.fixture_seed = seed; break;
            case voxfuse::Stage::train: c.train_seed = seed; break;
            case voxfuse::Stage::generate: c.generate_seeds = {seed}; break;
            case voxfuse::Stage::evaluate: c.evaluation.seed = seed; break;
            case voxfuse::Stage::report: break;
            }
        }
        return c;
    }
};

extern "C" {

const char* vf_version(void) { return voxfuse::k_code_version; }

const char* vf_last_error(void) { return t_error.c_str(); }

int32_t vf_last_error_stage(void) { return t_stage; }

vf_status vf_volume_load(const char* path, vf_volume** out) {
    return guard([&] {
        check(path && out, "vf_volume_load: null argument");
        *out = new vf_volume{voxfuse::load_volume(path)};
    });
}

vf_status vf_volume_save(const vf_volume* v, const char* path) {
    return guard([&] {
        check(v && path, "vf_volume_save: null argument");
        voxfuse::save_volume(v->v, path);
    });
}

void vf_volume_free(vf_volume* v) { delete v; }

vf_status vf_volume_dims(const vf_volume* v, int64_t dims[3]) {
    return guard([&] {
        check(v && dims, "vf_volume_dims: null argument");
        for (int i = 0; i < 3; ++i) dims[i] = v->v.dims[size_t(i)];
    });
}

vf_status vf_volume_pitch_nm(const vf_volume* v, double* pitch_nm) {
    return guard([&] {
        check(v && pitch_nm, "vf_volume_pitch_nm: null argument");
        *pitch_nm = v->v.voxel_pitch_nm;
    });
}

vf_status vf_volume_phase_count(const vf_volume* v, int32_t* count) {
    return guard([&] {
        check(v && count, "vf_volume_phase_count: null argument");
        *count = int32_t(v->v.phase_count());
    });
}

vf_status vf_volume_phase_name(const vf_volume* v, int32_t phase, const char** name) {
    return guard([&] {
        check(v && name, "vf_volume_phase_name: null argument");
        check(phase >= 0 && phase < int32_t(v->v.phase_count()),
              "vf_volume_phase_name: phase out of range");
        *name = v->v.palette[size_t(phase)].c_str();
    });
}

vf_status vf_volume_labels(const vf_volume* v, const uint8_t** labels, int64_t* count) {
    return guard([&] {
        check(v && labels && count, "vf_volume_labels: null argument");
        *labels = v->v.labels.data();
        *count = int64_t(v->v.labels.size());
    });
}

vf_status vf_fixture_spheres(int64_t side, uint64_t seed, double pitch_nm, vf_volume** out) {
    return guard([&] {
        check(out != nullptr, "vf_fixture_spheres: null output");
        *out = new vf_volume{voxfuse::make_sphere_shell_fixture(side, seed, pitch_nm)};
    });
}

vf_status vf_fixture_lamellae(int64_t side, uint64_t seed, double pitch_nm, vf_volume** out) {
    return guard([&] {
        check(out != nullptr, "vf_fixture_lamellae: null output");
        *out = new vf_volume{voxfuse::make_lamellae_fixture(side, seed, pitch_nm)};
    });
}

vf_status vf_volume_fraction(const vf_volume* v, int32_t phase, double* out) {
    return guard([&] {
        check(v && out, "vf_volume_fraction: null argument");
        *out = voxfuse::volume_fraction(v->v, phase);
    });
}

vf_status vf_surface_area(const vf_volume* v, int32_t phase_a, int32_t phase_b, double* out) {
    return guard([&] {
        check(v && out, "vf_surface_area: null argument");
        *out = voxfuse::interphase_surface_area(v->v, phase_a, phase_b);
    });
}

vf_status vf_tpb_density(const vf_volume* v, double* out) {
    return guard([&] {
        check(v && out, "vf_tpb_density: null argument");
        *out = voxfuse::tpb_density(v->v);
    });
}

vf_status vf_transport_efficiency(const vf_volume* v, int32_t phase, int32_t axis, double* out) {
    return guard([&] {
        check(v && out, "vf_transport_efficiency: null argument");
        *out = voxfuse::transport_efficiency(v->v, phase, axis);
    });
}

vf_status vf_experiment_open(const char* config_path, vf_experiment** out) {
    return guard([&] {
        check(config_path && out, "vf_experiment_open: null argument");
        auto e = std::make_unique<vf_experiment>();
        e->cfg = voxfuse::ExperimentConfig::from_file(config_path);
        e->cfg.validate();
        *out = e.release();
    });
}

void vf_experiment_free(vf_experiment* e) { delete e; }

vf_status vf_experiment_set_output_dir(vf_experiment* e, const char* dir) {
    return guard([&] {
        check(e && dir && dir[0], "vf_experiment_set_output_dir: null or empty argument");
        e->cfg.out_dir = dir;
    });
}

vf_status vf_experiment_set_seed(vf_experiment* e, uint64_t seed) {
    return guard([&] {
        check(e != nullptr, "vf_experiment_set_seed: null experiment");
        e->seed_overridden = true;
        e->seed = seed;
    });
}

vf_status vf_run_prepare(vf_experiment* e) {
    return guard([&] {
        check(e != nullptr, "vf_run_prepare: null experiment");
        voxfuse::run_prepare(e->for_stage(voxfuse::Stage::prepare));
    });
}

vf_status vf_run_train(vf_experiment* e, vf_progress_fn progress, void* user) {
    return guard([&] {
        check(e != nullptr, "vf_run_train: null experiment");
        voxfuse::TrainProgressFn fn;
        if (progress)
            fn = [progress, user](const voxfuse::TrainProgress& p) {
                progress(p.iteration, p.total, p.critic_loss, p.generator_loss, p.voxelwise, user);
            };
        voxfuse::run_train(e->for_stage(voxfuse::Stage::train), fn);
    });
}

vf_status vf_run_generate(vf_experiment* e) {
    return guard([&] {
        check(e != nullptr, "vf_run_generate: null experiment");
        voxfuse::run_generate(e->for_stage(voxfuse::Stage::generate));
    });
}

vf_status vf_run_evaluate(vf_experiment* e) {
    return guard([&] {
        check(e != nullptr, "vf_run_evaluate: null experiment");
        voxfuse::run_evaluate(e->for_stage(voxfuse::Stage::evaluate));
    });
}

vf_status vf_run_report(vf_experiment* e) {
    return guard([&] {
        check(e != nullptr, "vf_run_report: null experiment");
        voxfuse::run_report(e->for_stage(voxfuse::Stage::report));
    });
}

vf_status vf_run_all(vf_experiment* e, vf_progress_fn progress, void* user) {
    return guard([&] {
        check(e != nullptr, "vf_run_all: null experiment");
        voxfuse::TrainProgressFn fn;
        if (progress)
            fn = [progress, user](const voxfuse::TrainProgress& p) {
                progress(p.iteration, p.total, p.critic_loss, p.generator_loss, p.voxelwise, user);
            };
        voxfuse::run_prepare(e->for_stage(voxfuse::Stage::prepare));
        voxfuse::run_train(e->for_stage(voxfuse::Stage::train), fn);
        voxfuse::run_generate(e->for_stage(voxfuse::Stage::generate));
        voxfuse::run_evaluate(e->for_stage(voxfuse::Stage::evaluate));
        voxfuse::run_report(e->for_stage(voxfuse::Stage::report));
    });
}

} // extern "C"
