/* voxfuse — segmented-volume super-resolution and mesostructural metrics.
 *
 * C interface of the shared library. All functions return vf_status; every
 * failure leaves a human-readable message retrievable (per thread) through
 * vf_last_error(). Objects are opaque handles released with their *_free
 * function. Unless noted otherwise, returned pointers are borrowed views
 * owned by the handle they came from and stay valid until it is freed.
 */
#ifndef VOXFUSE_H
#define VOXFUSE_H

#include <stdint.h>

#if defined(_WIN32)
#define VOXFUSE_API __declspec(dllexport)
#else
#define VOXFUSE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vf_status {
    VF_OK = 0,
    VF_ERR_INVALID_ARGUMENT = 1,
    VF_ERR_IO = 2,
    VF_ERR_FORMAT = 3,
    VF_ERR_STATE = 4,
    VF_ERR_NUMERIC = 5,
    VF_ERR_INTERNAL = 6
} vf_status;

/* Library version, e.g. "1.0.0". */
VOXFUSE_API const char* vf_version(void);

/* Message of the most recent failure on the calling thread ("" when the last
 * call succeeded). */
VOXFUSE_API const char* vf_last_error(void);

/* Pipeline stage of the most recent failure on the calling thread, as an
 * exit-code-friendly tag: 0 none, 3 prepare, 4 train, 5 generate,
 * 6 evaluate, 7 report. Non-pipeline failures report 0. */
VOXFUSE_API int32_t vf_last_error_stage(void);

/* ---- segmented volumes ---------------------------------------------------- */

typedef struct vf_volume vf_volume; /* dense 3D phase-label grid */

VOXFUSE_API vf_status vf_volume_load(const char* path, vf_volume** out);
VOXFUSE_API vf_status vf_volume_save(const vf_volume* v, const char* path);
VOXFUSE_API void vf_volume_free(vf_volume* v);

VOXFUSE_API vf_status vf_volume_dims(const vf_volume* v, int64_t dims[3]);
VOXFUSE_API vf_status vf_volume_pitch_nm(const vf_volume* v, double* pitch_nm);
VOXFUSE_API vf_status vf_volume_phase_count(const vf_volume* v, int32_t* count);
VOXFUSE_API vf_status vf_volume_phase_name(const vf_volume* v, int32_t phase, const char** name);
/* Borrowed pointer to the nx*ny*nz labels, x fastest. */
VOXFUSE_API vf_status vf_volume_labels(const vf_volume* v, const uint8_t** labels, int64_t* count);

/* Synthetic three-phase structures (pore / active material / binder). */
VOXFUSE_API vf_status vf_fixture_spheres(int64_t side, uint64_t seed, double pitch_nm,
                                         vf_volume** out);
VOXFUSE_API vf_status vf_fixture_lamellae(int64_t side, uint64_t seed, double pitch_nm,
                                          vf_volume** out);

/* ---- mesostructural metrics ----------------------------------------------- */

VOXFUSE_API vf_status vf_volume_fraction(const vf_volume* v, int32_t phase, double* out);
/* Interphase surface area: phase_a/phase_b face count per internal face. */
VOXFUSE_API vf_status vf_surface_area(const vf_volume* v, int32_t phase_a, int32_t phase_b,
                                      double* out);
/* Triple-phase boundary density (three-phase volumes only). */
VOXFUSE_API vf_status vf_tpb_density(const vf_volume* v, double* out);
/* Steady-state diffusive transport efficiency through `phase` along `axis`
 * (0=x, 1=y, 2=z); 0 when the phase does not percolate. */
VOXFUSE_API vf_status vf_transport_efficiency(const vf_volume* v, int32_t phase, int32_t axis,
                                              double* out);

/* ---- experiment pipeline --------------------------------------------------- */

typedef struct vf_experiment vf_experiment; /* parsed + validated configuration */

/* Parse and validate an experiment config file (INI). */
VOXFUSE_API vf_status vf_experiment_open(const char* config_path, vf_experiment** out);
VOXFUSE_API void vf_experiment_free(vf_experiment* e);

/* Override the output directory from the config. */
VOXFUSE_API vf_status vf_experiment_set_output_dir(vf_experiment* e, const char* dir);
/* Override the stage-specific seed of subsequently run stages: fixture
 * synthesis for prepare, training for train, the generation seed list
 * (replaced by {seed}) for generate, subvolume sampling for evaluate. */
VOXFUSE_API vf_status vf_experiment_set_seed(vf_experiment* e, uint64_t seed);

/* Training progress callback; invoked once per monitor interval. */
typedef void (*vf_progress_fn)(int64_t iteration, int64_t total, double critic_loss,
                               double generator_loss, double voxelwise_loss, void* user);

/* Each stage reads the config plus what earlier stages left in the output
 * directory, and records itself in <out>/manifest.json. */
VOXFUSE_API vf_status vf_run_prepare(vf_experiment* e);
VOXFUSE_API vf_status vf_run_train(vf_experiment* e, vf_progress_fn progress, void* user);
VOXFUSE_API vf_status vf_run_generate(vf_experiment* e);
VOXFUSE_API vf_status vf_run_evaluate(vf_experiment* e);
VOXFUSE_API vf_status vf_run_report(vf_experiment* e);
/* All five stages in order. */
VOXFUSE_API vf_status vf_run_all(vf_experiment* e, vf_progress_fn progress, void* user);

#ifdef __cplusplus
}
#endif

#endif /* VOXFUSE_H */
