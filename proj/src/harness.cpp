#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "degrade.hpp"
#include "fixtures.hpp"
#include "metrics.hpp"
#include "report.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace voxfuse {

const char* stage_name(Stage s) {
    switch (s) {
    case Stage::prepare: return "prepare";
    case Stage::train: return "train";
    case Stage::generate: return "generate";
    case Stage::evaluate: return "evaluate";
    case Stage::report: return "report";
    }
    return "?";
}

std::string RunPaths::slices_dir(Orientation o) const {
    const char* suffix = o == Orientation::yz ? "yz" : o == Orientation::xz ? "xz" : "xy";
    return inputs_dir() + "/slices_" + suffix;
}

namespace {

template <typename Fn>
void with_stage(Stage stage, Fn&& fn) {
    try {
        fn();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e.code(), e.what());
    } catch (const std::exception& e) {
        throw StageError(stage, Errc::internal, e.what());
    }
}

const char* mode_name(DegradeMode m) {
    return m == DegradeMode::under_resolved ? "under_resolved" : "under_sampled";
}
const char* boundary_name(BoundaryMode b) { return b == BoundaryMode::reflect ? "reflect" : "wrap"; }

json config_json(const ExperimentConfig& cfg) {
    json merge = json::array();
    for (const auto& rule : cfg.merge) merge.push_back(rule.hr_phase + ":" + rule.lr_phase);
    const TrainSettings& t = cfg.train;
    return json{
        {"data",
         {{"lr_volume", cfg.lr_volume},
          {"hr_volume", cfg.hr_volume},
          {"hr_slices", cfg.hr_slices},
          {"hr_slices_yz", cfg.hr_slices_yz},
          {"hr_slices_xz", cfg.hr_slices_xz},
          {"palette_map", cfg.palette_map},
          {"voxel_pitch_nm", cfg.voxel_pitch_nm}}},
        {"prepare",
         {{"fixture", cfg.fixture},
          {"fixture_side", cfg.fixture_side},
          {"fixture_seed", cfg.fixture_seed},
          {"mode", mode_name(cfg.mode)},
          {"boundary", boundary_name(cfg.boundary)},
          {"merge", merge}}},
        {"train",
         {{"input_side", t.input_side},
          {"output_side", t.train_output_side},
          {"crop_layers", t.crop_layers},
          {"voxelwise_threshold", t.vw_threshold},
          {"voxelwise_coefficient", t.vw_coefficient},
          {"critic_iters_per_g", t.critic_iters_per_g},
          {"gp_lambda", t.gp_lambda},
          {"learning_rate", t.learning_rate},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"batch", t.batch_size},
          {"noise_channels", t.noise_channels},
          {"temperature", t.temperature},
          {"iterations", t.iterations},
          {"monitor_interval", t.monitor_interval},
          {"checkpoint_interval", t.checkpoint_interval},
          {"anisotropic", t.anisotropic},
          {"gen_widths", t.gen_widths},
          {"critic_widths", t.critic_widths},
          {"seed", cfg.train_seed}}},
        {"generate",
         {{"seeds", cfg.generate_seeds}, {"crop", cfg.crop_boundary}, {"tile_lr", cfg.tile_lr}}},
        {"evaluate",
         {{"samples", cfg.evaluation.samples},
          {"cube", cfg.evaluation.cube},
          {"seed", cfg.evaluation.seed},
          {"transport_samples", cfg.evaluation.transport_samples},
          {"transport_cube", cfg.evaluation.transport_cube},
          {"correlation_dmax", cfg.evaluation.correlation_dmax}}},
        {"output", {{"dir", cfg.out_dir}}}};
}

// Record a finished stage in <out>/manifest.json, refreshing the config echo.
void update_manifest(const ExperimentConfig& cfg, const RunPaths& paths, Stage stage,
                     json details) {
    json m{{"code_version", k_code_version}, {"stages", json::object()}};
    if (fs::exists(paths.manifest_file())) {
        std::ifstream in(paths.manifest_file());
        json prev = json::parse(in, nullptr, false);
        if (!prev.is_discarded() && prev.is_object()) m = std::move(prev);
    }
    m["code_version"] = k_code_version;
    m["config"] = config_json(cfg);
    m["seeds"] = json{{"fixture", cfg.fixture_seed},
                      {"train", cfg.train_seed},
                      {"generate", cfg.generate_seeds},
                      {"evaluate", cfg.evaluation.seed}};
    details["status"] = "ok";
    m["stages"][stage_name(stage)] = std::move(details);
    std::ofstream out(paths.manifest_file(), std::ios::trunc);
    require(out.good(), Errc::io, "cannot write '" + paths.manifest_file() + "'");
    out << m.dump(2) << '\n';
    require(out.good(), Errc::io, "short write to '" + paths.manifest_file() + "'");
}

// Named merge rules -> label mapping over `palette`, plus the merged palette
// (target names in first-appearance order).
std::pair<std::vector<int>, std::vector<std::string>> resolve_merge(
    const std::vector<std::string>& palette, const std::vector<MergeRule>& rules) {
    for (const auto& rule : rules)
        palette_index(palette, rule.hr_phase); // errors when the name is unknown
    std::vector<int> mapping(palette.size(), 0);
    std::vector<std::string> merged;
    for (size_t i = 0; i < palette.size(); ++i) {
        std::string target = palette[i];
        for (const auto& rule : rules)
            if (rule.hr_phase == palette[i]) target = rule.lr_phase;
        auto it = std::find(merged.begin(), merged.end(), target);
        if (it == merged.end()) {
            mapping[i] = int(merged.size());
            merged.push_back(target);
        } else {
            mapping[i] = int(it - merged.begin());
        }
    }
    return {mapping, merged};
}

void require_artifact(const std::string& path, const char* producer) {
    require(fs::exists(path), Errc::state,
            "missing '" + path + "': run the " + producer + " stage first");
}

std::vector<std::string> sorted_files(const std::string& dir, const std::string& ext) {
    std::vector<std::string> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ext)
            out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<PhaseImage> load_slice_pool(const std::string& dir, Orientation orientation) {
    std::vector<PhaseImage> pool;
    for (const auto& path : sorted_files(dir, ".vxi")) {
        PhaseImage img = load_image(path);
        img.orientation = orientation;
        pool.push_back(std::move(img));
    }
    require(!pool.empty(), Errc::state,
            "no training slices under '" + dir + "': run the prepare stage first");
    return pool;
}

// Ingest external images (a directory stack or a single file) as one pool.
std::vector<PhaseImage> ingest_images(const std::string& source, const std::string& palette_map,
                                      double pitch_nm, Orientation orientation) {
    require(!palette_map.empty(), Errc::invalid_argument,
            "image ingestion needs data.palette_map");
    std::vector<std::string> files =
        fs::is_directory(source) ? list_image_stack(source) : std::vector<std::string>{source};
    PhaseVolume stack = load_image_stack(files, palette_map, pitch_nm);
    std::vector<PhaseImage> pool;
    for (int64_t z = 0; z < stack.nz(); ++z) {
        PhaseImage img = extract_slice(stack, 2, z);
        img.orientation = orientation;
        pool.push_back(std::move(img));
    }
    return pool;
}

void save_slice_pool(const std::vector<PhaseImage>& pool, const std::string& dir) {
    fs::create_directories(dir);
    for (size_t i = 0; i < pool.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "/slice_%03zu.vxi", i);
        save_image(pool[i], dir + name);
    }
}

// Trainer merge map: generator channel (HR palette order) -> low-res label.
std::vector<int> trainer_merge_map(const std::vector<std::string>& hr_palette,
                                   const std::vector<std::string>& lr_palette,
                                   const std::vector<MergeRule>& rules) {
    std::vector<int> mapping(hr_palette.size(), 0);
    for (size_t i = 0; i < hr_palette.size(); ++i) {
        std::string target = hr_palette[i];
        for (const auto& rule : rules)
            if (rule.hr_phase == hr_palette[i]) target = rule.lr_phase;
        mapping[i] = palette_index(lr_palette, target);
    }
    return mapping;
}

// ---- evaluate helpers -------------------------------------------------------

std::string pair_metric(const std::string& stem, const std::string& a, const std::string& b) {
    return stem + "_" + a + "_" + b;
}

MetricsReport evaluate_volume(const std::string& label, const PhaseVolume& v,
                              const EvaluationSpec& eval) {
    const int64_t min_dim = std::min({v.nx(), v.ny(), v.nz()});
    const int64_t cube = std::min(eval.cube, min_dim);
    MetricsReport r;
    r.provenance = {label, eval.samples, cube, eval.seed, false};

    for (int p = 0; p < v.phase_count(); ++p) {
        MetricSpec spec{"vf_" + v.palette[size_t(p)],
                        [p](const PhaseVolume& box) { return volume_fraction(box, p); }};
        r.set_distribution(spec.name, subvolume_distribution(v, spec, eval.samples, cube, eval.seed));
    }
    for (int a = 0; a < v.phase_count(); ++a)
        for (int b = a + 1; b < v.phase_count(); ++b) {
            MetricSpec spec{pair_metric("sa", v.palette[size_t(a)], v.palette[size_t(b)]),
                            [a, b](const PhaseVolume& box) {
                                return interphase_surface_area(box, a, b);
                            }};
            r.set_distribution(spec.name,
                               subvolume_distribution(v, spec, eval.samples, cube, eval.seed));
        }
    if (v.phase_count() == 3) {
        MetricSpec spec{"tpb", [](const PhaseVolume& box) { return tpb_density(box); }};
        r.set_distribution(spec.name, subvolume_distribution(v, spec, eval.samples, cube, eval.seed));
    }

    // Diffusive transport along z, per phase, over a few random cubes (one
    // relaxation solve per cube is the costly part of evaluation).
    const int64_t tcube = std::min(eval.transport_cube, min_dim);
    for (int p = 0; p < v.phase_count(); ++p) {
        Rng rng(eval.seed ^ (0x9e3779b97f4a7c15ull * uint64_t(p + 1))); // per-phase stream
        std::vector<double> samples;
        for (int64_t i = 0; i < eval.transport_samples; ++i) {
            std::array<int64_t, 3> origin{};
            for (int axis = 0; axis < 3; ++axis)
                origin[size_t(axis)] = int64_t(rng.below(uint64_t(v.dims[size_t(axis)] - tcube + 1)));
            PhaseVolume box = extract_box(v, origin, {tcube, tcube, tcube});
            samples.push_back(transport_efficiency(box, p, 2));
        }
        r.set_distribution("transport_eff_" + v.palette[size_t(p)],
                           Distribution::from_samples(std::move(samples)));
    }
    return r;
}

MetricsReport evaluate_slice(const std::string& label, const PhaseImage& img,
                             const EvaluationSpec& eval) {
    MetricsReport r;
    r.provenance = {label, 0, 0, eval.seed, true};
    for (int p = 0; p < img.phase_count(); ++p)
        r.set_scalar("vf_" + img.palette[size_t(p)], volume_fraction(img, p));
    for (int a = 0; a < img.phase_count(); ++a)
        for (int b = a + 1; b < img.phase_count(); ++b)
            r.set_scalar(pair_metric("sa", img.palette[size_t(a)], img.palette[size_t(b)]),
                         interphase_surface_area(img, a, b));
    // Triple-phase edges and transport need the third dimension; omitted.
    return r;
}

std::vector<double> axis_mean_curve(const PhaseVolume& v, int phase, int64_t dmax, bool chords) {
    std::vector<double> acc;
    for (int axis = 0; axis < 3; ++axis) {
        const std::vector<double> cur = chords
                                            ? chord_length_distribution(v, phase, axis, dmax)
                                            : two_point_correlation(v, phase, phase, axis, dmax);
        if (acc.empty()) acc.assign(cur.size(), 0.0);
        for (size_t i = 0; i < cur.size(); ++i) acc[i] += cur[i] / 3.0;
    }
    return acc;
}

// Resample a radial profile onto `points` positions spanning its full ring
// range, so differently sized slices share one frequency-fraction axis.
std::vector<double> normalized_profile(const std::vector<double>& profile, int points) {
    std::vector<double> out(size_t(points), 0.0);
    for (int i = 0; i < points; ++i) {
        const double pos = double(i) / double(points - 1) * double(profile.size() - 1);
        const auto lo = size_t(pos);
        const size_t hi = std::min(lo + 1, profile.size() - 1);
        const double w = pos - double(lo);
        out[size_t(i)] = profile[lo] * (1.0 - w) + profile[hi] * w;
    }
    return out;
}

struct NamedVolume {
    std::string label;
    PhaseVolume volume;
};

} // namespace

void run_prepare(const ExperimentConfig& cfg) {
    with_stage(Stage::prepare, [&] {
        RunPaths paths(cfg.out_dir);
        fs::create_directories(paths.inputs_dir());

        // High-res ground truth: synthetic fixture or supplied volume.
        PhaseVolume hr;
        bool have_hr = false;
        if (cfg.fixture == "spheres") {
            hr = make_sphere_shell_fixture(cfg.fixture_side, cfg.fixture_seed, cfg.voxel_pitch_nm);
            have_hr = true;
        } else if (cfg.fixture == "lamellae") {
            hr = make_lamellae_fixture(cfg.fixture_side, cfg.fixture_seed, cfg.voxel_pitch_nm);
            have_hr = true;
        } else if (!cfg.hr_volume.empty()) {
            hr = load_volume(cfg.hr_volume);
            have_hr = true;
        }

        // High-res training slices: ingested images, else cut from the
        // ground-truth volume (the central plane per needed orientation).
        std::vector<PhaseImage> xy, yz, xz;
        if (!cfg.hr_slices.empty()) {
            xy = ingest_images(cfg.hr_slices, cfg.palette_map, cfg.voxel_pitch_nm,
                               cfg.train.anisotropic ? Orientation::xy : Orientation::isotropic);
        } else {
            require(have_hr, Errc::invalid_argument,
                    "no high-res source: set prepare.fixture, data.hr_volume, or data.hr_slices");
            PhaseImage central = extract_slice(hr, 2, hr.nz() / 2);
            if (!cfg.train.anisotropic) central.orientation = Orientation::isotropic;
            xy.push_back(std::move(central));
        }
        if (cfg.train.anisotropic) {
            if (!cfg.hr_slices_yz.empty())
                yz = ingest_images(cfg.hr_slices_yz, cfg.palette_map, cfg.voxel_pitch_nm,
                                   Orientation::yz);
            else if (have_hr)
                yz.push_back(extract_slice(hr, 0, hr.nx() / 2));
            if (!cfg.hr_slices_xz.empty())
                xz = ingest_images(cfg.hr_slices_xz, cfg.palette_map, cfg.voxel_pitch_nm,
                                   Orientation::xz);
            else if (have_hr)
                xz.push_back(extract_slice(hr, 1, hr.ny() / 2));
            require(!yz.empty() && !xz.empty(), Errc::invalid_argument,
                    "anisotropic training needs yz and xz slice sources");
        }

        // Low-res volume: ingested, else degraded from the ground truth.
        PhaseVolume lr;
        if (!cfg.lr_volume.empty()) {
            lr = load_volume(cfg.lr_volume);
        } else {
            require(have_hr, Errc::invalid_argument,
                    "no low-res source: set data.lr_volume or a high-res volume to degrade");
            auto [mapping, merged] = resolve_merge(hr.palette, cfg.merge);
            DegradeSpec dspec;
            dspec.mode = cfg.mode;
            dspec.scale = cfg.train.scale();
            if (merged.size() != hr.palette.size() ||
                !std::equal(merged.begin(), merged.end(), hr.palette.begin())) {
                dspec.merge_mapping = mapping;
                dspec.merged_palette = merged;
            }
            dspec.boundary = cfg.boundary;
            lr = simulate_low_res(hr, dspec);
        }

        if (have_hr) save_volume(hr, paths.hr_volume());
        save_volume(lr, paths.lr_volume());
        save_slice_pool(xy, paths.slices_dir(Orientation::xy));
        if (!yz.empty()) save_slice_pool(yz, paths.slices_dir(Orientation::yz));
        if (!xz.empty()) save_slice_pool(xz, paths.slices_dir(Orientation::xz));
        if (have_hr)
            write_grey_png(paths.inputs_dir() + "/preview_hr.png", extract_slice(hr, 2, hr.nz() / 2));
        write_grey_png(paths.inputs_dir() + "/preview_lr.png", extract_slice(lr, 2, lr.nz() / 2));

        update_manifest(cfg, paths, Stage::prepare,
                        json{{"high_res", have_hr ? json{{"dims", hr.dims},
                                                         {"palette", hr.palette},
                                                         {"voxel_pitch_nm", hr.voxel_pitch_nm}}
                                                  : json()},
                             {"low_res", json{{"dims", lr.dims},
                                              {"palette", lr.palette},
                                              {"voxel_pitch_nm", lr.voxel_pitch_nm}}},
                             {"slices", json{{"xy", xy.size()}, {"yz", yz.size()}, {"xz", xz.size()}}}});
    });
}

void run_train(const ExperimentConfig& cfg, const TrainProgressFn& progress) {
    with_stage(Stage::train, [&] {
        RunPaths paths(cfg.out_dir);
        require_artifact(paths.lr_volume(), "prepare");
        PhaseVolume lr = load_volume(paths.lr_volume());

        HRSliceBank bank =
            cfg.train.anisotropic
                ? HRSliceBank::anisotropic(
                      load_slice_pool(paths.slices_dir(Orientation::xy), Orientation::xy),
                      load_slice_pool(paths.slices_dir(Orientation::yz), Orientation::yz),
                      load_slice_pool(paths.slices_dir(Orientation::xz), Orientation::xz))
                : HRSliceBank::isotropic(
                      load_slice_pool(paths.slices_dir(Orientation::xy), Orientation::isotropic));

        TrainSettings settings = cfg.train;
        settings.merge_map = trainer_merge_map(bank.palette(), lr.palette, cfg.merge);
        settings.validate();

        const std::string resume =
            fs::exists(paths.latest_checkpoint()) ? paths.latest_checkpoint() : std::string();
        TrainResult result =
            train_model(lr, bank, settings, cfg.train_seed, paths.checkpoints_dir(), resume, progress);

        json last = json::object();
        for (const auto& row : result.history)
            if (row.iteration == result.iterations) last[row.name] = row.value;
        update_manifest(cfg, paths, Stage::train,
                        json{{"iterations", result.iterations},
                             {"checkpoint", result.checkpoint_path},
                             {"resumed_from", resume},
                             {"final_metrics", last}});
    });
}

void run_generate(const ExperimentConfig& cfg) {
    with_stage(Stage::generate, [&] {
        RunPaths paths(cfg.out_dir);
        require_artifact(paths.latest_checkpoint(), "train");
        require_artifact(paths.lr_volume(), "prepare");
        require(!cfg.generate_seeds.empty(), Errc::invalid_argument, "generate.seeds is empty");

        Checkpoint cp = load_checkpoint(paths.latest_checkpoint());
        PhaseVolume lr = load_volume(paths.lr_volume());
        fs::create_directories(paths.volumes_dir());

        json produced = json::array();
        for (uint64_t seed : cfg.generate_seeds) {
            SynthOptions options{seed, cfg.crop_boundary, cfg.tile_lr};
            PhaseVolume sr = generate_volume(cp, lr, options);
            save_volume(sr, paths.sr_volume(seed));
            produced.push_back(json{{"seed", seed},
                                    {"path", paths.sr_volume(seed)},
                                    {"dims", sr.dims},
                                    {"voxel_pitch_nm", sr.voxel_pitch_nm}});
        }
        update_manifest(cfg, paths, Stage::generate,
                        json{{"volumes", produced},
                             {"crop", cfg.crop_boundary},
                             {"tile_lr", cfg.tile_lr}});
    });
}

void run_evaluate(const ExperimentConfig& cfg) {
    with_stage(Stage::evaluate, [&] {
        RunPaths paths(cfg.out_dir);
        fs::create_directories(paths.metrics_dir());
        const EvaluationSpec& eval = cfg.evaluation;

        std::vector<NamedVolume> sources;
        for (const auto& path : sorted_files(paths.volumes_dir(), ".vox")) {
            const std::string stem = fs::path(path).stem().string();
            sources.push_back({stem, load_volume(path)});
        }
        require(!sources.empty(), Errc::state,
                "no generated volumes under '" + paths.volumes_dir() +
                    "': run the generate stage first");
        if (fs::exists(paths.hr_volume())) sources.push_back({"hr", load_volume(paths.hr_volume())});

        json emitted = json::array();
        for (const auto& [label, volume] : sources) {
            MetricsReport r = evaluate_volume(label, volume, eval);
            r.save(paths.metrics_dir() + "/" + label + ".json");
            r.write_csv(paths.metrics_dir() + "/" + label + ".csv");
            emitted.push_back(label);
        }
        const std::string slice_dir = paths.slices_dir(Orientation::xy);
        const auto slice_files = sorted_files(slice_dir, ".vxi");
        if (!slice_files.empty()) {
            MetricsReport r = evaluate_slice("hr_slice", load_image(slice_files.front()), eval);
            r.save(paths.metrics_dir() + "/hr_slice.json");
            r.write_csv(paths.metrics_dir() + "/hr_slice.csv");
            emitted.push_back("hr_slice");
        }

        // Shared distance grid across the curve sources.
        int64_t min_dim = std::numeric_limits<int64_t>::max();
        for (const auto& s : sources)
            min_dim = std::min(min_dim, std::min({s.volume.nx(), s.volume.ny(), s.volume.nz()}));
        const int64_t dmax = std::min(eval.correlation_dmax, min_dim - 1);

        CurveSet tpc, cld;
        tpc.x_label = "distance_voxels";
        tpc.y_label = "probability";
        for (int64_t d = 0; d <= dmax; ++d) tpc.x.push_back(double(d));
        cld.x_label = "chord_voxels";
        cld.y_label = "probability";
        for (int64_t d = 1; d <= dmax; ++d) cld.x.push_back(double(d));
        for (const auto& [label, volume] : sources)
            for (int p = 0; p < volume.phase_count(); ++p) {
                const std::string key = label + ":" + volume.palette[size_t(p)];
                tpc.series[key] = axis_mean_curve(volume, p, dmax, false);
                cld.series[key] = axis_mean_curve(volume, p, dmax, true);
            }
        tpc.write_csv(paths.metrics_dir() + "/tpc.csv");
        cld.write_csv(paths.metrics_dir() + "/cld.csv");

        // Spectral profiles of central slices, on a frequency-fraction axis so
        // differently sized images are comparable.
        CurveSet fft;
        fft.x_label = "frequency_fraction_of_nyquist";
        fft.y_label = "log10_magnitude";
        const int points = 65;
        for (int i = 0; i < points; ++i) fft.x.push_back(double(i) / double(points - 1));
        for (const auto& [label, volume] : sources) {
            PhaseImage central = extract_slice(volume, 2, volume.nz() / 2);
            fft.series[label] = normalized_profile(radial_fft_profile(central), points);
        }
        if (!slice_files.empty())
            fft.series["hr_slice"] =
                normalized_profile(radial_fft_profile(load_image(slice_files.front())), points);
        fft.write_csv(paths.metrics_dir() + "/fft.csv");

        update_manifest(cfg, paths, Stage::evaluate,
                        json{{"sources", emitted},
                             {"samples", eval.samples},
                             {"cube", eval.cube},
                             {"curve_dmax", dmax}});
    });
}

void run_report(const ExperimentConfig& cfg) {
    with_stage(Stage::report, [&] {
        RunPaths paths(cfg.out_dir);
        fs::create_directories(paths.report_dir());

        std::vector<std::pair<std::string, MetricsReport>> loaded;
        for (const auto& path : sorted_files(paths.metrics_dir(), ".json"))
            loaded.emplace_back(fs::path(path).stem().string(), MetricsReport::load(path));
        require(!loaded.empty(), Errc::state,
                "no metric reports under '" + paths.metrics_dir() +
                    "': run the evaluate stage first");

        // Reference sources first, then generated ones alphabetically.
        std::stable_sort(loaded.begin(), loaded.end(), [](const auto& a, const auto& b) {
            auto rank = [](const std::string& s) { return s == "hr" ? 0 : s == "hr_slice" ? 1 : 2; };
            return std::make_pair(rank(a.first), a.first) < std::make_pair(rank(b.first), b.first);
        });
        std::vector<std::pair<std::string, const MetricsReport*>> sources;
        for (const auto& [label, report] : loaded) sources.emplace_back(label, &report);

        std::set<std::string> names;
        for (const auto& [label, report] : loaded) {
            (void)label;
            for (const auto& [name, value] : report.metrics) {
                (void)value;
                names.insert(name);
            }
        }
        auto family = [](const std::string& n) {
            if (n.rfind("vf_", 0) == 0) return 0;
            if (n.rfind("sa_", 0) == 0) return 1;
            if (n == "tpb") return 2;
            if (n.rfind("transport_", 0) == 0) return 3;
            return 4;
        };
        std::vector<std::string> ordered(names.begin(), names.end());
        std::sort(ordered.begin(), ordered.end(), [&](const std::string& a, const std::string& b) {
            return std::make_pair(family(a), a) < std::make_pair(family(b), b);
        });

        write_comparison_csv(sources, paths.report_dir() + "/comparison.csv");
        emit_violin_figure(sources, ordered, "Mesostructural metrics",
                           paths.report_dir() + "/metrics.svg");

        json figures = json::array();
        figures.push_back("metrics.svg");
        const struct {
            const char* csv;
            const char* svg;
            const char* title;
            const char* y_label;
        } curve_jobs[] = {
            {"tpc.csv", "tpc.svg", "Two-point correlation", "probability"},
            {"cld.csv", "cld.svg", "Chord length distribution", "probability"},
            {"fft.csv", "fft.svg", "Radial spectral profile", "log10 magnitude"},
        };
        for (const auto& job : curve_jobs) {
            const std::string csv = paths.metrics_dir() + "/" + job.csv;
            if (!fs::exists(csv)) continue;
            CurveSet curves = CurveSet::read_csv(csv);
            curves.y_label = job.y_label;
            emit_curve_figure(curves, job.title, paths.report_dir() + "/" + job.svg);
            figures.push_back(job.svg);
        }

        update_manifest(cfg, paths, Stage::report,
                        json{{"figures", figures}, {"table", "comparison.csv"}});
    });
}

void run_case_study(const ExperimentConfig& cfg, const TrainProgressFn& progress) {
    run_prepare(cfg);
    run_train(cfg, progress);
    run_generate(cfg);
    run_evaluate(cfg);
    run_report(cfg);
}

} // namespace voxfuse
