// Acceptance gate: one line per criterion, nonzero exit if a gating criterion
// fails. Criterion 7 trains a model at desk scale; its checkpoint is cached
// under VOXFUSE_ACCEPT_DIR (default ./acceptance_work) so reruns are fast.

#include <torch/torch.h>

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "degrade.hpp"
#include "downsample.hpp"
#include "fixtures.hpp"
#include "metrics.hpp"
#include "nets.hpp"
#include "netspec.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "trainer.hpp"
#include "volgrid.hpp"

using namespace voxfuse;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances -------------------------------------------------------
constexpr int k_oracle_volumes = 100;         // random volumes, exact agreement
constexpr double k_tol_transport = 1e-3;      // efficiency vs analytic value
constexpr double k_tol_flux_spread = 0.01;    // plane-flux conservation
constexpr double k_tol_sigma = 1e-12;         // blur sigma formula
constexpr double k_tol_grad_rel = 1e-4;       // downsampler gradcheck (f64)
constexpr double k_tol_fixed_point = 1e-7;    // hard one-hot fixed points
constexpr double k_vw_threshold = 0.005;      // generator-loss branch point (b)
constexpr double k_vw_coefficient = 10.0;     // generator-loss coefficient (c)
constexpr double k_tol_vw_mse = 0.01;         // end-to-end voxel-wise MSE
constexpr double k_tol_vf_abs = 0.05;         // per-phase VF vs HR slice
constexpr double k_tol_sa_rel = 0.20;         // interphase SA vs ground truth
constexpr int64_t k_sa_cubes = 64;            // sampled 64-cubes for SA stats
constexpr int64_t k_sa_cube_side = 64;
constexpr double k_case3_tpb = 0.01087;       // reference TPB mean (optional)
constexpr double k_tol_case3_rel = 0.10;

// ---- desk-scale training setup (criterion 7) ----------------------------------
constexpr int64_t k_desk_hr_side = 96;
constexpr uint64_t k_desk_fixture_seed = 7;
constexpr double k_desk_pitch_nm = 10.0;
constexpr int64_t k_desk_input_side = 16;     // scale factor 4
constexpr int64_t k_desk_output_side = 48;    // reduced CPU-budget size
constexpr int64_t k_desk_batch = 2;
constexpr int64_t k_desk_iterations = 9000;
constexpr uint64_t k_desk_train_seed = 7;
static_assert(k_desk_iterations <= 20000, "training budget cap");

struct Line {
    int id;
    std::string verdict; // PASS / FAIL / SKIP
    std::string text;
};

std::vector<Line> g_lines;
bool g_gate_ok = true;

void report(int id, bool pass, const std::string& text, bool gating = true) {
    g_lines.push_back({id, pass ? "PASS" : "FAIL", text});
    if (!pass && gating) g_gate_ok = false;
    std::printf("%s  %2d — %s\n", pass ? "PASS" : "FAIL", id, text.c_str());
    std::fflush(stdout);
}

void report_skip(int id, const std::string& text) {
    g_lines.push_back({id, "SKIP", text});
    std::printf("SKIP  %2d — %s\n", id, text.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

// ---- criterion 1: metrics equal brute-force oracles exactly -------------------

void criterion_1() {
    int mismatches = 0;
    for (int trial = 0; trial < k_oracle_volumes; ++trial) {
        Rng dims_rng(4000 + uint64_t(trial));
        const std::array<int64_t, 3> dims{3 + int64_t(dims_rng.below(10)),
                                          3 + int64_t(dims_rng.below(10)),
                                          3 + int64_t(dims_rng.below(10))};
        const PhaseVolume v = oracle::random_volume(dims, 3, 9000 + uint64_t(trial));
        const int64_t dmax = std::min<int64_t>(5, *std::min_element(dims.begin(), dims.end()) - 1);

        for (int p = 0; p < 3; ++p)
            if (volume_fraction(v, p) != oracle::volume_fraction(v, p)) ++mismatches;
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b)
                if (interphase_surface_area(v, a, b) != oracle::surface_area(v, a, b))
                    ++mismatches;
        if (tpb_density(v) != oracle::tpb_density(v)) ++mismatches;
        for (int axis = 0; axis < 3; ++axis) {
            if (two_point_correlation(v, 0, 0, axis, dmax) !=
                oracle::two_point_correlation(v, 0, 0, axis, dmax))
                ++mismatches;
            if (two_point_correlation(v, 0, 1, axis, dmax) !=
                oracle::two_point_correlation(v, 0, 1, axis, dmax))
                ++mismatches;
            for (int p = 0; p < 3; ++p)
                if (chord_length_distribution(v, p, axis, dmax) !=
                    oracle::chord_length_distribution(v, p, axis, dmax))
                    ++mismatches;
        }
    }
    report(1, mismatches == 0,
           fmt("metrics vs exhaustive oracles: %d volumes, %d mismatching values "
               "(VF, SA, TPB, two-point, chord lengths; exact equality)",
               k_oracle_volumes, mismatches));
}

// ---- criterion 2: transport solver ---------------------------------------------

void criterion_2() {
    bool ok = true;
    std::string notes;

    // Fully dense: efficiency exactly 1 by construction of the face weights.
    const PhaseVolume dense =
        PhaseVolume::create({8, 8, 8}, 1.0, {"solid"}, std::vector<uint8_t>(512, 0));
    const TransportResult rd = transport_solve(dense, 0, 2);
    ok &= std::abs(rd.efficiency - 1.0) <= k_tol_transport;
    ok &= rd.plane_flux_spread <= k_tol_flux_spread;
    notes += fmt("dense=%.6f", rd.efficiency);

    // Straight 2x2 channel through a 4x4 cross-section: efficiency = 0.25.
    std::vector<uint8_t> channel(4 * 4 * 8, 1);
    for (int64_t z = 0; z < 8; ++z)
        for (int64_t y = 0; y < 2; ++y)
            for (int64_t x = 0; x < 2; ++x) channel[size_t((z * 4 + y) * 4 + x)] = 0;
    const PhaseVolume chan = PhaseVolume::create({4, 4, 8}, 1.0, {"pore", "solid"}, channel);
    const TransportResult rc = transport_solve(chan, 0, 2);
    ok &= std::abs(volume_fraction(chan, 0) - 0.25) < 1e-12;
    ok &= std::abs(rc.efficiency - 0.25) <= k_tol_transport;
    ok &= rc.plane_flux_spread <= k_tol_flux_spread;
    notes += fmt(" channel=%.6f", rc.efficiency);

    // Block the channel with a transverse wall: no percolation, exact zero.
    std::vector<uint8_t> blocked = channel;
    for (int64_t y = 0; y < 4; ++y)
        for (int64_t x = 0; x < 4; ++x) blocked[size_t((4 * 4 + y) * 4 + x)] = 1;
    const TransportResult rb =
        transport_solve(PhaseVolume::create({4, 4, 8}, 1.0, {"pore", "solid"}, blocked), 0, 2);
    ok &= !rb.percolating;
    ok &= rb.efficiency == 0.0;
    notes += fmt(" blocked=%g", rb.efficiency);

    // Random porous medium: converged flux must be conserved plane to plane.
    Rng rng(12);
    std::vector<uint8_t> porous(12 * 12 * 12);
    for (auto& l : porous) l = rng.uniform() < 0.75 ? 0 : 1;
    const TransportResult rp =
        transport_solve(PhaseVolume::create({12, 12, 12}, 1.0, {"pore", "solid"}, porous), 0, 2);
    ok &= rp.converged;
    ok &= rp.plane_flux_spread <= k_tol_flux_spread;
    notes += fmt(" porous_spread=%.4f", rp.plane_flux_spread);

    report(2, ok, "transport solver: " + notes +
                      fmt(" (tol %.0e, flux conservation %.0f%%)", k_tol_transport,
                          k_tol_flux_spread * 100));
}

// ---- criterion 3: blur kernel formula ------------------------------------------

void criterion_3() {
    struct Case {
        double sf;
        int kernel;
        double sigma;
    };
    const Case cases[] = {{4.0, 3, 0.8}, {8.0, 7, 1.4}, {1.6, 1, 0.5}};
    bool ok = true;
    for (const Case& c : cases) {
        const BlurSpec b = kernel_for(c.sf);
        ok &= b.kernel == c.kernel;
        ok &= std::abs(b.sigma - c.sigma) <= k_tol_sigma;
    }
    report(3, ok,
           fmt("kernel_for: sf=4 -> (k=%d, s=%.3f), sf=8 -> (k=%d, s=%.3f), "
               "sf=1.6 -> (k=%d, s=%.3f)",
               kernel_for(4.0).kernel, kernel_for(4.0).sigma, kernel_for(8.0).kernel,
               kernel_for(8.0).sigma, kernel_for(1.6).kernel, kernel_for(1.6).sigma));
}

// ---- criterion 4: differentiable downsampler gradients --------------------------

void criterion_4() {
    DownsampleSpec spec;
    spec.scale = ScaleFactor::from_input_side(16); // x4

    torch::manual_seed(7);
    torch::Tensor sr = torch::randn({1, 2, 8, 8, 8}, torch::kFloat64).requires_grad_(true);
    torch::Tensor lr = torch::rand({1, 2, 2, 2, 2}, torch::kFloat64);
    lr = lr / lr.sum(1, /*keepdim=*/true);

    voxelwise_loss(sr, lr, spec).backward();
    torch::Tensor analytic = sr.grad().detach().clone().reshape(-1);

    // Relative error in the 2-norm across the full gradient vector; the
    // per-component quotient drowns in finite-difference roundoff wherever
    // the true component is near zero.
    double err_sq = 0.0, ref_sq = 0.0;
    {
        torch::NoGradGuard no_grad;
        torch::Tensor flat = sr.detach().reshape(-1);
        const double h = 1e-6;
        for (int64_t i = 0; i < flat.numel(); ++i) {
            const double orig = flat[i].item<double>();
            flat[i] = orig + h;
            const double up = voxelwise_loss(sr.detach(), lr, spec).item<double>();
            flat[i] = orig - h;
            const double down = voxelwise_loss(sr.detach(), lr, spec).item<double>();
            flat[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[i].item<double>();
            err_sq += (numeric - a) * (numeric - a);
            ref_sq += numeric * numeric;
        }
    }
    const double rel_err = ref_sq > 0.0 ? std::sqrt(err_sq / ref_sq) : 1.0;
    const bool grads_ok = rel_err <= k_tol_grad_rel;

    // Constant hard one-hot fields pass through the full chain unchanged.
    double worst_fixed = 0.0;
    for (int64_t hot = 0; hot < 2; ++hot) {
        torch::Tensor field = torch::zeros({1, 2, 8, 8, 8}, torch::kFloat64);
        field.index_put_({0, hot}, 1.0);
        torch::Tensor down = differentiable_downsample(field, spec);
        torch::Tensor expect = torch::zeros({1, 2, 2, 2, 2}, torch::kFloat64);
        expect.index_put_({0, hot}, 1.0);
        worst_fixed = std::max(worst_fixed, (down - expect).abs().max().item<double>());
    }
    const bool fixed_ok = worst_fixed <= k_tol_fixed_point;

    report(4, grads_ok && fixed_ok,
           fmt("downsampler: gradient rel err %.2e in the 2-norm (tol %.0e), "
               "fixed-point deviation %.2e (tol %.0e)",
               rel_err, k_tol_grad_rel, worst_fixed, k_tol_fixed_point));
}

// ---- criterion 5: training mechanics --------------------------------------------

void criterion_5() {
    // Geometry: 64-cube, 4 layers off each face, 3 * 56 slices of 56x56.
    const CropSlicePlan plan = crop_and_slice_plan(64, 4);
    const bool plan_ok =
        plan.cropped_side == 56 && plan.patch_count == 168 &&
        int64_t(slice_schedule(plan).size()) == 168;

    // Update ratio, observed through optimizer step counters after 12 updates.
    const std::string dir =
        (fs::temp_directory_path() / "voxfuse_accept_ratio").string();
    fs::remove_all(dir);
    TrainSettings s;
    s.input_side = 16;
    s.train_output_side = 24;
    s.batch_size = 1;
    s.iterations = 12;
    s.monitor_interval = 12;
    s.checkpoint_interval = 12;
    s.merge_map = {0, 1, 0};
    s.gen_widths = {3};
    s.critic_widths = {4, 4};
    const PhaseVolume lr = oracle::random_volume({16, 16, 16}, 2, 3);
    Rng slice_rng(5);
    std::vector<uint8_t> labels(24 * 24);
    for (auto& l : labels) l = uint8_t(slice_rng.below(3));
    const HRSliceBank bank = HRSliceBank::isotropic(
        {PhaseImage::create({24, 24}, 1.0, {"a", "b", "c"}, labels)});
    const TrainResult res = train_model(lr, bank, s, 1, dir);
    const Checkpoint cp = load_checkpoint(res.checkpoint_path);
    const bool ratio_ok = cp.gen_opt.step == 2 && cp.critic_opts[0].step == 10 &&
                          cp.critic_opts[0].step == 5 * cp.gen_opt.step;
    fs::remove_all(dir);

    // Loss branch: free below b, coefficient c at and above b.
    torch::Tensor scores = torch::tensor({1.0, 2.0, 3.0}, torch::kFloat64);
    auto loss_at = [&](double vw) {
        return generator_loss(scores, torch::tensor(vw, torch::kFloat64), k_vw_threshold,
                              k_vw_coefficient)
            .item<double>();
    };
    const double adversarial = -2.0;
    const bool branch_ok =
        loss_at(std::nextafter(k_vw_threshold, 0.0)) == adversarial &&
        std::abs(loss_at(k_vw_threshold) - (adversarial + k_vw_coefficient * k_vw_threshold)) <
            1e-12 &&
        std::abs(loss_at(0.1) - (adversarial + k_vw_coefficient * 0.1)) < 1e-12;

    report(5, plan_ok && ratio_ok && branch_ok,
           fmt("mechanics: %" PRId64 " patches of %" PRId64 "^2 from 64^3; "
               "critic/generator steps %" PRId64 "/%" PRId64 " after 12 updates; "
               "loss branch switches at b=%.3f with c=%.0f",
               plan.patch_count, plan.cropped_side, cp.critic_opts[0].step, cp.gen_opt.step,
               k_vw_threshold, k_vw_coefficient));
}

// ---- criterion 6: size law and bit-exact tiling ----------------------------------

void criterion_6() {
    const ScaleFactor sf4 = ScaleFactor::from_input_side(16);
    const GeneratorSpec spec = build_generator_spec(sf4, 2, 2, 1, {2});
    const int64_t raw = spec.output_extent(128);
    const int64_t cropped = raw - 2 * boundary_crop_layers(sf4);
    const bool size_ok = raw == 512 && cropped == 504;

    // Bit-exact piecewise generation on a 32^3 low-res volume.
    Checkpoint cp;
    cp.settings.input_side = 16;
    cp.settings.train_output_side = 24;
    cp.settings.noise_channels = 1;
    cp.gen = spec;
    cp.critics = build_critic_specs(2, false, 16, {2, 2});
    cp.lr_palette = {"pore", "solid"};
    cp.hr_palette = {"pore", "solid"};
    cp.lr_pitch_nm = 4.0;
    Rng init(21);
    cp.gen_params = TorchGenerator::create(cp.gen, init).to_blobs();

    Rng fill(6);
    std::vector<uint8_t> labels(32 * 32 * 32);
    for (auto& l : labels) l = uint8_t(fill.below(2));
    const PhaseVolume lr = PhaseVolume::create({32, 32, 32}, 4.0, cp.lr_palette, labels);

    const OneHotField single = generate_probabilities(cp, lr, 42, 0);
    const OneHotField tiled = generate_probabilities(cp, lr, 42, 16);
    const bool tiling_ok = single.values() == tiled.values();
    const bool dims_ok = single.spatial() == std::vector<int64_t>{128, 128, 128};

    report(6, size_ok && tiling_ok && dims_ok,
           fmt("size law: 128^3 -> %" PRId64 "^3 raw, %" PRId64 "^3 cropped; "
               "tiled == single pass on 32^3: %s",
               raw, cropped, tiling_ok ? "bit-exact" : "MISMATCH"));
}

// ---- criteria 7/8/9: desk-scale training on the sphere fixture -------------------

struct DeskArtifacts {
    bool trained = false;
    std::string note;
    PhaseVolume hr;
    PhaseImage hr_slice;
    PhaseVolume lr;
    Checkpoint cp;
    PhaseVolume sr1, sr2;
    double vw1 = 1.0, vw2 = 1.0;
};

double voxelwise_mse(const Checkpoint& cp, const PhaseVolume& lr, const OneHotField& probs) {
    DownsampleSpec spec;
    spec.scale = cp.settings.scale();
    spec.mode = cp.settings.mode;
    spec.merge_map = cp.settings.merge_map;
    spec.temperature = cp.settings.temperature;

    const auto& sp = probs.spatial();
    torch::Tensor sr = torch::from_blob(const_cast<float*>(probs.values().data()),
                                        {1, probs.channels(), sp[2], sp[1], sp[0]})
                           .clone();
    const OneHotField lrf = one_hot_encode(lr);
    torch::Tensor target = torch::from_blob(const_cast<float*>(lrf.values().data()),
                                            {1, lrf.channels(), lr.nz(), lr.ny(), lr.nx()})
                               .clone();
    return voxelwise_loss(sr, target, spec).item<double>();
}

DeskArtifacts desk_setup() {
    DeskArtifacts art;
    art.hr = make_sphere_shell_fixture(k_desk_hr_side, k_desk_fixture_seed, k_desk_pitch_nm);
    art.hr_slice = extract_slice(art.hr, 2, k_desk_hr_side / 2);

    DegradeSpec degrade;
    degrade.mode = DegradeMode::under_resolved;
    degrade.scale = ScaleFactor::from_input_side(k_desk_input_side);
    degrade.merge_mapping = {0, 1, 0}; // binder shell joins the pore class
    degrade.merged_palette = {"pore", "AM"};
    art.lr = simulate_low_res(art.hr, degrade);

    const char* env = std::getenv("VOXFUSE_ACCEPT_DIR");
    const std::string work = env ? env : "acceptance_work";
    fs::create_directories(work);

    TrainSettings s;
    s.input_side = k_desk_input_side;
    s.train_output_side = k_desk_output_side;
    s.batch_size = k_desk_batch;
    s.iterations = k_desk_iterations;
    s.monitor_interval = 100;
    s.checkpoint_interval = 1000;
    s.merge_map = {0, 1, 0};
    s.gen_widths = {24, 16, 12};
    s.critic_widths = {16, 32, 64, 128};

    const HRSliceBank bank = HRSliceBank::isotropic({art.hr_slice});
    const std::string latest = work + "/latest.vfck";
    std::string resume;
    if (fs::exists(latest)) {
        try {
            const Checkpoint prev = load_checkpoint(latest);
            GeneratorSpec expect = build_generator_spec(
                s.scale(), int64_t(art.lr.palette.size()), bank.phase_count(),
                s.noise_channels, s.gen_widths);
            auto expect_critics = build_critic_specs(
                bank.phase_count(), s.anisotropic,
                crop_and_slice_plan(s.train_output_side, s.crop_layers).cropped_side,
                s.critic_widths);
            if (prev.spec_hash() == fnv1a64(spec_signature(expect, expect_critics)))
                resume = latest;
        } catch (const std::exception&) {
            resume.clear(); // unreadable cache: retrain from scratch
        }
    }

    const int64_t start_iter = resume.empty() ? 0 : load_checkpoint(resume).iteration;
    std::printf("      [7] training: %" PRId64 " -> %" PRId64 " iterations (work dir %s)\n",
                start_iter, k_desk_iterations, work.c_str());
    std::fflush(stdout);
    const TrainResult res = train_model(art.lr, bank, s, k_desk_train_seed, work, resume,
                                        [](const TrainProgress& p) {
                                            if (p.iteration % 1000 == 0)
                                                std::printf("      [7] iter %" PRId64
                                                            "/%" PRId64 "  vw=%.5f\n",
                                                            p.iteration, p.total, p.voxelwise);
                                            std::fflush(stdout);
                                        });
    art.cp = load_checkpoint(res.checkpoint_path);
    art.note = start_iter >= k_desk_iterations
                   ? "cached checkpoint"
                   : fmt("trained %" PRId64 " iterations", k_desk_iterations - start_iter);

    const OneHotField probs1 = generate_probabilities(art.cp, art.lr, 1);
    const OneHotField probs2 = generate_probabilities(art.cp, art.lr, 2);
    art.vw1 = voxelwise_mse(art.cp, art.lr, probs1);
    art.vw2 = voxelwise_mse(art.cp, art.lr, probs2);

    SynthOptions opt;
    opt.seed = 1;
    art.sr1 = generate_volume(art.cp, art.lr, opt);
    opt.seed = 2;
    art.sr2 = generate_volume(art.cp, art.lr, opt);
    art.trained = true;
    return art;
}

void criterion_7(const DeskArtifacts& art) {
    if (!art.trained) {
        report(7, false, "desk-scale training did not produce a model");
        return;
    }
    const bool mse_ok = art.vw1 <= k_tol_vw_mse;

    double worst_vf = 0.0;
    for (int p = 0; p < 3; ++p)
        worst_vf = std::max(worst_vf, std::abs(volume_fraction(art.sr1, p) -
                                               volume_fraction(art.hr_slice, p)));
    const bool vf_ok = worst_vf <= k_tol_vf_abs;

    double worst_sa_rel = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = a + 1; b < 3; ++b) {
            const double truth = interphase_surface_area(art.hr, a, b);
            MetricSpec m{"sa", [a, b](const PhaseVolume& v) {
                             return interphase_surface_area(v, a, b);
                         }};
            const Distribution d =
                subvolume_distribution(art.sr1, m, k_sa_cubes, k_sa_cube_side, 11);
            worst_sa_rel = std::max(worst_sa_rel, std::abs(d.mean - truth) / truth);
        }
    const bool sa_ok = worst_sa_rel <= k_tol_sa_rel;

    report(7, mse_ok && vf_ok && sa_ok,
           fmt("desk-scale run (%s): voxel-wise MSE %.5f (<= %.2f), "
               "worst VF gap %.3f (<= %.2f), worst SA rel dev %.1f%% (<= %.0f%%)",
               art.note.c_str(), art.vw1, k_tol_vw_mse, worst_vf, k_tol_vf_abs,
               worst_sa_rel * 100, k_tol_sa_rel * 100));
}

void criterion_8(const DeskArtifacts& art) {
    if (!art.trained) {
        report(8, false, "no trained model to compare seeds on");
        return;
    }
    int64_t differing = 0;
    for (size_t i = 0; i < art.sr1.labels.size(); ++i)
        if (art.sr1.labels[i] != art.sr2.labels[i]) ++differing;

    // The ablation without noise channels must still run to completion.
    bool ablation_ok = false;
    const std::string dir = (fs::temp_directory_path() / "voxfuse_accept_nonoise").string();
    fs::remove_all(dir);
    try {
        TrainSettings s;
        s.input_side = k_desk_input_side;
        s.train_output_side = 24;
        s.batch_size = 1;
        s.noise_channels = 0;
        s.iterations = 6;
        s.monitor_interval = 6;
        s.checkpoint_interval = 6;
        s.merge_map = {0, 1, 0};
        s.gen_widths = {3};
        s.critic_widths = {4, 4};
        const HRSliceBank bank = HRSliceBank::isotropic({art.hr_slice});
        ablation_ok = train_model(art.lr, bank, s, 2, dir).iterations == 6;
    } catch (const std::exception&) {
        ablation_ok = false;
    }
    fs::remove_all(dir);

    report(8, differing >= 1 && art.vw1 <= k_tol_vw_mse && art.vw2 <= k_tol_vw_mse && ablation_ok,
           fmt("stochasticity: seeds differ in %" PRId64 " voxels; "
               "MSE seed1 %.5f / seed2 %.5f (<= %.2f); noise-free ablation %s",
               differing, art.vw1, art.vw2, k_tol_vw_mse,
               ablation_ok ? "completed" : "FAILED"));
}

void criterion_9(const DeskArtifacts& art) {
    if (!art.trained) {
        report(9, false, "no generated slice to analyze");
        return;
    }
    const PhaseImage sr_slice = extract_slice(art.sr1, 2, art.sr1.nz() / 2);
    const std::vector<double> sr_profile = radial_fft_profile(sr_slice);

    // Blur each phase indicator of the original slice with the sf=4 kernel
    // and average the per-phase spectra, mirroring the label-image overload.
    const PhaseImage& hr = art.hr_slice;
    const BlurSpec blur = kernel_for(4.0);
    std::vector<double> blur_profile;
    for (int p = 0; p < hr.phase_count(); ++p) {
        std::vector<double> grid(size_t(hr.total()), 0.0);
        for (int64_t y = 0; y < hr.ny(); ++y)
            for (int64_t x = 0; x < hr.nx(); ++x)
                grid[size_t(y * hr.nx() + x)] = hr.at(x, y) == p ? 1.0 : 0.0;
        gaussian_blur_3d(grid, {hr.nx(), hr.ny(), 1}, blur, BoundaryMode::reflect);
        const std::vector<double> prof = radial_fft_profile(grid, {hr.nx(), hr.ny()});
        if (blur_profile.empty()) blur_profile.assign(prof.size(), 0.0);
        for (size_t i = 0; i < prof.size(); ++i) blur_profile[i] += prof[i] / hr.phase_count();
    }

    const double sr_band = profile_band_mean(sr_profile, 0.5, 1.0);
    const double blur_band = profile_band_mean(blur_profile, 0.5, 1.0);
    report(9, sr_band > blur_band,
           fmt("spectral check: upper-band mean %.3f (SR slice) vs %.3f (blurred original)",
               sr_band, blur_band));
}

// ---- criterion 10: optional external dataset -------------------------------------

void criterion_10() {
    const char* dir = std::getenv("VOXFUSE_CASE3_DIR");
    if (!dir) {
        report_skip(10, "external dataset check (set VOXFUSE_CASE3_DIR to enable)");
        return;
    }
    try {
        std::string volume_path;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".vox") {
                volume_path = entry.path().string();
                break;
            }
        if (volume_path.empty()) {
            report(10, false, "no .vox volume found under VOXFUSE_CASE3_DIR", /*gating=*/false);
            return;
        }
        const PhaseVolume v = load_volume(volume_path);
        MetricSpec m{"tpb", [](const PhaseVolume& vol) { return tpb_density(vol); }};
        const Distribution d = subvolume_distribution(v, m, 256, 64, 17);
        const double rel = std::abs(d.mean - k_case3_tpb) / k_case3_tpb;
        report(10, rel <= k_tol_case3_rel,
               fmt("dataset TPB mean %.5f vs %.5f (rel dev %.1f%%; normalization-convention "
                   "differences are reported, not gated)",
                   d.mean, k_case3_tpb, rel * 100),
               /*gating=*/false);
    } catch (const std::exception& e) {
        report(10, false, fmt("dataset check failed: %s", e.what()), /*gating=*/false);
    }
}

} // namespace

int main() {
    std::printf("voxfuse acceptance gate\n");
    std::fflush(stdout);

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();

    DeskArtifacts art;
    try {
        art = desk_setup();
    } catch (const std::exception& e) {
        art.trained = false;
        std::printf("      [7] training failed: %s\n", e.what());
    }
    criterion_7(art);
    criterion_8(art);
    criterion_9(art);
    criterion_10();

    int fails = 0;
    for (const auto& line : g_lines)
        if (line.verdict == "FAIL") ++fails;
    std::printf("%s (%d failing)\n", g_gate_ok ? "ALL GATING CRITERIA PASSED" : "GATE FAILED",
                fails);
    return g_gate_ok ? 0 : 1;
}
