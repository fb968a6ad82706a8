#include "trainer.hpp"

#include <torch/torch.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "downsample.hpp"
#include "metrics.hpp"
#include "nets.hpp"
#include "netspec.hpp"

namespace voxfuse {

namespace {

constexpr std::array<Orientation, 3> k_slice_order{Orientation::xy, Orientation::yz,
                                                   Orientation::xz};

// Draw order per batch item: cube corner (x, y, z) inside sample_cube.
torch::Tensor sample_lr_batch(const PhaseVolume& lr, int64_t side, int64_t batch, Rng& rng) {
    const int64_t channels = int64_t(lr.palette.size());
    torch::Tensor out = torch::empty({batch, channels, side, side, side}, torch::kFloat32);
    float* p = out.data_ptr<float>();
    const int64_t item = channels * side * side * side;
    for (int64_t b = 0; b < batch; ++b) {
        OneHotField cube = sample_cube(lr, side, rng);
        std::memcpy(p + b * item, cube.values().data(), size_t(item) * sizeof(float));
    }
    return out;
}

// Draw order per patch: variant index, window x, window y (inside
// sample_patch).
torch::Tensor sample_real_patches(const HRSliceBank& bank, Orientation o, int64_t side,
                                  int64_t count, Rng& rng) {
    const int64_t channels = bank.phase_count();
    torch::Tensor out = torch::empty({count, channels, side, side}, torch::kFloat32);
    float* p = out.data_ptr<float>();
    const int64_t item = channels * side * side;
    for (int64_t i = 0; i < count; ++i) {
        OneHotField patch = bank.sample_patch(o, side, rng);
        std::memcpy(p + i * item, patch.values().data(), size_t(item) * sizeof(float));
    }
    return out;
}

torch::Tensor draw_noise(int64_t batch, int64_t channels, int64_t side, Rng& rng) {
    torch::Tensor out = torch::empty({batch, channels, side, side, side}, torch::kFloat32);
    float* p = out.data_ptr<float>();
    const int64_t n = out.numel();
    for (int64_t i = 0; i < n; ++i) p[i] = float(rng.normal());
    return out;
}

// Cuts a cropped (B, C, z, y, x) cube batch into per-orientation patch
// batches laid out exactly like the HR bank's patches: xy -> (C, y, x),
// yz -> (C, z, y), xz -> (C, z, x).
std::array<torch::Tensor, 3> slice_cropped(const torch::Tensor& cropped) {
    const int64_t b = cropped.size(0), c = cropped.size(1), s = cropped.size(2);
    return {cropped.permute({0, 2, 1, 3, 4}).reshape({b * s, c, s, s}),
            cropped.permute({0, 4, 1, 2, 3}).reshape({b * s, c, s, s}),
            cropped.permute({0, 3, 1, 2, 4}).reshape({b * s, c, s, s})};
}

torch::Tensor crop_faces(const torch::Tensor& cube, int64_t layers) {
    if (layers == 0) return cube;
    const int64_t s = cube.size(2) - 2 * layers;
    return cube.narrow(2, layers, s).narrow(3, layers, s).narrow(4, layers, s);
}

PhaseVolume decode_first_item(const torch::Tensor& cropped,
                              const std::vector<std::string>& palette, double pitch_nm) {
    torch::Tensor labels = cropped[0].argmax(0).to(torch::kUInt8).contiguous();
    const int64_t s = labels.size(0);
    std::vector<uint8_t> raw(size_t(s * s * s));
    std::memcpy(raw.data(), labels.data_ptr<uint8_t>(), raw.size());
    return PhaseVolume::create({s, s, s}, pitch_nm, palette, std::move(raw));
}

void check_finite(double value, const char* what, int64_t iteration) {
    require(std::isfinite(value), Errc::numeric,
            std::string("non-finite ") + what + " at iteration " +
                std::to_string(iteration) + "; training aborted");
}

void validate_data(const PhaseVolume& lr, const HRSliceBank& bank,
                   const TrainSettings& settings) {
    settings.validate();
    lr.validate();
    const int64_t d = settings.lr_cube_side();
    for (int axis = 0; axis < 3; ++axis)
        require(lr.dims[size_t(axis)] >= d, Errc::invalid_argument,
                "low-res volume extent " + std::to_string(lr.dims[size_t(axis)]) +
                    " is too small to sample " + std::to_string(d) + "-voxel cubes");
    require(bank.is_isotropic() != settings.anisotropic, Errc::invalid_argument,
            settings.anisotropic ? "anisotropic training needs per-orientation slice pools"
                                 : "isotropic training needs an isotropic slice pool");
    const int64_t n_lr = int64_t(lr.palette.size());
    const int64_t n_hr = bank.phase_count();
    if (settings.merge_map.empty())
        require(n_lr == n_hr, Errc::invalid_argument,
                "phase counts differ (" + std::to_string(n_hr) + " high-res vs " +
                    std::to_string(n_lr) + " low-res); a merge map is required");
    else {
        DownsampleSpec probe;
        probe.scale = settings.scale();
        probe.merge_map = settings.merge_map;
        probe.validate(n_hr);
        require(probe.lr_channels(n_hr) == n_lr, Errc::invalid_argument,
                "merge map produces " + std::to_string(probe.lr_channels(n_hr)) +
                    " channels but the low-res volume has " + std::to_string(n_lr));
    }
    const auto plan = crop_and_slice_plan(settings.train_output_side, settings.crop_layers);
    const auto orientations = settings.anisotropic
                                  ? std::vector<Orientation>{Orientation::xy, Orientation::yz,
                                                             Orientation::xz}
                                  : std::vector<Orientation>{Orientation::isotropic};
    for (Orientation o : orientations)
        for (const PhaseImage& img : bank.variants(o))
            require(img.dims[0] >= plan.cropped_side && img.dims[1] >= plan.cropped_side,
                    Errc::invalid_argument,
                    "high-res slice smaller than the " + std::to_string(plan.cropped_side) +
                        "-pixel training patches");
}

struct LiveModel {
    TorchGenerator gen;
    std::vector<TorchCritic> critics;
    std::unique_ptr<Adam> gen_opt;
    std::vector<std::unique_ptr<Adam>> critic_opts;
};

LiveModel wake(const Checkpoint& cp) {
    LiveModel m;
    m.gen = TorchGenerator::from_blobs(cp.gen, cp.gen_params);
    for (size_t i = 0; i < cp.critics.size(); ++i)
        m.critics.push_back(TorchCritic::from_blobs(cp.critics[i], cp.critic_params[i]));
    const auto& s = cp.settings;
    m.gen_opt = std::make_unique<Adam>(m.gen.parameters(), s.learning_rate, s.adam_beta1,
                                       s.adam_beta2, s.adam_eps);
    m.gen_opt->load_blobs(cp.gen_opt);
    for (size_t i = 0; i < m.critics.size(); ++i) {
        m.critic_opts.push_back(std::make_unique<Adam>(m.critics[i].parameters(),
                                                       s.learning_rate, s.adam_beta1,
                                                       s.adam_beta2, s.adam_eps));
        m.critic_opts[i]->load_blobs(cp.critic_opts[i]);
    }
    return m;
}

void snapshot(Checkpoint& cp, const LiveModel& m, const Rng& rng, int64_t iteration) {
    cp.iteration = iteration;
    cp.rng_state = rng.state();
    cp.gen_params = m.gen.to_blobs();
    cp.critic_params.clear();
    for (const auto& critic : m.critics) cp.critic_params.push_back(critic.to_blobs());
    cp.gen_opt = m.gen_opt->to_blobs();
    cp.critic_opts.clear();
    for (const auto& opt : m.critic_opts) cp.critic_opts.push_back(opt->to_blobs());
}

} // namespace

Checkpoint initialize_model(const PhaseVolume& lr, const HRSliceBank& bank,
                            const TrainSettings& settings, uint64_t seed) {
    validate_data(lr, bank, settings);
    const auto plan = crop_and_slice_plan(settings.train_output_side, settings.crop_layers);

    Checkpoint cp;
    cp.settings = settings;
    cp.gen = build_generator_spec(settings.scale(), int64_t(lr.palette.size()),
                                  bank.phase_count(), settings.noise_channels,
                                  settings.gen_widths);
    cp.critics = build_critic_specs(bank.phase_count(), settings.anisotropic,
                                    plan.cropped_side, settings.critic_widths);
    cp.lr_palette = lr.palette;
    cp.hr_palette = bank.palette();
    cp.lr_pitch_nm = lr.voxel_pitch_nm;
    cp.iteration = 0;

    Rng rng(seed);
    TorchGenerator gen = TorchGenerator::create(cp.gen, rng);
    std::vector<TorchCritic> critics;
    for (const auto& spec : cp.critics) critics.push_back(TorchCritic::create(spec, rng));
    cp.rng_state = rng.state();

    cp.gen_params = gen.to_blobs();
    for (const auto& critic : critics) cp.critic_params.push_back(critic.to_blobs());
    Adam gen_opt(gen.parameters(), settings.learning_rate, settings.adam_beta1,
                 settings.adam_beta2, settings.adam_eps);
    cp.gen_opt = gen_opt.to_blobs();
    for (auto& critic : critics) {
        Adam opt(critic.parameters(), settings.learning_rate, settings.adam_beta1,
                 settings.adam_beta2, settings.adam_eps);
        cp.critic_opts.push_back(opt.to_blobs());
    }
    return cp;
}

TrainResult train_model(const PhaseVolume& lr, const HRSliceBank& bank,
                        const TrainSettings& settings, uint64_t seed,
                        const std::string& checkpoint_dir, const std::string& resume_path,
                        const TrainProgressFn& progress) {
    validate_data(lr, bank, settings);
    std::filesystem::create_directories(checkpoint_dir);

    Checkpoint cp;
    if (resume_path.empty()) {
        cp = initialize_model(lr, bank, settings, seed);
    } else {
        cp = load_checkpoint(resume_path);
        const auto expected_plan =
            crop_and_slice_plan(settings.train_output_side, settings.crop_layers);
        GeneratorSpec expect_gen =
            build_generator_spec(settings.scale(), int64_t(lr.palette.size()),
                                 bank.phase_count(), settings.noise_channels,
                                 settings.gen_widths);
        auto expect_critics = build_critic_specs(bank.phase_count(), settings.anisotropic,
                                                 expected_plan.cropped_side,
                                                 settings.critic_widths);
        require(cp.spec_hash() == fnv1a64(spec_signature(expect_gen, expect_critics)),
                Errc::state,
                "checkpoint architecture does not match this data/settings combination");
        cp.settings = settings; // budget and cadence may change across resumes
    }

    LiveModel model = wake(cp);
    Rng rng;
    rng.restore(cp.rng_state);

    DownsampleSpec dspec;
    dspec.scale = settings.scale();
    dspec.mode = settings.mode;
    dspec.merge_map = settings.merge_map;
    dspec.temperature = settings.temperature;

    const auto plan = crop_and_slice_plan(settings.train_output_side, settings.crop_layers);
    const int64_t d = settings.lr_cube_side();
    const int64_t s = plan.cropped_side;
    const int64_t batch = settings.batch_size;
    const int64_t cycle = settings.critic_iters_per_g + 1;
    const double sf = settings.scale().value();

    const std::string latest = checkpoint_dir + "/latest.vfck";
    const std::string history_csv = checkpoint_dir + "/history.csv";
    auto write_snapshot = [&](int64_t done, bool numbered) {
        snapshot(cp, model, rng, done);
        if (numbered)
            save_checkpoint(cp, checkpoint_dir + "/checkpoint_" + std::to_string(done) + ".vfck");
        save_checkpoint(cp, latest);
        write_history_csv(cp.history, history_csv);
    };

    double last_critic = 0.0, last_gen = 0.0, last_vw = 0.0;
    torch::Tensor last_cropped; // most recent cropped SR batch, detached

    int64_t done = cp.iteration;
    if (done >= settings.iterations) {
        write_snapshot(done, false);
        return {latest, cp.history, done};
    }

    while (done < settings.iterations) {
        const bool generator_turn = (done % cycle) == cycle - 1;

        // Shared draws: low-res cubes first, then the noise block.
        torch::Tensor cubes = sample_lr_batch(lr, d, batch, rng);
        torch::Tensor input = cubes;
        if (settings.noise_channels > 0)
            input = torch::cat({cubes, draw_noise(batch, settings.noise_channels, d, rng)}, 1);

        if (!generator_turn) {
            torch::Tensor cropped;
            {
                torch::NoGradGuard no_grad;
                cropped = crop_faces(model.gen.forward(input), settings.crop_layers);
            }
            auto fake = slice_cropped(cropped);
            // Real patches are drawn for all three orientations first, then
            // the mixing coefficients, critic by critic.
            std::array<torch::Tensor, 3> real;
            for (size_t o = 0; o < 3; ++o)
                real[o] = sample_real_patches(bank, k_slice_order[o], s, batch * s, rng);

            double loss_sum = 0.0;
            for (size_t ci = 0; ci < model.critics.size(); ++ci) {
                TorchCritic& critic = model.critics[ci];
                torch::Tensor fake_o, real_o;
                if (settings.anisotropic) {
                    fake_o = fake[ci];
                    real_o = real[ci];
                } else {
                    fake_o = torch::cat({fake[0], fake[1], fake[2]}, 0);
                    real_o = torch::cat({real[0], real[1], real[2]}, 0);
                }
                torch::Tensor gp =
                    gradient_penalty(critic, fake_o, real_o, settings.gp_lambda, rng);
                torch::Tensor loss =
                    critic_loss(critic.forward(fake_o), critic.forward(real_o), gp);
                model.critic_opts[ci]->zero_grad();
                loss.backward();
                model.critic_opts[ci]->step();
                loss_sum += loss.item<double>();
            }
            last_critic = loss_sum / double(model.critics.size());
            check_finite(last_critic, "critic loss", done + 1);
            last_cropped = cropped;
        } else {
            torch::Tensor sr = model.gen.forward(input);
            torch::Tensor cropped = crop_faces(sr, settings.crop_layers);
            auto fake = slice_cropped(cropped);
            torch::Tensor scores;
            if (settings.anisotropic) {
                std::vector<torch::Tensor> parts;
                for (size_t ci = 0; ci < model.critics.size(); ++ci)
                    parts.push_back(model.critics[ci].forward(fake[ci]));
                scores = torch::cat(parts, 0);
            } else {
                scores = model.critics[0].forward(torch::cat({fake[0], fake[1], fake[2]}, 0));
            }
            torch::Tensor vw = voxelwise_loss(sr, cubes, dspec);
            last_vw = vw.item<double>();
            check_finite(last_vw, "voxel-wise loss", done + 1);
            torch::Tensor loss =
                generator_loss(scores, vw, settings.vw_threshold, settings.vw_coefficient);
            model.gen_opt->zero_grad();
            loss.backward();
            model.gen_opt->step();
            last_gen = loss.item<double>();
            check_finite(last_gen, "generator loss", done + 1);
            last_cropped = cropped.detach();
        }

        ++done;

        if (done % settings.monitor_interval == 0 || done == settings.iterations) {
            cp.history.push_back({done, "critic_loss", last_critic});
            cp.history.push_back({done, "generator_loss", last_gen});
            cp.history.push_back({done, "voxelwise_loss", last_vw});
            PhaseVolume sample =
                decode_first_item(last_cropped, cp.hr_palette, cp.lr_pitch_nm / sf);
            for (int p = 0; p < sample.phase_count(); ++p)
                cp.history.push_back(
                    {done, "vf_" + sample.palette[size_t(p)], volume_fraction(sample, p)});
            for (int a = 0; a < sample.phase_count(); ++a)
                for (int b = a + 1; b < sample.phase_count(); ++b)
                    cp.history.push_back(
                        {done, "sa_" + sample.palette[size_t(a)] + "_" + sample.palette[size_t(b)],
                         interphase_surface_area(sample, a, b)});
            if (progress)
                progress({done, settings.iterations, last_critic, last_gen, last_vw});
        }

        if (done % settings.checkpoint_interval == 0 || done == settings.iterations)
            write_snapshot(done, true);
    }

    return {latest, cp.history, done};
}

} // namespace voxfuse
