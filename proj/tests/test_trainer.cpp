#include <doctest.h>

#include <filesystem>
#include <vector>

#include "error.hpp"
#include "oracles.hpp"
#include "rng.hpp"
#include "trainer.hpp"

using namespace voxfuse;
namespace fs = std::filesystem;

namespace {

std::string temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("voxfuse_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

PhaseImage random_slice(int64_t side, int phases, uint64_t seed) {
    Rng rng(seed);
    std::vector<uint8_t> labels(size_t(side * side));
    for (auto& l : labels) l = uint8_t(rng.below(uint64_t(phases)));
    std::vector<std::string> palette;
    for (int p = 0; p < phases; ++p) palette.push_back("phase" + std::to_string(p));
    return PhaseImage::create({side, side}, 10.0, palette, labels);
}

// Smallest geometry that still exercises every code path: scale factor 4,
// 24-voxel training cubes cropped to 16, 6-voxel low-res inputs.
TrainSettings smoke_settings() {
    TrainSettings s;
    s.input_side = 16;
    s.train_output_side = 24;
    s.crop_layers = 4;
    s.batch_size = 2;
    s.noise_channels = 1;
    s.iterations = 12;
    s.monitor_interval = 4;
    s.checkpoint_interval = 6;
    s.merge_map = {0, 1, 0};
    s.gen_widths = {4, 3};
    s.critic_widths = {4, 8};
    return s;
}

struct SmokeData {
    PhaseVolume lr;
    HRSliceBank bank;
};

SmokeData smoke_data() {
    return {oracle::random_volume({16, 16, 16}, 2, 101),
            HRSliceBank::isotropic({random_slice(24, 3, 7), random_slice(24, 3, 8)})};
}

} // namespace

TEST_CASE("initialize_model assembles an untrained checkpoint") {
    const SmokeData data = smoke_data();
    const Checkpoint cp = initialize_model(data.lr, data.bank, smoke_settings(), 55);
    CHECK(cp.iteration == 0);
    CHECK(cp.gen_opt.step == 0);
    REQUIRE(cp.critics.size() == 1);
    CHECK(cp.critics[0].input_side == 16);
    CHECK(cp.gen_params.size() == 2 * cp.gen.layers.size());
    CHECK(cp.lr_palette == data.lr.palette);
    CHECK(cp.hr_palette == data.bank.palette());
    CHECK(cp.lr_pitch_nm == data.lr.voxel_pitch_nm);
    CHECK(!cp.rng_state.empty());
    // Moments start zeroed.
    for (const auto& b : cp.gen_opt.first_moment)
        for (float x : b.data) CHECK(x == 0.0f);
}

TEST_CASE("training honours the critic/generator update ratio") {
    const SmokeData data = smoke_data();
    const std::string dir = temp_dir("ratio");
    const TrainResult res = train_model(data.lr, data.bank, smoke_settings(), 55, dir);
    CHECK(res.iterations == 12);

    const Checkpoint cp = load_checkpoint(res.checkpoint_path);
    CHECK(cp.iteration == 12);
    // 12 updates at a 5:1 critic:generator cadence = 2 cycles of 6.
    CHECK(cp.gen_opt.step == 2);
    CHECK(cp.critic_opts[0].step == 10);

    CHECK(fs::exists(dir + "/checkpoint_6.vfck"));
    CHECK(fs::exists(dir + "/checkpoint_12.vfck"));
    CHECK(fs::exists(dir + "/history.csv"));
    CHECK(!res.history.empty());
    for (const auto& row : res.history) {
        CHECK(row.iteration >= 1);
        CHECK(row.iteration <= 12);
    }
    fs::remove_all(dir);
}

TEST_CASE("progress callbacks fire on the monitor cadence") {
    const SmokeData data = smoke_data();
    const std::string dir = temp_dir("progress");
    TrainSettings s = smoke_settings();
    s.iterations = 6;
    s.monitor_interval = 2;

    std::vector<int64_t> seen;
    train_model(data.lr, data.bank, s, 55, dir, {}, [&](const TrainProgress& p) {
        seen.push_back(p.iteration);
        CHECK(p.total == 6);
    });
    REQUIRE(!seen.empty());
    for (size_t i = 0; i + 1 < seen.size(); ++i) CHECK(seen[i] < seen[i + 1]);
    CHECK(seen.back() == 6);
    fs::remove_all(dir);
}

TEST_CASE("resumed training matches an uninterrupted run exactly") {
    const SmokeData data = smoke_data();
    const std::string dir_a = temp_dir("straight");
    const std::string dir_b = temp_dir("resumed");

    TrainSettings s = smoke_settings();
    const TrainResult full = train_model(data.lr, data.bank, s, 99, dir_a);

    s.iterations = 6;
    train_model(data.lr, data.bank, s, 99, dir_b);
    s.iterations = 12;
    const TrainResult cont =
        train_model(data.lr, data.bank, s, 99, dir_b, dir_b + "/latest.vfck");

    const Checkpoint a = load_checkpoint(full.checkpoint_path);
    const Checkpoint b = load_checkpoint(cont.checkpoint_path);
    CHECK(a.iteration == b.iteration);
    CHECK(a.rng_state == b.rng_state);
    REQUIRE(a.gen_params.size() == b.gen_params.size());
    for (size_t i = 0; i < a.gen_params.size(); ++i)
        CHECK(a.gen_params[i].data == b.gen_params[i].data);
    for (size_t c = 0; c < a.critic_params.size(); ++c)
        for (size_t i = 0; i < a.critic_params[c].size(); ++i)
            CHECK(a.critic_params[c][i].data == b.critic_params[c][i].data);
    CHECK(a.gen_opt.step == b.gen_opt.step);

    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("resume rejects a checkpoint for a different architecture") {
    const SmokeData data = smoke_data();
    const std::string dir = temp_dir("wrongarch");
    TrainSettings s = smoke_settings();
    s.iterations = 6;
    train_model(data.lr, data.bank, s, 1, dir);

    s.gen_widths = {5, 3};
    s.iterations = 12;
    CHECK_THROWS_WITH_AS(
        (void)train_model(data.lr, data.bank, s, 1, dir, dir + "/latest.vfck"),
        doctest::Contains("does not match"), Error);
    fs::remove_all(dir);
}

TEST_CASE("training runs without noise channels") {
    const SmokeData data = smoke_data();
    const std::string dir = temp_dir("nonoise");
    TrainSettings s = smoke_settings();
    s.noise_channels = 0;
    s.iterations = 6;
    const TrainResult res = train_model(data.lr, data.bank, s, 4, dir);
    CHECK(res.iterations == 6);
    CHECK(load_checkpoint(res.checkpoint_path).gen.noise_channels == 0);
    fs::remove_all(dir);
}

TEST_CASE("anisotropic training drives three critics") {
    const PhaseVolume lr = oracle::random_volume({16, 16, 16}, 2, 55);
    const HRSliceBank bank = HRSliceBank::anisotropic(
        {random_slice(24, 3, 1)}, {random_slice(24, 3, 2)}, {random_slice(24, 3, 3)});
    const std::string dir = temp_dir("aniso");
    TrainSettings s = smoke_settings();
    s.anisotropic = true;
    s.iterations = 6;
    const TrainResult res = train_model(lr, bank, s, 5, dir);
    const Checkpoint cp = load_checkpoint(res.checkpoint_path);
    REQUIRE(cp.critics.size() == 3);
    CHECK(cp.critic_opts[0].step == 5);
    CHECK(cp.critic_opts[1].step == 5);
    CHECK(cp.critic_opts[2].step == 5);
    CHECK(cp.gen_opt.step == 1);
    fs::remove_all(dir);
}

TEST_CASE("mismatched data and settings are rejected up front") {
    const SmokeData data = smoke_data();
    TrainSettings s = smoke_settings();

    SUBCASE("missing merge map") {
        s.merge_map.clear();
        CHECK_THROWS_WITH_AS((void)initialize_model(data.lr, data.bank, s, 0),
                             doctest::Contains("merge map"), Error);
    }
    SUBCASE("low-res volume too small") {
        const PhaseVolume tiny = oracle::random_volume({4, 4, 4}, 2, 1);
        CHECK_THROWS_WITH_AS((void)initialize_model(tiny, data.bank, s, 0),
                             doctest::Contains("too small"), Error);
    }
    SUBCASE("pool kind mismatch") {
        s.anisotropic = true;
        CHECK_THROWS_WITH_AS((void)initialize_model(data.lr, data.bank, s, 0),
                             doctest::Contains("per-orientation"), Error);
    }
    SUBCASE("slices smaller than the training patches") {
        const HRSliceBank small = HRSliceBank::isotropic({random_slice(12, 3, 2)});
        CHECK_THROWS_WITH_AS((void)initialize_model(data.lr, small, s, 0),
                             doctest::Contains("smaller than"), Error);
    }
}
