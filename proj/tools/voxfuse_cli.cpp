// voxfuse command line: drives the experiment pipeline through the shared
// library's C interface. Exit codes: 0 success, 2 configuration problem,
// 3..7 failure inside prepare/train/generate/evaluate/report.
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <voxfuse/voxfuse.h>

namespace {

void print_progress(int64_t iteration, int64_t total, double critic_loss, double generator_loss,
                    double voxelwise_loss, void* /*user*/) {
    std::printf("iter %" PRId64 "/%" PRId64 "  critic %+.4f  gen %+.4f  voxelwise %.6f\n",
                iteration, total, critic_loss, generator_loss, voxelwise_loss);
    std::fflush(stdout);
}

struct StageArgs {
    std::string config;
    std::string out;
    uint64_t seed = 0;
    bool has_seed = false;
};

void add_common(CLI::App* cmd, StageArgs& args) {
    cmd->add_option("--config", args.config, "experiment config file (INI)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out, "override the output directory");
    cmd->add_option("--seed", args.seed, "override the stage seed")
        ->each([&args](const std::string&) { args.has_seed = true; });
}

int fail_config() {
    std::fprintf(stderr, "voxfuse: %s\n", vf_last_error());
    return 2;
}

int run_stage(const StageArgs& args, const std::string& stage) {
    vf_experiment* exp = nullptr;
    if (vf_experiment_open(args.config.c_str(), &exp) != VF_OK) return fail_config();
    if (!args.out.empty() && vf_experiment_set_output_dir(exp, args.out.c_str()) != VF_OK) {
        vf_experiment_free(exp);
        return fail_config();
    }
    if (args.has_seed && vf_experiment_set_seed(exp, args.seed) != VF_OK) {
        vf_experiment_free(exp);
        return fail_config();
    }

    vf_status status = VF_OK;
    if (stage == "prepare")
        status = vf_run_prepare(exp);
    else if (stage == "train")
        status = vf_run_train(exp, print_progress, nullptr);
    else if (stage == "generate")
        status = vf_run_generate(exp);
    else if (stage == "evaluate")
        status = vf_run_evaluate(exp);
    else if (stage == "report")
        status = vf_run_report(exp);
    else
        status = vf_run_all(exp, print_progress, nullptr);

    int exit_code = 0;
    if (status != VF_OK) {
        std::fprintf(stderr, "voxfuse: %s\n", vf_last_error());
        const int32_t stage_tag = vf_last_error_stage();
        exit_code = stage_tag != 0 ? int(stage_tag) : 2;
    }
    vf_experiment_free(exp);
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxfuse — super-resolution of segmented volumes and mesostructural metrics"};
    app.set_version_flag("--version", std::string(vf_version()));
    app.require_subcommand(1);

    const struct {
        const char* name;
        const char* help;
    } stages[] = {
        {"prepare", "synthesize or ingest the low-res/high-res data pair"},
        {"train", "adversarial training on the prepared data"},
        {"generate", "super-resolve the low-res volume with the trained model"},
        {"evaluate", "mesostructural metrics for generated and reference data"},
        {"report", "comparison tables and figures from the evaluation"},
        {"run", "all stages in order"},
    };

    StageArgs args;
    for (const auto& stage : stages) add_common(app.add_subcommand(stage.name, stage.help), args);

    CLI11_PARSE(app, argc, argv);
    return run_stage(args, app.get_subcommands().front()->get_name());
}
