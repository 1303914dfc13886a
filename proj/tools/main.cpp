#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "lqp/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Online received-power prediction from synthetic camera imagery"};
    app.require_subcommand(1);

    lqp::RunManifest manifest;
    std::string seeds_text, methods_text, tq_text;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", manifest.out_dir, "output directory")->required();
        cmd->add_flag("--overwrite", manifest.overwrite, "replace existing outputs");
    };
    const auto add_scene = [&](CLI::App* cmd) {
        cmd->add_option("--scene", manifest.scene_path, "scene config file")->required();
    };
    const auto add_engine = [&](CLI::App* cmd) {
        cmd->add_option("--engine", manifest.engine_path, "engine profile file");
    };
    const auto add_seeds = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seeds_text, "seed or comma-separated seed list");
        cmd->add_option("--seeds", seeds_text, "alias for --seed");
    };

    CLI::App* simulate = app.add_subcommand("simulate", "write the power trace (and frames) of a scene");
    add_scene(simulate);
    add_seeds(simulate);
    add_common(simulate);
    simulate->add_flag("--frames", manifest.dump_frames, "also dump raw frames");

    CLI::App* evaluate = app.add_subcommand("evaluate", "run the method/seed grid and score it");
    add_scene(evaluate);
    add_engine(evaluate);
    add_seeds(evaluate);
    add_common(evaluate);
    evaluate->add_option("--method,--methods", methods_text, "comma-separated prediction methods");
    evaluate->add_option("--tq", tq_text, "training queue span in seconds, or inf");
    evaluate->add_option("--jobs", manifest.jobs, "parallel cells");

    CLI::App* ablate = app.add_subcommand("ablate", "sweep the training queue size");
    add_scene(ablate);
    add_engine(ablate);
    add_seeds(ablate);
    add_common(ablate);
    ablate->add_option("--tq", tq_text, "comma-separated queue spans (seconds or inf)")->required();
    ablate->add_option("--method", methods_text, "prediction method");
    ablate->add_option("--jobs", manifest.jobs, "parallel cells");

    CLI::App* timing = app.add_subcommand("timing", "per-step wall-clock budget of one tick");
    add_scene(timing);
    add_engine(timing);
    add_seeds(timing);
    add_common(timing);
    timing->add_option("--ticks", manifest.ticks, "ticks to measure");
    timing->add_option("--method", methods_text, "prediction method");

    CLI::App* replay = app.add_subcommand("replay", "re-score a recorded prediction log");
    replay->add_option("--log", manifest.log_path, "predictions.csv to score")->required();
    add_common(replay);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!seeds_text.empty()) manifest.seeds = lqp::parse_seed_list(seeds_text);
        if (!methods_text.empty()) manifest.methods = lqp::parse_name_list(methods_text);
        if (!tq_text.empty()) manifest.tq_values = lqp::parse_name_list(tq_text);
    } catch (const std::exception& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return lqp::kExitBadInput;
    }

    if (simulate->parsed()) {
        manifest.command = "simulate";
        return lqp::cmd_simulate(manifest);
    }
    if (evaluate->parsed()) {
        manifest.command = "evaluate";
        if (methods_text.empty()) manifest.methods = {"rp-im", "im", "rp", "native"};
        return lqp::cmd_evaluate(manifest);
    }
    if (ablate->parsed()) {
        manifest.command = "ablate";
        return lqp::cmd_ablate(manifest);
    }
    if (timing->parsed()) {
        manifest.command = "timing";
        return lqp::cmd_timing(manifest);
    }
    manifest.command = "replay";
    return lqp::cmd_replay(manifest);
}
