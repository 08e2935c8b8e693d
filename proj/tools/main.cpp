// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avinpaint/commands.hpp"

namespace {

int fail(const char* category, const std::string& msg) {
    std::fprintf(stderr, "error[%s]: %s\n", category, msg.c_str());
    if (std::string(category) == "config") return 2;
    if (std::string(category) == "invalid-input") return 3;
    if (std::string(category) == "io") return 4;
    if (std::string(category) == "training") return 5;
    if (std::string(category) == "generation") return 6;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"avinpaint: audio-guided video inpainting pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string avnet_ckpt;
    std::string warm_start;
    std::string mask_kind;
    uint64_t seed = 0;
    bool seed_set = false;
    std::vector<std::string> clip_ids;

    app.add_option("--config", config_path, "Path to the JSON run configuration");
    app.add_option("--seed", seed, "Override the config seed")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_option("--out", out_dir, "Override the output directory");
    app.add_option("--avnet-ckpt", avnet_ckpt, "Frozen guider checkpoint path");
    app.add_option("--warm-start", warm_start, "Generator checkpoint to fine-tune from");
    app.add_option("--mask", mask_kind, "Mask regime override (imask|smask)")
        ->check(CLI::IsMember({"imask", "smask"}));

    auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark dataset");
    auto* masks_cmd = app.add_subcommand("masks", "Write imask/smask files for a split");
    auto* train_avnet = app.add_subcommand("train-avnet", "Train the audio-visual guider");
    auto* train_vinet = app.add_subcommand("train-vinet", "Train the inpainting network");
    auto* inpaint = app.add_subcommand("inpaint", "Inpaint clips with a trained model");
    inpaint->add_option("clips", clip_ids, "Clip ids (defaults to the eval split)");
    auto* eval = app.add_subcommand("eval", "Evaluate configured variants per mask type");

    CLI11_PARSE(app, argc, argv);

    try {
        avi::RunConfig cfg =
            config_path.empty() ? avi::RunConfig() : avi::RunConfig::load(config_path);
        if (seed_set) {
            cfg.seed = seed;
            cfg.avnet_train.seed = seed;
            cfg.vinet_train.seed = seed;
            cfg.dataset.seed = seed;
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (!avnet_ckpt.empty()) cfg.avnet_ckpt = avnet_ckpt;
        if (!warm_start.empty()) cfg.vinet_train.warm_start = warm_start;
        if (!mask_kind.empty()) cfg.vinet_train.mask_regime = mask_kind;

        if (synth->parsed()) {
            avi::commands::cmd_synth(cfg);
            std::printf("dataset written to %s\n", cfg.dataset_root.c_str());
        } else if (masks_cmd->parsed()) {
            avi::commands::cmd_masks(cfg);
            std::printf("masks written under %s/masks\n", cfg.out_dir.c_str());
        } else if (train_avnet->parsed()) {
            avi::commands::cmd_train_avnet(cfg);
            std::printf("guider checkpoint written under %s\n", cfg.out_dir.c_str());
        } else if (train_vinet->parsed()) {
            avi::commands::cmd_train_vinet(cfg);
            std::printf("inpainting checkpoint written under %s\n", cfg.out_dir.c_str());
        } else if (inpaint->parsed()) {
            avi::commands::cmd_inpaint(cfg, clip_ids);
            std::printf("inpainted frames written under %s/inpaint\n", cfg.out_dir.c_str());
        } else if (eval->parsed()) {
            const auto report = avi::commands::cmd_eval(cfg);
            std::printf("%s", avi::metrics::format_report_table(report).c_str());
            std::printf("report written under %s\n", cfg.out_dir.c_str());
        }
        return 0;
    } catch (const avi::ConfigError& e) {
        return fail("config", e.what());
    } catch (const avi::InvalidInputError& e) {
        return fail("invalid-input", e.what());
    } catch (const avi::IoError& e) {
        return fail("io", e.what());
    } catch (const avi::TrainingError& e) {
        return fail("training", e.what());
    } catch (const avi::GenerationError& e) {
        return fail("generation", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
}
