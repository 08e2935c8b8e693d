// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0
//
// Operational surface shared by the CLI and the test suites. Each command is
// idempotent for a fixed config+seed and stages multi-file outputs so partial
// results are never left behind.

#pragma once

#include <string>
#include <vector>

#include "avinpaint/config.hpp"
#include "avinpaint/metrics.hpp"

namespace avi::commands {

// Generates the synthetic benchmark at cfg.dataset_root.
void cmd_synth(const RunConfig& cfg);

// Writes imask/smask PNGs for a split under <out>/masks/<clip>/.
void cmd_masks(const RunConfig& cfg);

// Trains the guider; writes checkpoint, pseudo-label table and curve CSV.
void cmd_train_avnet(const RunConfig& cfg);

// Trains the inpainting network against a frozen guider checkpoint.
void cmd_train_vinet(const RunConfig& cfg);

// Runs inference over the listed clips (all eval-split clips when empty);
// writes inpainted and composited frame sequences.
void cmd_inpaint(const RunConfig& cfg, const std::vector<std::string>& clip_ids);

// Evaluates every configured variant per mask type and writes the report.
metrics::MetricReport cmd_eval(const RunConfig& cfg);

// Deterministic per-clip evaluation mask (imasks are seeded by clip id;
// smasks grow from the clip's first ground-truth object mask).
masks::BinaryMask eval_mask_for_clip(const ClipStore& data, const std::string& clip_id,
                                     const std::string& mask_type, double imask_ratio,
                                     uint64_t seed);

struct ClipEval {
    double psnr = 0.0;
    double psnr_hole = 0.0;
    double ssim = 0.0;
    std::vector<Tensor> gt_frames;
    std::vector<Tensor> composited;
};

// Inpaints one clip with a fixed mask and scores it against ground truth.
ClipEval evaluate_clip(const ClipStore& data, const avnet::AvNet& guider,
                       const vinet::ViNet& net, const std::string& clip_id,
                       const masks::BinaryMask& mask, bool keep_frames);

}  // namespace avi::commands
