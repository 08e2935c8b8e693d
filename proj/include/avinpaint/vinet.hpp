// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0
//
// Audio-conditioned inpainting network: per-frame encoder-decoder with the
// audio embedding broadcast-concatenated at the bottleneck, plus a small
// spatio-temporal patch discriminator with hinge objectives. Temporal
// modeling lives only in the discriminator.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "avinpaint/avnet.hpp"
#include "avinpaint/guidance.hpp"
#include "avinpaint/masks.hpp"
#include "avinpaint/params.hpp"

namespace avi::vinet {

struct ViNetConfig {
    int audio_c = 64;  // must match the guider's embedding width
    std::vector<int> enc_channels = {64, 128, 256};
    int dec_mid = 32;  // channels of the last decoder stage before the output conv
    std::vector<int> disc_channels = {16, 32, 64};
};

class ViNet {
  public:
    ViNetConfig cfg;
    ParamSet params;

    static ViNet init(const ViNetConfig& cfg, uint64_t seed);
    static ViNet from_checkpoint(const std::string& path);
    void save(const std::string& path) const;

    ParamLeaves leaves(bool trainable = true) const { return ParamLeaves(params, trainable); }

    // corrupted (4,224,224) = RGB+mask channel; a_emb (audio_c). Output
    // (3,224,224) in [0,1].
    ad::NodePtr inpaint_graph(const ParamLeaves& L, ad::NodePtr corrupted, ad::NodePtr a_emb) const;
    Tensor inpaint(const Tensor& corrupted, const Tensor& a_emb) const;
};

class Discriminator {
  public:
    ViNetConfig cfg;
    ParamSet params;

    static Discriminator init(const ViNetConfig& cfg, uint64_t seed);
    static Discriminator from_checkpoint(const std::string& path);
    void save(const std::string& path) const;

    ParamLeaves leaves(bool trainable = true) const { return ParamLeaves(params, trainable); }

    // stack (3,T,H,W) -> patch score grid (1,t',h',w').
    ad::NodePtr score_graph(const ParamLeaves& L, ad::NodePtr stack) const;
};

// mask ⊙ inpainted + (1-mask) ⊙ ground truth.
Tensor composite(const Tensor& inpainted, const Tensor& ground_truth,
                 const masks::BinaryMask& mask);

// Mean absolute error over all pixels and channels.
double reconstruction_l1(const Tensor& inpainted, const Tensor& ground_truth);

// Hinge losses: disc = E[relu(1-D(real))] + E[relu(1+D(fake))], gen =
// -E[D(fake)]. Requires T >= 2 frames.
std::pair<double, double> adversarial_losses(const std::vector<Tensor>& real_frames,
                                             const std::vector<Tensor>& fake_frames,
                                             const Discriminator& disc);

struct ViNetTrainConfig {
    guidance::LossWeights weights;
    double lr = 1e-4;
    double disc_lr = 1e-4;
    int steps = 2000;
    double lr_decay_frac = 0.6;  // lr *= 0.1 after this fraction of steps
    int t_window = 8;
    std::string mask_regime = "smask";  // imask | smask | mixed
    double imask_ratio = 0.2;
    uint64_t seed = 0;
    std::string warm_start;  // optional generator checkpoint to fine-tune
    std::string log_csv;     // optional loss log path
    int ckpt_every = 0;      // periodic checkpointing; 0 = final only
    std::string ckpt_path;
    std::string disc_ckpt_path;
};

struct ViNetTrainResult {
    ViNet net;
    Discriminator disc;
    std::vector<std::pair<int, guidance::LossBundle>> log;
};

// Per step: one clip window of t_window frames, a single mask per clip step,
// per-frame inpainting, the full composite objective through the frozen
// guider, then alternating generator/discriminator updates.
ViNetTrainResult train_vinet(const ClipStore& data, const avnet::AvNet& guider,
                             const ViNetConfig& cfg, const ViNetTrainConfig& tcfg);

}  // namespace avi::vinet
