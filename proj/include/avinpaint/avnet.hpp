// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0
//
// Audio-visual correspondence network: dual conv encoders, an attention head
// over per-location cosine similarity, a correspondence objective on the
// pooled attention map, K-means pseudo-labeling over attention-gated object
// descriptors, and a pair of linear pseudo-class classifiers.

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "avinpaint/clustering.hpp"
#include "avinpaint/dataset.hpp"
#include "avinpaint/masks.hpp"
#include "avinpaint/params.hpp"

namespace avi::avnet {

struct AvNetConfig {
    int c = 64;           // embedding channels
    int k_classes = 10;   // pseudo-class count
    double tau = 0.07;    // attention threshold for object masks
    double s_init = 10.0; // cosine -> logit scale
    double b_init = -5.0; // cosine -> logit bias
    // Hidden channels of the three leading stride-2 blocks; the fourth block
    // outputs c. Visual: 224 -> 14 spatial; audio: 201x80 -> GAP.
    std::vector<int> vis_hidden = {32, 64, 64};
    std::vector<int> aud_hidden = {32, 64, 64};
};

class AvNet {
  public:
    AvNetConfig cfg;
    ParamSet params;
    bool frozen = false;

    static AvNet init(const AvNetConfig& cfg, uint64_t seed);
    static AvNet from_checkpoint(const std::string& path, bool frozen);
    void save(const std::string& path) const;

    // Graph builders; pass one ParamLeaves per graph (trainable only when the
    // net is not frozen).
    ParamLeaves leaves() const { return ParamLeaves(params, !frozen); }
    ad::NodePtr visual_map_graph(const ParamLeaves& L, ad::NodePtr frame) const;  // (c,h,w)
    ad::NodePtr audio_emb_graph(const ParamLeaves& L, ad::NodePtr mel) const;     // (c)
    ad::NodePtr attention_graph(const ParamLeaves& L, ad::NodePtr a_emb, ad::NodePtr v_map) const;
    ad::NodePtr audio_logits_graph(const ParamLeaves& L, ad::NodePtr a_emb) const;
    ad::NodePtr visual_logits_graph(const ParamLeaves& L, ad::NodePtr v_map) const;

    // Value-only inference.
    Tensor visual_map(const Tensor& frame) const;
    Tensor audio_embedding(const Tensor& mel) const;
    Tensor attention(const Tensor& a_emb, const Tensor& v_map) const;
    Tensor audio_logits(const Tensor& a_emb) const;
    Tensor visual_logits(const Tensor& v_map) const;
};

struct AttentionResult {
    Tensor map;                    // (h,w), entries in (0,1)
    bool zero_norm_flagged = false;
};

// sigmoid(s * cos + b) over L2-normalized features; zero-norm vectors give a
// neutral cosine of 0 and set the flag.
AttentionResult attention_map(const Tensor& a_emb, const Tensor& v_map, double s, double b);

// BCE between y_corr and the global max of the attention map.
double correspondence_loss(const Tensor& att, int y_corr);

struct ObjectRepr {
    Tensor descriptor;             // (c)
    masks::BinaryMask mask;        // feature-resolution m_i
    bool fallback_used = false;    // all-below-threshold input
};

// m_i = 1[att > tau]; descriptor = GAP(m_i ⊙ v_map) dividing by h*w. An
// empty mask falls back to the unmasked GAP.
ObjectRepr extract_object_repr(const Tensor& att, const Tensor& v_map, double tau = 0.07);

struct PseudoLabelTable {
    std::map<std::string, int> labels;
    Tensor centroids;
    std::vector<double> objective;
};

PseudoLabelTable cluster_pseudo_labels(
    const std::vector<std::pair<std::string, Tensor>>& descriptors, int k, uint64_t seed);

void save_pseudo_labels(const std::string& path, const PseudoLabelTable& table);
PseudoLabelTable load_pseudo_labels(const std::string& path);

// CE(y_p, audio logits) + CE(y_p, visual logits).
double classification_loss(const Tensor& audio_logits, const Tensor& visual_logits, int label);

struct AvNetTrainConfig {
    double lr = 1e-3;
    int epochs = 8;
    int warmup_epochs = 1;      // correspondence-only epochs before clustering
    int batch = 16;
    int lr_decay_epoch = 0;     // 0 = no decay; else lr *= 0.1 from this epoch
    uint64_t seed = 0;
};

struct CurvePoint {
    int step = 0;
    std::string kind;  // "corr" or "cls"
    double loss = 0.0;
};

struct AvNetTrainResult {
    AvNet net;
    std::vector<CurvePoint> curve;
    PseudoLabelTable labels;
};

// Alternating training: warmup epochs optimize the correspondence objective
// only; afterwards pseudo-labels are recomputed each epoch and batches
// alternate between the two objectives.
AvNetTrainResult train_avnet(const ClipStore& data, const AvNetConfig& cfg,
                             const AvNetTrainConfig& tcfg);

}  // namespace avi::avnet
