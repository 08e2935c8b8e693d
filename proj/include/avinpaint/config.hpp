// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "avinpaint/avnet.hpp"
#include "avinpaint/synthbench.hpp"
#include "avinpaint/vinet.hpp"
#include "json.hpp"

namespace avi {

struct EvalVariant {
    std::string name;
    std::string checkpoint;
};

struct EvalConfig {
    std::string split = "test";
    std::string feature_extractor = "avnet";  // avnet | random_projection
    int extractor_dim = 64;
    uint64_t extractor_seed = 7;
    std::vector<EvalVariant> variants;
    std::vector<std::string> mask_types = {"imask", "smask"};
    double imask_ratio = 0.2;
};

struct MasksConfig {
    std::string split = "test";
    std::string smask_source = "gt";  // gt | avnet
    std::vector<double> imask_ratios = {0.2};
};

// One structured configuration drives every command. Defaults follow the
// published hyperparameters (loss weights 1/0.01/2/1, tau 0.07, K=10); the
// dataset root can be overridden by the AVINPAINT_DATA_ROOT environment
// variable.
struct RunConfig {
    uint64_t seed = 0;

    synth::DatasetOptions dataset;
    std::string dataset_root = "data/synth";

    avnet::AvNetConfig avnet_net;
    avnet::AvNetTrainConfig avnet_train;

    vinet::ViNetConfig vinet_net;
    vinet::ViNetTrainConfig vinet_train;

    EvalConfig eval;
    MasksConfig masks;

    std::string out_dir = "out";
    std::string avnet_ckpt;  // guider checkpoint consumed by train-vinet/inpaint/eval
    std::string vinet_ckpt;  // generator checkpoint consumed by inpaint

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;

    // Fully resolved echo written beside every artifact.
    void write_echo(const std::string& dir) const;
};

}  // namespace avi
