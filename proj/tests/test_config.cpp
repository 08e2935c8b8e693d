// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include <cstdlib>

#include "avinpaint/config.hpp"
#include "doctest.h"

using namespace avi;

TEST_CASE("defaults carry the published hyperparameters") {
    const RunConfig cfg;
    CHECK(cfg.vinet_train.weights.l1 == 1.0);
    CHECK(cfg.vinet_train.weights.adv == 0.01);
    CHECK(cfg.vinet_train.weights.att_av == 2.0);
    CHECK(cfg.vinet_train.weights.cls_av == 1.0);
    CHECK(cfg.avnet_net.tau == 0.07);
    CHECK(cfg.avnet_net.k_classes == 10);
}

TEST_CASE("config json round trip preserves overrides") {
    nlohmann::json j;
    j["seed"] = 42;
    j["avnet"] = {{"c", 32}, {"tau", 0.05}, {"k_clusters", 4}};
    j["vinet"] = {{"weights", {{"att_av", 0.0}, {"cls_av", 0.0}}}, {"steps", 7}};
    const RunConfig cfg = RunConfig::from_json(j);
    CHECK(cfg.seed == 42);
    CHECK(cfg.avnet_net.c == 32);
    CHECK(cfg.avnet_net.tau == 0.05);
    CHECK(cfg.avnet_net.k_classes == 4);
    CHECK(cfg.vinet_train.weights.att_av == 0.0);
    CHECK(cfg.vinet_train.weights.l1 == 1.0);  // untouched default
    CHECK(cfg.vinet_train.steps == 7);
    CHECK(cfg.avnet_train.seed == 42);

    const RunConfig again = RunConfig::from_json(cfg.to_json());
    CHECK(again.to_json() == cfg.to_json());
}

TEST_CASE("schema violations are rejected before touching disk") {
    nlohmann::json unknown;
    unknown["sede"] = 3;
    CHECK_THROWS_AS(RunConfig::from_json(unknown), ConfigError);

    nlohmann::json nested;
    nested["avnet"] = {{"taus", 0.07}};
    CHECK_THROWS_AS(RunConfig::from_json(nested), ConfigError);

    nlohmann::json bad_type;
    bad_type["seed"] = "not-a-number";
    CHECK_THROWS_AS(RunConfig::from_json(bad_type), ConfigError);

    nlohmann::json bad_weight;
    bad_weight["vinet"] = {{"weights", {{"adv", -1.0}}}};
    CHECK_THROWS_AS(RunConfig::from_json(bad_weight), ConfigError);

    nlohmann::json bad_tau;
    bad_tau["avnet"] = {{"tau", 1.5}};
    CHECK_THROWS_AS(RunConfig::from_json(bad_tau), ConfigError);

    nlohmann::json bad_regime;
    bad_regime["eval"] = {{"mask_types", {"imask", "blob"}}};
    CHECK_THROWS_AS(RunConfig::from_json(bad_regime), ConfigError);
}

TEST_CASE("environment variable overrides the dataset root") {
    setenv("AVINPAINT_DATA_ROOT", "/tmp/override_root", 1);
    nlohmann::json j;
    j["dataset"] = {{"root", "ignored"}};
    const RunConfig cfg = RunConfig::from_json(j);
    CHECK(cfg.dataset_root == "/tmp/override_root");
    unsetenv("AVINPAINT_DATA_ROOT");
}
