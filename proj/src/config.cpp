// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;

namespace avi {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k))
            throw ConfigError("config: unknown key '" + k + "' in " + where);
}

template <class T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config: bad type for '" + key + "'");
    }
}

void require_positive(double v, const std::string& name) {
    if (!(v > 0.0)) throw ConfigError("config: " + name + " must be positive");
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    check_keys(j, {"seed", "dataset", "avnet", "vinet", "eval", "masks", "out_dir", "avnet_ckpt",
                   "vinet_ckpt"},
               "top level");
    c.seed = get_or<uint64_t>(j, "seed", 0);
    c.out_dir = get_or<std::string>(j, "out_dir", c.out_dir);
    c.avnet_ckpt = get_or<std::string>(j, "avnet_ckpt", "");
    c.vinet_ckpt = get_or<std::string>(j, "vinet_ckpt", "");

    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        check_keys(d, {"root", "n_classes", "clips_per_class", "split_fractions", "duration_s",
                       "snr_db"},
                   "dataset");
        c.dataset_root = get_or<std::string>(d, "root", c.dataset_root);
        c.dataset.n_classes = get_or<int>(d, "n_classes", c.dataset.n_classes);
        c.dataset.clips_per_class = get_or<int>(d, "clips_per_class", c.dataset.clips_per_class);
        c.dataset.split_fractions =
            get_or<std::array<double, 3>>(d, "split_fractions", c.dataset.split_fractions);
        c.dataset.duration_s = get_or<double>(d, "duration_s", c.dataset.duration_s);
        c.dataset.snr_db = get_or<double>(d, "snr_db", c.dataset.snr_db);
        require_positive(c.dataset.duration_s, "dataset.duration_s");
    }
    if (const char* env_root = std::getenv("AVINPAINT_DATA_ROOT"))
        c.dataset_root = env_root;

    if (j.contains("avnet")) {
        const auto& a = j.at("avnet");
        check_keys(a, {"c", "k_clusters", "tau", "s_init", "b_init", "vis_hidden", "aud_hidden",
                       "lr", "epochs", "warmup_epochs", "batch", "lr_decay_epoch"},
                   "avnet");
        c.avnet_net.c = get_or<int>(a, "c", c.avnet_net.c);
        c.avnet_net.k_classes = get_or<int>(a, "k_clusters", c.avnet_net.k_classes);
        c.avnet_net.tau = get_or<double>(a, "tau", c.avnet_net.tau);
        c.avnet_net.s_init = get_or<double>(a, "s_init", c.avnet_net.s_init);
        c.avnet_net.b_init = get_or<double>(a, "b_init", c.avnet_net.b_init);
        c.avnet_net.vis_hidden = get_or<std::vector<int>>(a, "vis_hidden", c.avnet_net.vis_hidden);
        c.avnet_net.aud_hidden = get_or<std::vector<int>>(a, "aud_hidden", c.avnet_net.aud_hidden);
        c.avnet_train.lr = get_or<double>(a, "lr", c.avnet_train.lr);
        c.avnet_train.epochs = get_or<int>(a, "epochs", c.avnet_train.epochs);
        c.avnet_train.warmup_epochs = get_or<int>(a, "warmup_epochs", c.avnet_train.warmup_epochs);
        c.avnet_train.batch = get_or<int>(a, "batch", c.avnet_train.batch);
        c.avnet_train.lr_decay_epoch = get_or<int>(a, "lr_decay_epoch", c.avnet_train.lr_decay_epoch);
        require_positive(c.avnet_train.lr, "avnet.lr");
        if (c.avnet_net.tau <= 0.0 || c.avnet_net.tau >= 1.0)
            throw ConfigError("config: avnet.tau must lie in (0,1)");
    }

    if (j.contains("vinet")) {
        const auto& v = j.at("vinet");
        check_keys(v, {"weights", "enc_channels", "dec_mid", "disc_channels", "lr", "disc_lr",
                       "steps", "lr_decay_frac", "t_window", "mask_regime", "imask_ratio",
                       "warm_start", "ckpt_every"},
                   "vinet");
        if (v.contains("weights")) {
            const auto& w = v.at("weights");
            check_keys(w, {"l1", "adv", "att_av", "cls_av"}, "vinet.weights");
            c.vinet_train.weights.l1 = get_or<double>(w, "l1", c.vinet_train.weights.l1);
            c.vinet_train.weights.adv = get_or<double>(w, "adv", c.vinet_train.weights.adv);
            c.vinet_train.weights.att_av = get_or<double>(w, "att_av", c.vinet_train.weights.att_av);
            c.vinet_train.weights.cls_av = get_or<double>(w, "cls_av", c.vinet_train.weights.cls_av);
            c.vinet_train.weights.validate();
        }
        c.vinet_net.enc_channels = get_or<std::vector<int>>(v, "enc_channels", c.vinet_net.enc_channels);
        c.vinet_net.dec_mid = get_or<int>(v, "dec_mid", c.vinet_net.dec_mid);
        c.vinet_net.disc_channels =
            get_or<std::vector<int>>(v, "disc_channels", c.vinet_net.disc_channels);
        c.vinet_train.lr = get_or<double>(v, "lr", c.vinet_train.lr);
        c.vinet_train.disc_lr = get_or<double>(v, "disc_lr", c.vinet_train.disc_lr);
        c.vinet_train.steps = get_or<int>(v, "steps", c.vinet_train.steps);
        c.vinet_train.lr_decay_frac = get_or<double>(v, "lr_decay_frac", c.vinet_train.lr_decay_frac);
        c.vinet_train.t_window = get_or<int>(v, "t_window", c.vinet_train.t_window);
        c.vinet_train.mask_regime = get_or<std::string>(v, "mask_regime", c.vinet_train.mask_regime);
        c.vinet_train.imask_ratio = get_or<double>(v, "imask_ratio", c.vinet_train.imask_ratio);
        c.vinet_train.warm_start = get_or<std::string>(v, "warm_start", "");
        c.vinet_train.ckpt_every = get_or<int>(v, "ckpt_every", c.vinet_train.ckpt_every);
        require_positive(c.vinet_train.lr, "vinet.lr");
        if (c.vinet_train.steps < 1) throw ConfigError("config: vinet.steps must be >= 1");
        if (c.vinet_train.t_window < 1) throw ConfigError("config: vinet.t_window must be >= 1");
    }

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        check_keys(e, {"split", "feature_extractor", "extractor_dim", "extractor_seed", "variants",
                       "mask_types", "imask_ratio"},
                   "eval");
        c.eval.split = get_or<std::string>(e, "split", c.eval.split);
        c.eval.feature_extractor =
            get_or<std::string>(e, "feature_extractor", c.eval.feature_extractor);
        c.eval.extractor_dim = get_or<int>(e, "extractor_dim", c.eval.extractor_dim);
        c.eval.extractor_seed = get_or<uint64_t>(e, "extractor_seed", c.eval.extractor_seed);
        c.eval.mask_types = get_or<std::vector<std::string>>(e, "mask_types", c.eval.mask_types);
        c.eval.imask_ratio = get_or<double>(e, "imask_ratio", c.eval.imask_ratio);
        if (e.contains("variants")) {
            c.eval.variants.clear();
            for (const auto& v : e.at("variants")) {
                check_keys(v, {"name", "checkpoint"}, "eval.variants[]");
                EvalVariant ev;
                ev.name = v.at("name").get<std::string>();
                ev.checkpoint = v.at("checkpoint").get<std::string>();
                c.eval.variants.push_back(std::move(ev));
            }
        }
        if (c.eval.feature_extractor != "avnet" && c.eval.feature_extractor != "random_projection")
            throw ConfigError("config: eval.feature_extractor must be avnet|random_projection");
        for (const auto& m : c.eval.mask_types)
            if (m != "imask" && m != "smask")
                throw ConfigError("config: eval.mask_types entries must be imask|smask");
    }

    if (j.contains("masks")) {
        const auto& m = j.at("masks");
        check_keys(m, {"split", "smask_source", "imask_ratios"}, "masks");
        c.masks.split = get_or<std::string>(m, "split", c.masks.split);
        c.masks.smask_source = get_or<std::string>(m, "smask_source", c.masks.smask_source);
        c.masks.imask_ratios = get_or<std::vector<double>>(m, "imask_ratios", c.masks.imask_ratios);
        if (c.masks.smask_source != "gt" && c.masks.smask_source != "avnet")
            throw ConfigError("config: masks.smask_source must be gt|avnet");
    }

    c.vinet_train.seed = c.seed;
    c.avnet_train.seed = c.seed;
    c.dataset.seed = c.seed;
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["avnet_ckpt"] = avnet_ckpt;
    j["vinet_ckpt"] = vinet_ckpt;
    j["dataset"] = {{"root", dataset_root},
                    {"n_classes", dataset.n_classes},
                    {"clips_per_class", dataset.clips_per_class},
                    {"split_fractions", dataset.split_fractions},
                    {"duration_s", dataset.duration_s},
                    {"snr_db", dataset.snr_db}};
    j["avnet"] = {{"c", avnet_net.c},
                  {"k_clusters", avnet_net.k_classes},
                  {"tau", avnet_net.tau},
                  {"s_init", avnet_net.s_init},
                  {"b_init", avnet_net.b_init},
                  {"vis_hidden", avnet_net.vis_hidden},
                  {"aud_hidden", avnet_net.aud_hidden},
                  {"lr", avnet_train.lr},
                  {"epochs", avnet_train.epochs},
                  {"warmup_epochs", avnet_train.warmup_epochs},
                  {"batch", avnet_train.batch},
                  {"lr_decay_epoch", avnet_train.lr_decay_epoch}};
    j["vinet"] = {{"weights",
                   {{"l1", vinet_train.weights.l1},
                    {"adv", vinet_train.weights.adv},
                    {"att_av", vinet_train.weights.att_av},
                    {"cls_av", vinet_train.weights.cls_av}}},
                  {"enc_channels", vinet_net.enc_channels},
                  {"dec_mid", vinet_net.dec_mid},
                  {"disc_channels", vinet_net.disc_channels},
                  {"lr", vinet_train.lr},
                  {"disc_lr", vinet_train.disc_lr},
                  {"steps", vinet_train.steps},
                  {"lr_decay_frac", vinet_train.lr_decay_frac},
                  {"t_window", vinet_train.t_window},
                  {"mask_regime", vinet_train.mask_regime},
                  {"imask_ratio", vinet_train.imask_ratio},
                  {"warm_start", vinet_train.warm_start},
                  {"ckpt_every", vinet_train.ckpt_every}};
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& v : eval.variants)
        variants.push_back({{"name", v.name}, {"checkpoint", v.checkpoint}});
    j["eval"] = {{"split", eval.split},
                 {"feature_extractor", eval.feature_extractor},
                 {"extractor_dim", eval.extractor_dim},
                 {"extractor_seed", eval.extractor_seed},
                 {"variants", variants},
                 {"mask_types", eval.mask_types},
                 {"imask_ratio", eval.imask_ratio}};
    j["masks"] = {{"split", masks.split},
                  {"smask_source", masks.smask_source},
                  {"imask_ratios", masks.imask_ratios}};
    return j;
}

void RunConfig::write_echo(const std::string& dir) const {
    fs::create_directories(dir);
    const fs::path p = fs::path(dir) / "resolved_config.json";
    const std::string tmp = p.string() + ".tmp";
    {
        std::ofstream os(tmp);
        os << to_json().dump(2) << "\n";
        if (!os) throw IoError("failed writing config echo: " + p.string());
    }
    fs::rename(tmp, p);
}

}  // namespace avi
