// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/avnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "avinpaint/checkpoint.hpp"
#include "json.hpp"

namespace avi::avnet {

namespace {

// Keeps sigmoid output strictly inside (0,1) in double precision.
constexpr double kLogitClamp = 36.0;

std::vector<int> block_channels(const std::vector<int>& hidden, int c) {
    std::vector<int> ch = hidden;
    ch.push_back(c);
    return ch;
}

void add_encoder_params(ParamSet& params, const std::string& prefix, int in_c,
                        const std::vector<int>& channels, Rng& rng) {
    int cur = in_c;
    for (size_t i = 0; i < channels.size(); ++i) {
        const int out_c = channels[i];
        params.add(prefix + "." + std::to_string(i) + ".w", init_conv_weight({out_c, cur, 3, 3}, rng));
        params.add(prefix + "." + std::to_string(i) + ".b", Tensor::zeros({out_c}));
        cur = out_c;
    }
}

ad::NodePtr encoder_graph(const ParamLeaves& L, const std::string& prefix, ad::NodePtr x,
                          size_t n_blocks) {
    ad::NodePtr h = std::move(x);
    for (size_t i = 0; i < n_blocks; ++i) {
        h = ad::conv2d(h, L.at(prefix + "." + std::to_string(i) + ".w"),
                       L.at(prefix + "." + std::to_string(i) + ".b"), 2, 1);
        if (i + 1 < n_blocks) h = ad::relu(h);  // final block stays linear
    }
    return h;
}

// Fixed input centering: frames live in [0,1], log-mels around [-13.8, 2.5].
ad::NodePtr center_frame(ad::NodePtr x) { return ad::affine(std::move(x), 1.0, -0.45); }
ad::NodePtr center_mel(ad::NodePtr x) { return ad::affine(std::move(x), 1.0 / 6.0, 7.0 / 6.0); }

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> softmax_of(const Tensor& logits) {
    double m = logits.data[0];
    for (double v : logits.data) m = std::max(m, v);
    double s = 0.0;
    std::vector<double> p(logits.data.size());
    for (size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits.data[i] - m);
        s += p[i];
    }
    for (double& v : p) v /= s;
    return p;
}

}  // namespace

AvNet AvNet::init(const AvNetConfig& cfg, uint64_t seed) {
    if (cfg.c < 1 || cfg.k_classes < 1) throw ConfigError("avnet: c and k_classes must be positive");
    if (cfg.vis_hidden.size() != 3 || cfg.aud_hidden.size() != 3)
        throw ConfigError("avnet: encoders use exactly four stride-2 blocks");
    AvNet net;
    net.cfg = cfg;
    Rng rng(derive_seed(seed, "avnet-init"));
    add_encoder_params(net.params, "vis", 3, block_channels(cfg.vis_hidden, cfg.c), rng);
    add_encoder_params(net.params, "aud", 1, block_channels(cfg.aud_hidden, cfg.c), rng);
    net.params.add("cls_a.w", init_conv_weight({cfg.k_classes, cfg.c}, rng));
    net.params.add("cls_a.b", Tensor::zeros({cfg.k_classes}));
    net.params.add("cls_v.w", init_conv_weight({cfg.k_classes, cfg.c}, rng));
    net.params.add("cls_v.b", Tensor::zeros({cfg.k_classes}));
    net.params.add("att.s", Tensor::scalar(cfg.s_init));
    net.params.add("att.b", Tensor::scalar(cfg.b_init));
    return net;
}

ad::NodePtr AvNet::visual_map_graph(const ParamLeaves& L, ad::NodePtr frame) const {
    return encoder_graph(L, "vis", center_frame(std::move(frame)), 4);
}

ad::NodePtr AvNet::audio_emb_graph(const ParamLeaves& L, ad::NodePtr mel) const {
    ad::NodePtr h = encoder_graph(L, "aud", center_mel(std::move(mel)), 4);
    return ad::gap2d(h);
}

ad::NodePtr AvNet::attention_graph(const ParamLeaves& L, ad::NodePtr a_emb,
                                   ad::NodePtr v_map) const {
    ad::NodePtr cos = ad::cosine_map(std::move(a_emb), std::move(v_map));
    return ad::sigmoid(ad::scale_shift(std::move(cos), L.at("att.s"), L.at("att.b")));
}

ad::NodePtr AvNet::audio_logits_graph(const ParamLeaves& L, ad::NodePtr a_emb) const {
    return ad::linear(std::move(a_emb), L.at("cls_a.w"), L.at("cls_a.b"));
}

ad::NodePtr AvNet::visual_logits_graph(const ParamLeaves& L, ad::NodePtr v_map) const {
    return ad::linear(ad::gap2d(std::move(v_map)), L.at("cls_v.w"), L.at("cls_v.b"));
}

Tensor AvNet::visual_map(const Tensor& frame) const {
    ParamLeaves L(params, false);
    return visual_map_graph(L, ad::constant(frame))->value;
}

Tensor AvNet::audio_embedding(const Tensor& mel) const {
    if (mel.rank() == 2) {
        Tensor m3({1, mel.dim(0), mel.dim(1)}, mel.data);
        ParamLeaves L(params, false);
        return audio_emb_graph(L, ad::constant(m3))->value;
    }
    ParamLeaves L(params, false);
    return audio_emb_graph(L, ad::constant(mel))->value;
}

Tensor AvNet::attention(const Tensor& a_emb, const Tensor& v_map) const {
    return attention_map(a_emb, v_map, params.at("att.s").data[0], params.at("att.b").data[0]).map;
}

Tensor AvNet::audio_logits(const Tensor& a_emb) const {
    ParamLeaves L(params, false);
    return audio_logits_graph(L, ad::constant(a_emb))->value;
}

Tensor AvNet::visual_logits(const Tensor& v_map) const {
    ParamLeaves L(params, false);
    return visual_logits_graph(L, ad::constant(v_map))->value;
}

void AvNet::save(const std::string& path) const {
    nlohmann::json h;
    h["c"] = cfg.c;
    h["h"] = 14;
    h["w"] = 14;
    h["K"] = cfg.k_classes;
    h["tau"] = cfg.tau;
    h["s"] = params.at("att.s").data[0];
    h["b"] = params.at("att.b").data[0];
    h["vis_hidden"] = cfg.vis_hidden;
    h["aud_hidden"] = cfg.aud_hidden;
    save_checkpoint(path, "avnet", h, params);
}

AvNet AvNet::from_checkpoint(const std::string& path, bool frozen) {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.module_name != "avnet")
        throw IoError("checkpoint is not an avnet checkpoint: " + path);
    AvNet net;
    net.cfg.c = ck.header.at("c").get<int>();
    net.cfg.k_classes = ck.header.at("K").get<int>();
    net.cfg.tau = ck.header.at("tau").get<double>();
    net.cfg.vis_hidden = ck.header.at("vis_hidden").get<std::vector<int>>();
    net.cfg.aud_hidden = ck.header.at("aud_hidden").get<std::vector<int>>();
    net.params = std::move(ck.params);
    net.cfg.s_init = net.params.at("att.s").data[0];
    net.cfg.b_init = net.params.at("att.b").data[0];
    net.frozen = frozen;
    return net;
}

AttentionResult attention_map(const Tensor& a_emb, const Tensor& v_map, double s, double b) {
    if (a_emb.rank() != 1 || v_map.rank() != 3 || a_emb.dim(0) != v_map.dim(0))
        throw InvalidInputError("attention_map: expected (c) and (c,h,w) with matching c");
    if (!a_emb.all_finite() || !v_map.all_finite())
        throw InvalidInputError("attention_map: non-finite input");
    const int c = a_emb.dim(0), h = v_map.dim(1), w = v_map.dim(2);
    const long hw = static_cast<long>(h) * w;

    AttentionResult res;
    double na = 0.0;
    for (double v : a_emb.data) na += v * v;
    na = std::sqrt(na);
    if (na < 1e-12) res.zero_norm_flagged = true;

    res.map = Tensor({h, w});
    for (long p = 0; p < hw; ++p) {
        double nv = 0.0, dot = 0.0;
        for (int ci = 0; ci < c; ++ci) {
            const double vc = v_map.data[static_cast<size_t>(ci) * hw + p];
            nv += vc * vc;
            dot += vc * a_emb.data[static_cast<size_t>(ci)];
        }
        nv = std::sqrt(nv);
        double cos = 0.0;
        if (na >= 1e-12 && nv >= 1e-12)
            cos = dot / (na * nv);
        else if (nv < 1e-12)
            res.zero_norm_flagged = true;
        const double logit = std::clamp(s * cos + b, -kLogitClamp, kLogitClamp);
        res.map.data[static_cast<size_t>(p)] = stable_sigmoid(logit);
    }
    return res;
}

double correspondence_loss(const Tensor& att, int y_corr) {
    if (att.numel() < 1) throw InvalidInputError("correspondence_loss: empty map");
    if (y_corr != 0 && y_corr != 1)
        throw InvalidInputError("correspondence_loss: label must be 0 or 1");
    double m = att.data[0];
    for (double v : att.data) m = std::max(m, v);
    m = std::clamp(m, 1e-12, 1.0 - 1e-12);
    return -(y_corr * std::log(m) + (1 - y_corr) * std::log(1.0 - m));
}

ObjectRepr extract_object_repr(const Tensor& att, const Tensor& v_map, double tau) {
    if (att.rank() != 2 || v_map.rank() != 3 || att.dim(0) != v_map.dim(1) ||
        att.dim(1) != v_map.dim(2))
        throw InvalidInputError("extract_object_repr: attention/feature shape mismatch");
    const int c = v_map.dim(0);
    const long hw = att.numel();

    ObjectRepr res;
    res.mask = masks::mask_from_tensor_threshold(att, tau);
    const bool empty = res.mask.empty_mask();
    res.fallback_used = empty;
    res.descriptor = Tensor({c});
    for (int ci = 0; ci < c; ++ci) {
        double s = 0.0;
        for (long p = 0; p < hw; ++p) {
            if (empty || res.mask.grid[static_cast<size_t>(p)])
                s += v_map.data[static_cast<size_t>(ci) * hw + p];
        }
        res.descriptor.data[static_cast<size_t>(ci)] = s / static_cast<double>(hw);
    }
    return res;
}

PseudoLabelTable cluster_pseudo_labels(
    const std::vector<std::pair<std::string, Tensor>>& descriptors, int k, uint64_t seed) {
    if (static_cast<int>(descriptors.size()) < k)
        throw InvalidInputError("cluster_pseudo_labels: fewer descriptors than clusters");
    std::vector<Tensor> points;
    points.reserve(descriptors.size());
    for (const auto& [id, d] : descriptors) points.push_back(d);
    KMeansResult km = kmeans(points, k, seed);
    PseudoLabelTable table;
    table.centroids = std::move(km.centroids);
    table.objective = std::move(km.objective);
    for (size_t i = 0; i < descriptors.size(); ++i)
        table.labels[descriptors[i].first] = km.labels[i];
    return table;
}

void save_pseudo_labels(const std::string& path, const PseudoLabelTable& table) {
    nlohmann::json j;
    j["labels"] = table.labels;
    j["centroids"] = table.centroids.data;
    j["centroid_shape"] = table.centroids.shape;
    std::ofstream os(path);
    os << j.dump(2) << "\n";
    if (!os) throw IoError("failed writing pseudo-label table: " + path);
}

PseudoLabelTable load_pseudo_labels(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open pseudo-label table: " + path);
    nlohmann::json j;
    is >> j;
    PseudoLabelTable table;
    table.labels = j.at("labels").get<std::map<std::string, int>>();
    table.centroids = Tensor(j.at("centroid_shape").get<std::vector<int>>(),
                             j.at("centroids").get<std::vector<double>>());
    return table;
}

double classification_loss(const Tensor& audio_logits, const Tensor& visual_logits, int label) {
    if (audio_logits.numel() != visual_logits.numel())
        throw InvalidInputError("classification_loss: logit length mismatch");
    const long k = audio_logits.numel();
    if (label < 0 || label >= k)
        throw InvalidInputError("classification_loss: label outside [0,K)");
    double loss = 0.0;
    for (const Tensor* logits : {&audio_logits, &visual_logits}) {
        double m = logits->data[0];
        for (double v : logits->data) m = std::max(m, v);
        double s = 0.0;
        for (double v : logits->data) s += std::exp(v - m);
        loss += m + std::log(s) - logits->data[static_cast<size_t>(label)];
    }
    return loss;
}

AvNetTrainResult train_avnet(const ClipStore& data, const AvNetConfig& cfg,
                             const AvNetTrainConfig& tcfg) {
    const auto train = data.split("train");
    if (train.empty()) throw InvalidInputError("train_avnet: train split is empty");
    if (tcfg.batch < 4) throw ConfigError("train_avnet: batch must be >= 4");
    if (tcfg.epochs < 1) throw ConfigError("train_avnet: epochs must be >= 1");

    AvNetTrainResult res;
    res.net = AvNet::init(cfg, tcfg.seed);
    AvNet& net = res.net;
    Adam adam(tcfg.lr);

    const int n_train = static_cast<int>(train.size());
    const int batch = std::min(tcfg.batch, std::max(4, n_train));
    int gstep = 0;

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        adam.set_lr(tcfg.lr_decay_epoch > 0 && epoch >= tcfg.lr_decay_epoch ? tcfg.lr * 0.1
                                                                            : tcfg.lr);
        const bool warm = epoch < tcfg.warmup_epochs;

        if (!warm) {
            // Recompute pseudo-labels from attention-gated descriptors of the
            // clip's middle frame.
            std::vector<std::pair<std::string, Tensor>> descriptors;
            for (const auto& ref : train) {
                const int mid = data.frame_count(ref.id) / 2;
                const Tensor frame = avio::prepare_frame_test(data.load_frame_rgb(ref.id, mid));
                const Tensor mel = data.frame_mel(ref.id, mid);
                Tensor mel3({1, mel.dim(0), mel.dim(1)}, mel.data);
                const Tensor v_map = net.visual_map(frame);
                const Tensor a_emb = net.audio_embedding(mel3);
                const Tensor att = net.attention(a_emb, v_map);
                descriptors.emplace_back(ref.id, extract_object_repr(att, v_map, cfg.tau).descriptor);
            }
            res.labels = cluster_pseudo_labels(descriptors, cfg.k_classes,
                                               derive_seed(tcfg.seed, "kmeans", static_cast<uint64_t>(epoch)));
        }

        std::vector<int> order(static_cast<size_t>(n_train));
        for (int i = 0; i < n_train; ++i) order[static_cast<size_t>(i)] = i;
        Rng order_rng(derive_seed(tcfg.seed, "order", static_cast<uint64_t>(epoch)));
        for (int i = n_train - 1; i > 0; --i)
            std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(order_rng.uniform_int(0, i))]);

        const int n_batches = std::max(1, n_train / batch);
        for (int bi = 0; bi < n_batches; ++bi) {
            Rng step_rng(derive_seed(tcfg.seed, "step", static_cast<uint64_t>(gstep)));
            const bool do_corr = warm || (bi % 2 == 0);

            // Sample one (frame, mel) pair per slot, cycling the shuffled order.
            std::vector<ad::NodePtr> a_embs(static_cast<size_t>(batch));
            std::vector<ad::NodePtr> v_maps(static_cast<size_t>(batch));
            std::vector<int> clip_idx(static_cast<size_t>(batch));
            ParamLeaves L = net.leaves();
            if (net.frozen) throw TrainingError("train_avnet: parameters are frozen");

            for (int i = 0; i < batch; ++i) {
                const int ti = order[static_cast<size_t>((bi * batch + i) % n_train)];
                clip_idx[static_cast<size_t>(i)] = ti;
                const auto& ref = train[static_cast<size_t>(ti)];
                const int fidx = step_rng.uniform_int(0, data.frame_count(ref.id) - 1);
                const Tensor rgb = data.load_frame_rgb(ref.id, fidx);
                const Tensor frame = avio::prepare_frame(rgb, avio::PrepMode::train, step_rng);
                const Tensor mel = data.frame_mel(ref.id, fidx);
                Tensor mel3({1, mel.dim(0), mel.dim(1)}, mel.data);
                a_embs[static_cast<size_t>(i)] = net.audio_emb_graph(L, ad::constant(mel3));
                v_maps[static_cast<size_t>(i)] = net.visual_map_graph(L, ad::constant(frame));
            }

            std::vector<std::pair<ad::NodePtr, Tensor>> seeds;
            double loss_sum = 0.0;
            if (do_corr) {
                // First half matched, second half audio rotated within the
                // half so every pair is cross-clip.
                const int n_pos = batch / 2;
                const int n_neg = batch - n_pos;
                const int shift = n_neg > 1 ? step_rng.uniform_int(1, n_neg - 1) : 0;
                for (int i = 0; i < batch; ++i) {
                    int ai = i;
                    int y = 1;
                    if (i >= n_pos) {
                        ai = n_pos + ((i - n_pos + shift) % n_neg);
                        y = 0;
                    }
                    auto att = net.attention_graph(L, a_embs[static_cast<size_t>(ai)],
                                                   v_maps[static_cast<size_t>(i)]);
                    auto loss = ad::bce_prob(ad::reduce_max(att), y);
                    loss_sum += loss->value.data[0];
                    seeds.emplace_back(std::move(loss), Tensor::scalar(1.0 / batch));
                }
            } else {
                for (int i = 0; i < batch; ++i) {
                    const auto& ref = train[static_cast<size_t>(clip_idx[static_cast<size_t>(i)])];
                    const int label = res.labels.labels.at(ref.id);
                    auto ce_a = ad::ce_with_index(net.audio_logits_graph(L, a_embs[static_cast<size_t>(i)]), label);
                    auto ce_v = ad::ce_with_index(net.visual_logits_graph(L, v_maps[static_cast<size_t>(i)]), label);
                    auto loss = ad::weighted_sum({ce_a, ce_v}, {1.0, 1.0});
                    loss_sum += loss->value.data[0];
                    seeds.emplace_back(std::move(loss), Tensor::scalar(1.0 / batch));
                }
            }

            const double mean_loss = loss_sum / batch;
            if (!std::isfinite(mean_loss))
                throw TrainingError("train_avnet: loss diverged (non-finite) at step " +
                                    std::to_string(gstep));
            ad::backward(seeds);
            GradStore grads;
            L.collect(grads);
            if (!grads.all_finite())
                throw TrainingError("train_avnet: gradient diverged at step " + std::to_string(gstep));
            adam.step(net.params, grads);

            res.curve.push_back({gstep, do_corr ? "corr" : "cls", mean_loss});
            ++gstep;
        }
    }

    // Final pseudo-label table from the trained network.
    std::vector<std::pair<std::string, Tensor>> descriptors;
    for (const auto& ref : train) {
        const int mid = data.frame_count(ref.id) / 2;
        const Tensor frame = avio::prepare_frame_test(data.load_frame_rgb(ref.id, mid));
        const Tensor mel = data.frame_mel(ref.id, mid);
        Tensor mel3({1, mel.dim(0), mel.dim(1)}, mel.data);
        const Tensor v_map = net.visual_map(frame);
        const Tensor a_emb = net.audio_embedding(mel3);
        const Tensor att = net.attention(a_emb, v_map);
        descriptors.emplace_back(ref.id, extract_object_repr(att, v_map, cfg.tau).descriptor);
    }
    res.labels = cluster_pseudo_labels(descriptors, cfg.k_classes, derive_seed(tcfg.seed, "kmeans-final"));
    return res;
}

}  // namespace avi::avnet
