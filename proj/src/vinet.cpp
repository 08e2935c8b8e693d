// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/vinet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "avinpaint/checkpoint.hpp"
#include "avinpaint/synthbench.hpp"

namespace avi::vinet {

namespace {

constexpr double kLReluSlope = 0.2;

nlohmann::json config_header(const ViNetConfig& cfg) {
    nlohmann::json h;
    h["audio_c"] = cfg.audio_c;
    h["enc_channels"] = cfg.enc_channels;
    h["dec_mid"] = cfg.dec_mid;
    h["disc_channels"] = cfg.disc_channels;
    return h;
}

ViNetConfig config_from_header(const nlohmann::json& h) {
    ViNetConfig cfg;
    cfg.audio_c = h.at("audio_c").get<int>();
    cfg.enc_channels = h.at("enc_channels").get<std::vector<int>>();
    cfg.dec_mid = h.at("dec_mid").get<int>();
    cfg.disc_channels = h.at("disc_channels").get<std::vector<int>>();
    return cfg;
}

}  // namespace

ViNet ViNet::init(const ViNetConfig& cfg, uint64_t seed) {
    if (cfg.enc_channels.size() != 3) throw ConfigError("vinet: expected three encoder stages");
    ViNet net;
    net.cfg = cfg;
    Rng rng(derive_seed(seed, "vinet-init"));
    const int c1 = cfg.enc_channels[0], c2 = cfg.enc_channels[1], c3 = cfg.enc_channels[2];
    net.params.add("enc.0.w", init_conv_weight({c1, 4, 3, 3}, rng));
    net.params.add("enc.0.b", Tensor::zeros({c1}));
    net.params.add("enc.1.w", init_conv_weight({c2, c1, 3, 3}, rng));
    net.params.add("enc.1.b", Tensor::zeros({c2}));
    net.params.add("enc.2.w", init_conv_weight({c3, c2, 3, 3}, rng));
    net.params.add("enc.2.b", Tensor::zeros({c3}));
    net.params.add("fuse.w", init_conv_weight({c3, c3 + cfg.audio_c, 1, 1}, rng));
    net.params.add("fuse.b", Tensor::zeros({c3}));
    net.params.add("dec.0.w", init_conv_weight({c2, c3, 3, 3}, rng));
    net.params.add("dec.0.b", Tensor::zeros({c2}));
    net.params.add("dec.1.w", init_conv_weight({c1, c2, 3, 3}, rng));
    net.params.add("dec.1.b", Tensor::zeros({c1}));
    net.params.add("dec.2.w", init_conv_weight({cfg.dec_mid, c1, 3, 3}, rng));
    net.params.add("dec.2.b", Tensor::zeros({cfg.dec_mid}));
    net.params.add("out.w", init_conv_weight({3, cfg.dec_mid, 3, 3}, rng));
    net.params.add("out.b", Tensor::zeros({3}));
    return net;
}

ad::NodePtr ViNet::inpaint_graph(const ParamLeaves& L, ad::NodePtr corrupted,
                                 ad::NodePtr a_emb) const {
    const Tensor& x = corrupted->value;
    if (x.rank() != 3 || x.dim(0) != 4)
        throw InvalidInputError("inpaint: expected 4-channel (RGB+mask) input, got " + x.shape_str());
    if (a_emb->value.numel() != cfg.audio_c)
        throw InvalidInputError("inpaint: audio embedding length mismatch");

    auto centered = ad::affine(corrupted, 1.0, -0.45);
    auto e1 = ad::leaky_relu(ad::conv2d(centered, L.at("enc.0.w"), L.at("enc.0.b"), 2, 1), kLReluSlope);
    auto e2 = ad::leaky_relu(ad::conv2d(e1, L.at("enc.1.w"), L.at("enc.1.b"), 2, 1), kLReluSlope);
    auto e3 = ad::leaky_relu(ad::conv2d(e2, L.at("enc.2.w"), L.at("enc.2.b"), 2, 1), kLReluSlope);

    // Audio feature broadcast over the bottleneck grid, then fused by 1x1 conv.
    auto a_map = ad::broadcast_spatial(a_emb, e3->value.dim(1), e3->value.dim(2));
    auto fused = ad::leaky_relu(
        ad::conv2d(ad::concat_channels(e3, a_map), L.at("fuse.w"), L.at("fuse.b"), 1, 0),
        kLReluSlope);

    auto d1 = ad::leaky_relu(ad::conv2d(fused, L.at("dec.0.w"), L.at("dec.0.b"), 1, 1), kLReluSlope);
    auto u1 = ad::add(ad::upsample_nearest2(d1), e2);
    auto d2 = ad::leaky_relu(ad::conv2d(u1, L.at("dec.1.w"), L.at("dec.1.b"), 1, 1), kLReluSlope);
    auto u2 = ad::add(ad::upsample_nearest2(d2), e1);
    auto d3 = ad::leaky_relu(ad::conv2d(u2, L.at("dec.2.w"), L.at("dec.2.b"), 1, 1), kLReluSlope);
    auto u3 = ad::upsample_nearest2(d3);
    return ad::sigmoid(ad::conv2d(u3, L.at("out.w"), L.at("out.b"), 1, 1));
}

Tensor ViNet::inpaint(const Tensor& corrupted, const Tensor& a_emb) const {
    ParamLeaves L(params, false);
    return inpaint_graph(L, ad::constant(corrupted), ad::constant(a_emb))->value;
}

void ViNet::save(const std::string& path) const {
    save_checkpoint(path, "vinet", config_header(cfg), params);
}

ViNet ViNet::from_checkpoint(const std::string& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.module_name != "vinet") throw IoError("not a vinet checkpoint: " + path);
    ViNet net;
    net.cfg = config_from_header(ck.header);
    net.params = std::move(ck.params);
    return net;
}

Discriminator Discriminator::init(const ViNetConfig& cfg, uint64_t seed) {
    if (cfg.disc_channels.size() != 3)
        throw ConfigError("discriminator: expected three conv stages");
    Discriminator d;
    d.cfg = cfg;
    Rng rng(derive_seed(seed, "disc-init"));
    const int d1 = cfg.disc_channels[0], d2 = cfg.disc_channels[1], d3 = cfg.disc_channels[2];
    d.params.add("c0.w", init_conv_weight({d1, 3, 3, 3, 3}, rng));
    d.params.add("c0.b", Tensor::zeros({d1}));
    d.params.add("c1.w", init_conv_weight({d2, d1, 3, 3, 3}, rng));
    d.params.add("c1.b", Tensor::zeros({d2}));
    d.params.add("c2.w", init_conv_weight({d3, d2, 3, 3, 3}, rng));
    d.params.add("c2.b", Tensor::zeros({d3}));
    d.params.add("out.w", init_conv_weight({1, d3, 3, 3, 3}, rng));
    d.params.add("out.b", Tensor::zeros({1}));
    return d;
}

ad::NodePtr Discriminator::score_graph(const ParamLeaves& L, ad::NodePtr stack) const {
    auto h = ad::leaky_relu(ad::conv3d(stack, L.at("c0.w"), L.at("c0.b"), {1, 2, 2}, {1, 1, 1}),
                            kLReluSlope);
    h = ad::leaky_relu(ad::conv3d(h, L.at("c1.w"), L.at("c1.b"), {2, 2, 2}, {1, 1, 1}), kLReluSlope);
    h = ad::leaky_relu(ad::conv3d(h, L.at("c2.w"), L.at("c2.b"), {2, 2, 2}, {1, 1, 1}), kLReluSlope);
    return ad::conv3d(h, L.at("out.w"), L.at("out.b"), {1, 1, 1}, {1, 1, 1});
}

void Discriminator::save(const std::string& path) const {
    save_checkpoint(path, "vinet_disc", config_header(cfg), params);
}

Discriminator Discriminator::from_checkpoint(const std::string& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.module_name != "vinet_disc") throw IoError("not a discriminator checkpoint: " + path);
    Discriminator d;
    d.cfg = config_from_header(ck.header);
    d.params = std::move(ck.params);
    return d;
}

Tensor composite(const Tensor& inpainted, const Tensor& ground_truth,
                 const masks::BinaryMask& mask) {
    if (!inpainted.same_shape(ground_truth) || inpainted.rank() != 3 ||
        inpainted.dim(1) != mask.h || inpainted.dim(2) != mask.w)
        throw InvalidInputError("composite: shape mismatch");
    Tensor out = ground_truth;
    const long hw = static_cast<long>(mask.h) * mask.w;
    for (int c = 0; c < inpainted.dim(0); ++c)
        for (long p = 0; p < hw; ++p)
            if (mask.grid[static_cast<size_t>(p)])
                out.data[static_cast<size_t>(c) * hw + p] = inpainted.data[static_cast<size_t>(c) * hw + p];
    return out;
}

double reconstruction_l1(const Tensor& inpainted, const Tensor& ground_truth) {
    if (!inpainted.same_shape(ground_truth))
        throw InvalidInputError("reconstruction_l1: shape mismatch");
    double s = 0.0;
    for (long i = 0; i < inpainted.numel(); ++i)
        s += std::fabs(inpainted.data[static_cast<size_t>(i)] - ground_truth.data[static_cast<size_t>(i)]);
    return s / static_cast<double>(inpainted.numel());
}

std::pair<double, double> adversarial_losses(const std::vector<Tensor>& real_frames,
                                             const std::vector<Tensor>& fake_frames,
                                             const Discriminator& disc) {
    if (real_frames.size() != fake_frames.size() || real_frames.size() < 2)
        throw InvalidInputError("adversarial_losses: need equal-length stacks with T >= 2");
    ParamLeaves L(disc.params, false);
    std::vector<ad::NodePtr> real_nodes, fake_nodes;
    for (const auto& f : real_frames) real_nodes.push_back(ad::constant(f));
    for (const auto& f : fake_frames) fake_nodes.push_back(ad::constant(f));
    auto d_real = disc.score_graph(L, ad::stack_time(real_nodes));
    auto d_fake = disc.score_graph(L, ad::stack_time(fake_nodes));

    auto hinge_real = ad::mean(ad::relu(ad::affine(d_real, -1.0, 1.0)));
    auto hinge_fake = ad::mean(ad::relu(ad::affine(d_fake, 1.0, 1.0)));
    const double disc_loss = hinge_real->value.data[0] + hinge_fake->value.data[0];
    const double gen_loss = -ad::mean(d_fake)->value.data[0];
    return {gen_loss, disc_loss};
}

ViNetTrainResult train_vinet(const ClipStore& data, const avnet::AvNet& guider,
                             const ViNetConfig& cfg, const ViNetTrainConfig& tcfg) {
    if (!guider.frozen)
        throw ConfigError("train_vinet: guider network must be loaded in frozen mode");
    if (guider.cfg.c != cfg.audio_c)
        throw ConfigError("train_vinet: audio_c does not match the guider embedding width");
    if (tcfg.mask_regime != "imask" && tcfg.mask_regime != "smask" && tcfg.mask_regime != "mixed")
        throw ConfigError("train_vinet: mask_regime must be imask|smask|mixed");
    tcfg.weights.validate();
    const auto train = data.split("train");
    if (train.empty()) throw InvalidInputError("train_vinet: train split is empty");

    ViNetTrainResult res;
    if (!tcfg.warm_start.empty()) {
        res.net = ViNet::from_checkpoint(tcfg.warm_start);
        if (res.net.cfg.enc_channels != cfg.enc_channels || res.net.cfg.audio_c != cfg.audio_c)
            throw ConfigError("train_vinet: warm-start architecture mismatch");
    } else {
        res.net = ViNet::init(cfg, tcfg.seed);
    }
    res.disc = Discriminator::init(cfg, derive_seed(tcfg.seed, "disc"));
    Adam gen_adam(tcfg.lr);
    Adam disc_adam(tcfg.disc_lr);

    const bool guided = tcfg.weights.att_av > 0.0 || tcfg.weights.cls_av > 0.0;
    const bool use_adv = tcfg.weights.adv > 0.0;
    std::unique_ptr<guidance::LossLog> log_file;
    if (!tcfg.log_csv.empty()) log_file = std::make_unique<guidance::LossLog>(tcfg.log_csv);

    // S-masks are fixed per clip, grown from the first frame's object mask.
    std::map<std::string, masks::BinaryMask> smask_cache;
    auto smask_for = [&](const std::string& clip_id) -> const masks::BinaryMask& {
        auto it = smask_cache.find(clip_id);
        if (it != smask_cache.end()) return it->second;
        const auto gt = synth::load_ground_truth(data.root(), clip_id);
        if (gt.object_masks.empty())
            throw InvalidInputError("train_vinet: clip has no ground-truth masks: " + clip_id);
        return smask_cache.emplace(clip_id, masks::generate_smask(gt.object_masks[0]).mask)
            .first->second;
    };

    for (int step = 0; step < tcfg.steps; ++step) {
        const double lr_now = (tcfg.lr_decay_frac > 0.0 &&
                               step >= static_cast<int>(tcfg.lr_decay_frac * tcfg.steps))
                                  ? tcfg.lr * 0.1
                                  : tcfg.lr;
        gen_adam.set_lr(lr_now);

        Rng rng(derive_seed(tcfg.seed, "vstep", static_cast<uint64_t>(step)));
        const auto& ref = train[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(train.size()) - 1))];
        const int n_frames = data.frame_count(ref.id);
        const int t_eff = std::min(tcfg.t_window, n_frames);
        const int t0 = rng.uniform_int(0, n_frames - t_eff);

        const bool use_smask = tcfg.mask_regime == "smask" ||
                               (tcfg.mask_regime == "mixed" && step % 2 == 1);
        masks::BinaryMask mask = use_smask
                                     ? smask_for(ref.id)
                                     : masks::generate_imask(avio::kFrameSize, avio::kFrameSize,
                                                             tcfg.imask_ratio, rng);
        const Tensor mask_t = masks::mask_to_tensor(mask);

        // Generator pass over the clip window.
        ParamLeaves gen_leaves = res.net.leaves(true);
        ParamLeaves guider_leaves = guider.leaves();  // frozen -> non-trainable
        ParamLeaves disc_gen_leaves = res.disc.leaves(false);

        std::vector<ad::NodePtr> comp_nodes;
        std::vector<ad::NodePtr> loss_terms;
        std::vector<double> loss_weights;
        std::vector<Tensor> real_frames;
        double l1_sum = 0.0, att_sum = 0.0, cls_sum = 0.0;

        for (int t = 0; t < t_eff; ++t) {
            const Tensor frame = avio::prepare_frame_test(data.load_frame_rgb(ref.id, t0 + t));
            const Tensor mel = data.frame_mel(ref.id, t0 + t);
            Tensor mel3({1, mel.dim(0), mel.dim(1)}, mel.data);
            const Tensor a_emb = guider.audio_embedding(mel3);
            const Tensor corrupted = masks::apply_mask(frame, mask);

            auto vhat = res.net.inpaint_graph(gen_leaves, ad::constant(corrupted), ad::constant(a_emb));
            auto comp = ad::blend(vhat, frame, mask_t);
            comp_nodes.push_back(comp);
            real_frames.push_back(frame);

            auto l1 = ad::mean_abs_diff(vhat, frame);
            l1_sum += l1->value.data[0];
            loss_terms.push_back(l1);
            loss_weights.push_back(tcfg.weights.l1 / t_eff);

            if (guided) {
                // Targets through the frozen guider, detached.
                const Tensor v_map_gt = guider.visual_map(frame);
                const Tensor att_gt = guider.attention(a_emb, v_map_gt);
                const Tensor audio_logits = guider.audio_logits(a_emb);

                auto v_map_inp = guider.visual_map_graph(guider_leaves, comp);
                auto att_inp = guider.attention_graph(guider_leaves, ad::constant(a_emb), v_map_inp);
                auto att_loss = guidance::av_attention_loss_graph(att_inp, att_gt);
                auto cls_loss = guidance::av_class_consistency_loss_graph(
                    guider.visual_logits_graph(guider_leaves, v_map_inp), audio_logits);
                att_sum += att_loss->value.data[0];
                cls_sum += cls_loss->value.data[0];
                loss_terms.push_back(att_loss);
                loss_weights.push_back(tcfg.weights.att_av / t_eff);
                loss_terms.push_back(cls_loss);
                loss_weights.push_back(tcfg.weights.cls_av / t_eff);
            } else {
                // Reported but unweighted: value-only pass, no gradient.
                const Tensor v_map_gt = guider.visual_map(frame);
                const Tensor att_gt = guider.attention(a_emb, v_map_gt);
                const Tensor v_map_inp = guider.visual_map(comp->value);
                const Tensor att_inp = guider.attention(a_emb, v_map_inp);
                att_sum += guidance::av_attention_loss(att_gt, att_inp);
                cls_sum += guidance::av_class_consistency_loss(guider.audio_logits(a_emb),
                                                               guider.visual_logits(v_map_inp));
            }
        }

        double gen_adv = 0.0;
        ad::NodePtr fake_scores_gen;
        if (use_adv && t_eff >= 2) {
            fake_scores_gen = res.disc.score_graph(disc_gen_leaves, ad::stack_time(comp_nodes));
            auto adv_term = ad::affine(ad::mean(fake_scores_gen), -1.0, 0.0);
            gen_adv = adv_term->value.data[0];
            loss_terms.push_back(adv_term);
            loss_weights.push_back(tcfg.weights.adv);
        }

        auto total_node = ad::weighted_sum(loss_terms, loss_weights);
        const guidance::LossBundle bundle = guidance::total_loss(
            l1_sum / t_eff, gen_adv, att_sum / t_eff, cls_sum / t_eff, tcfg.weights);
        if (!std::isfinite(total_node->value.data[0]))
            throw TrainingError("train_vinet: loss diverged at step " + std::to_string(step) +
                                (tcfg.ckpt_path.empty() ? "" : "; last good checkpoint: " + tcfg.ckpt_path));

        ad::backward(total_node);
        GradStore gen_grads;
        gen_leaves.collect(gen_grads);
        if (!gen_grads.all_finite())
            throw TrainingError("train_vinet: generator gradient diverged at step " +
                                std::to_string(step) +
                                (tcfg.ckpt_path.empty() ? "" : "; last good checkpoint: " + tcfg.ckpt_path));
        gen_adam.step(res.net.params, gen_grads);

        // Discriminator update on detached composites.
        if (use_adv && t_eff >= 2) {
            ParamLeaves disc_leaves = res.disc.leaves(true);
            std::vector<ad::NodePtr> real_nodes, fake_nodes;
            for (const auto& f : real_frames) real_nodes.push_back(ad::constant(f));
            for (const auto& c : comp_nodes) fake_nodes.push_back(ad::constant(c->value));
            auto d_real = res.disc.score_graph(disc_leaves, ad::stack_time(real_nodes));
            auto d_fake = res.disc.score_graph(disc_leaves, ad::stack_time(fake_nodes));
            auto d_loss = ad::weighted_sum({ad::mean(ad::relu(ad::affine(d_real, -1.0, 1.0))),
                                            ad::mean(ad::relu(ad::affine(d_fake, 1.0, 1.0)))},
                                           {1.0, 1.0});
            ad::backward(d_loss);
            GradStore d_grads;
            disc_leaves.collect(d_grads);
            disc_adam.step(res.disc.params, d_grads);
        }

        res.log.emplace_back(step, bundle);
        if (log_file) log_file->append(step, bundle);

        if (tcfg.ckpt_every > 0 && !tcfg.ckpt_path.empty() && (step + 1) % tcfg.ckpt_every == 0) {
            res.net.save(tcfg.ckpt_path);
            if (!tcfg.disc_ckpt_path.empty()) res.disc.save(tcfg.disc_ckpt_path);
        }
    }

    if (!tcfg.ckpt_path.empty()) {
        res.net.save(tcfg.ckpt_path);
        if (!tcfg.disc_ckpt_path.empty()) res.disc.save(tcfg.disc_ckpt_path);
    }
    return res;
}

}  // namespace avi::vinet
