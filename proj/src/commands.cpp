// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "avinpaint/synthbench.hpp"

namespace fs = std::filesystem;

namespace avi::commands {

namespace {

void write_curves_csv(const std::string& path, const std::vector<avnet::CurvePoint>& curve) {
    std::ofstream os(path);
    os << "step,kind,loss\n";
    for (const auto& p : curve) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%d,%s,%.12g\n", p.step, p.kind.c_str(), p.loss);
        os << buf;
    }
    if (!os) throw IoError("failed writing curves: " + path);
}

// Hole-region PSNR: MSE restricted to masked pixels.
double psnr_hole(const Tensor& a, const Tensor& b, const masks::BinaryMask& mask) {
    const long hw = static_cast<long>(mask.h) * mask.w;
    double mse = 0.0;
    long n = 0;
    for (int c = 0; c < a.dim(0); ++c)
        for (long p = 0; p < hw; ++p)
            if (mask.grid[static_cast<size_t>(p)]) {
                const double d = a.data[static_cast<size_t>(c) * hw + p] - b.data[static_cast<size_t>(c) * hw + p];
                mse += d * d;
                ++n;
            }
    if (n == 0) return metrics::kPsnrCap;
    mse /= static_cast<double>(n);
    return mse == 0.0 ? metrics::kPsnrCap : 10.0 * std::log10(1.0 / mse);
}

masks::BinaryMask object_mask_from_avnet(const ClipStore& data, const avnet::AvNet& guider,
                                         const std::string& clip_id) {
    const Tensor frame = avio::prepare_frame_test(data.load_frame_rgb(clip_id, 0));
    const Tensor mel = data.frame_mel(clip_id, 0);
    Tensor mel3({1, mel.dim(0), mel.dim(1)}, mel.data);
    const Tensor v_map = guider.visual_map(frame);
    const Tensor a_emb = guider.audio_embedding(mel3);
    const Tensor att = guider.attention(a_emb, v_map);
    const auto repr = avnet::extract_object_repr(att, v_map, guider.cfg.tau);
    return masks::upsample_nearest(repr.mask, avio::kFrameSize, avio::kFrameSize);
}

}  // namespace

void cmd_synth(const RunConfig& cfg) {
    synth::generate_dataset(cfg.dataset_root, cfg.dataset);
    RunConfig echo = cfg;
    echo.write_echo(cfg.dataset_root);
}

void cmd_masks(const RunConfig& cfg) {
    ClipStore data(cfg.dataset_root);
    const auto refs = data.split(cfg.masks.split);
    if (refs.empty())
        throw InvalidInputError("cmd_masks: split '" + cfg.masks.split + "' is empty");

    std::unique_ptr<avnet::AvNet> guider;
    if (cfg.masks.smask_source == "avnet") {
        if (cfg.avnet_ckpt.empty())
            throw ConfigError("cmd_masks: smask_source=avnet requires avnet_ckpt");
        guider = std::make_unique<avnet::AvNet>(avnet::AvNet::from_checkpoint(cfg.avnet_ckpt, true));
    }

    const fs::path out = fs::path(cfg.out_dir) / "masks";
    const fs::path staging = out.string() + ".staging";
    std::error_code ec;
    fs::remove_all(staging, ec);
    for (size_t i = 0; i < refs.size(); ++i) {
        const auto& ref = refs[i];
        const fs::path dir = staging / ref.id;
        fs::create_directories(dir);
        for (double ratio : cfg.masks.imask_ratios) {
            Rng rng(derive_seed(cfg.seed, "imask-" + ref.id, static_cast<uint64_t>(std::lround(ratio * 1000))));
            const auto m = masks::generate_imask(avio::kFrameSize, avio::kFrameSize, ratio, rng);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "imask_%03d.png", static_cast<int>(std::lround(ratio * 1000)));
            masks::write_mask_png((dir / buf).string(), m);
        }
        masks::BinaryMask object = cfg.masks.smask_source == "avnet"
                                       ? object_mask_from_avnet(data, *guider, ref.id)
                                       : synth::load_ground_truth(data.root(), ref.id).object_masks.at(0);
        masks::write_mask_png((dir / "smask.png").string(), masks::generate_smask(object).mask);
    }
    fs::remove_all(out, ec);
    fs::rename(staging, out);
    RunConfig echo = cfg;
    echo.write_echo(out.string());
}

void cmd_train_avnet(const RunConfig& cfg) {
    ClipStore data(cfg.dataset_root);
    auto result = avnet::train_avnet(data, cfg.avnet_net, cfg.avnet_train);

    fs::create_directories(cfg.out_dir);
    const std::string ckpt = cfg.avnet_ckpt.empty()
                                 ? (fs::path(cfg.out_dir) / "avnet.ckpt").string()
                                 : cfg.avnet_ckpt;
    result.net.save(ckpt);
    avnet::save_pseudo_labels(ckpt + ".labels.json", result.labels);
    write_curves_csv((fs::path(cfg.out_dir) / "avnet_curves.csv").string(), result.curve);
    cfg.write_echo(cfg.out_dir);
}

void cmd_train_vinet(const RunConfig& cfg) {
    if (cfg.avnet_ckpt.empty())
        throw ConfigError("cmd_train_vinet: avnet_ckpt is required (frozen guider)");
    if (!fs::exists(cfg.avnet_ckpt))
        throw ConfigError("cmd_train_vinet: guider checkpoint not found: " + cfg.avnet_ckpt);
    ClipStore data(cfg.dataset_root);
    const avnet::AvNet guider = avnet::AvNet::from_checkpoint(cfg.avnet_ckpt, true);

    fs::create_directories(cfg.out_dir);
    vinet::ViNetConfig net_cfg = cfg.vinet_net;
    net_cfg.audio_c = guider.cfg.c;
    vinet::ViNetTrainConfig tcfg = cfg.vinet_train;
    tcfg.ckpt_path = cfg.vinet_ckpt.empty() ? (fs::path(cfg.out_dir) / "vinet.ckpt").string()
                                            : cfg.vinet_ckpt;
    tcfg.disc_ckpt_path = tcfg.ckpt_path + ".disc";
    if (tcfg.log_csv.empty())
        tcfg.log_csv = (fs::path(cfg.out_dir) / "vinet_train_log.csv").string();

    vinet::train_vinet(data, guider, net_cfg, tcfg);
    cfg.write_echo(cfg.out_dir);
}

masks::BinaryMask eval_mask_for_clip(const ClipStore& data, const std::string& clip_id,
                                     const std::string& mask_type, double imask_ratio,
                                     uint64_t seed) {
    if (mask_type == "imask") {
        Rng rng(derive_seed(seed, "eval-imask-" + clip_id));
        return masks::generate_imask(avio::kFrameSize, avio::kFrameSize, imask_ratio, rng);
    }
    if (mask_type == "smask") {
        const auto gt = synth::load_ground_truth(data.root(), clip_id);
        return masks::generate_smask(gt.object_masks.at(0)).mask;
    }
    throw ConfigError("unknown mask type: " + mask_type);
}

ClipEval evaluate_clip(const ClipStore& data, const avnet::AvNet& guider, const vinet::ViNet& net,
                       const std::string& clip_id, const masks::BinaryMask& mask,
                       bool keep_frames) {
    const int n_frames = data.frame_count(clip_id);
    ClipEval ev;
    double psnr_acc = 0.0, hole_acc = 0.0, ssim_acc = 0.0;
    for (int t = 0; t < n_frames; ++t) {
        const Tensor frame = avio::prepare_frame_test(data.load_frame_rgb(clip_id, t));
        const Tensor mel = data.frame_mel(clip_id, t);
        Tensor mel3({1, mel.dim(0), mel.dim(1)}, mel.data);
        const Tensor a_emb = guider.audio_embedding(mel3);
        const Tensor vhat = net.inpaint(masks::apply_mask(frame, mask), a_emb);
        const Tensor comp = vinet::composite(vhat, frame, mask);
        psnr_acc += metrics::psnr(comp, frame).db;
        hole_acc += psnr_hole(comp, frame, mask);
        ssim_acc += metrics::ssim(comp, frame);
        if (keep_frames) {
            ev.gt_frames.push_back(frame);
            ev.composited.push_back(comp);
        }
    }
    ev.psnr = psnr_acc / n_frames;
    ev.psnr_hole = hole_acc / n_frames;
    ev.ssim = ssim_acc / n_frames;
    return ev;
}

void cmd_inpaint(const RunConfig& cfg, const std::vector<std::string>& clip_ids) {
    if (cfg.avnet_ckpt.empty() || cfg.vinet_ckpt.empty())
        throw ConfigError("cmd_inpaint: avnet_ckpt and vinet_ckpt are required");
    ClipStore data(cfg.dataset_root);
    const avnet::AvNet guider = avnet::AvNet::from_checkpoint(cfg.avnet_ckpt, true);
    const vinet::ViNet net = vinet::ViNet::from_checkpoint(cfg.vinet_ckpt);

    std::vector<std::string> ids = clip_ids;
    if (ids.empty())
        for (const auto& r : data.split(cfg.eval.split)) ids.push_back(r.id);

    const std::string mask_type = cfg.vinet_train.mask_regime == "imask" ? "imask" : "smask";
    for (const auto& id : ids) {
        const auto mask = eval_mask_for_clip(data, id, mask_type, cfg.eval.imask_ratio, cfg.seed);
        const fs::path out_dir = fs::path(cfg.out_dir) / "inpaint" / id;
        const fs::path staging = out_dir.string() + ".staging";
        std::error_code ec;
        fs::remove_all(staging, ec);
        fs::create_directories(staging / "inpainted");
        fs::create_directories(staging / "composited");
        masks::write_mask_png((staging / "mask.png").string(), mask);

        const int n_frames = data.frame_count(id);
        for (int t = 0; t < n_frames; ++t) {
            const Tensor frame = avio::prepare_frame_test(data.load_frame_rgb(id, t));
            const Tensor mel = data.frame_mel(id, t);
            Tensor mel3({1, mel.dim(0), mel.dim(1)}, mel.data);
            const Tensor a_emb = guider.audio_embedding(mel3);
            const Tensor vhat = net.inpaint(masks::apply_mask(frame, mask), a_emb);
            const Tensor comp = vinet::composite(vhat, frame, mask);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%05d.png", t);
            write_png((staging / "inpainted" / buf).string(), tensor_to_image(vhat));
            write_png((staging / "composited" / buf).string(), tensor_to_image(comp));
        }
        fs::remove_all(out_dir, ec);
        fs::create_directories(out_dir.parent_path());
        fs::rename(staging, out_dir);
    }
    RunConfig echo = cfg;
    echo.write_echo((fs::path(cfg.out_dir) / "inpaint").string());
}

metrics::MetricReport cmd_eval(const RunConfig& cfg) {
    if (cfg.avnet_ckpt.empty()) throw ConfigError("cmd_eval: avnet_ckpt is required");
    if (cfg.eval.variants.empty()) throw ConfigError("cmd_eval: no variants configured");
    ClipStore data(cfg.dataset_root);
    const avnet::AvNet guider = avnet::AvNet::from_checkpoint(cfg.avnet_ckpt, true);
    const auto refs = data.split(cfg.eval.split);
    if (refs.empty()) throw InvalidInputError("cmd_eval: split '" + cfg.eval.split + "' is empty");

    metrics::FrameEncoder encoder =
        cfg.eval.feature_extractor == "avnet"
            ? metrics::avnet_encoder(guider)
            : metrics::random_projection_encoder(cfg.eval.extractor_dim, cfg.eval.extractor_seed);

    metrics::MetricReport report;
    report.dataset_id = cfg.dataset_root;
    report.feature_extractor = cfg.eval.feature_extractor;

    for (const auto& variant : cfg.eval.variants) {
        if (!fs::exists(variant.checkpoint))
            throw ConfigError("cmd_eval: missing checkpoint for variant '" + variant.name +
                              "': " + variant.checkpoint);
        const vinet::ViNet net = vinet::ViNet::from_checkpoint(variant.checkpoint);
        for (const auto& mask_type : cfg.eval.mask_types) {
            metrics::VariantMetrics row;
            row.variant = variant.name;
            row.mask_type = mask_type;
            std::vector<Tensor> feats_real, feats_fake;
            double psnr_acc = 0.0, hole_acc = 0.0, ssim_acc = 0.0;
            for (const auto& ref : refs) {
                const auto mask =
                    eval_mask_for_clip(data, ref.id, mask_type, cfg.eval.imask_ratio, cfg.seed);
                ClipEval ev = evaluate_clip(data, guider, net, ref.id, mask, true);
                row.per_clip_psnr[ref.id] = ev.psnr;
                row.per_clip_psnr_hole[ref.id] = ev.psnr_hole;
                row.per_clip_ssim[ref.id] = ev.ssim;
                psnr_acc += ev.psnr;
                hole_acc += ev.psnr_hole;
                ssim_acc += ev.ssim;
                feats_real.push_back(metrics::video_features(ev.gt_frames, encoder));
                feats_fake.push_back(metrics::video_features(ev.composited, encoder));
            }
            row.mean_psnr = psnr_acc / static_cast<double>(refs.size());
            row.mean_psnr_hole = hole_acc / static_cast<double>(refs.size());
            row.mean_ssim = ssim_acc / static_cast<double>(refs.size());
            row.vfid_value = metrics::vfid(feats_real, feats_fake);
            report.rows.push_back(std::move(row));
        }
    }

    fs::create_directories(cfg.out_dir);
    metrics::write_report_json((fs::path(cfg.out_dir) / "metric_report.json").string(), report);
    {
        const fs::path p = fs::path(cfg.out_dir) / "metric_report.txt";
        std::ofstream os(p);
        os << metrics::format_report_table(report);
        if (!os) throw IoError("failed writing report table: " + p.string());
    }
    cfg.write_echo(cfg.out_dir);
    return report;
}

}  // namespace avi::commands
