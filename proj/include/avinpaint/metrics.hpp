// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "avinpaint/avnet.hpp"
#include "avinpaint/tensor.hpp"

namespace avi::metrics {

struct PsnrResult {
    double db = 0.0;
    bool capped = false;  // exact match reported as the 100 dB cap
};

inline constexpr double kPsnrCap = 100.0;

PsnrResult psnr(const Tensor& a, const Tensor& b, double max_value = 1.0);

// Luma SSIM, 11x11 Gaussian window sigma 1.5, C1=(0.01)^2, C2=(0.03)^2 for
// unit dynamic range, averaged over valid window positions.
double ssim(const Tensor& a, const Tensor& b);

// Clip-level embedding for VFID: per-frame features averaged over frames.
using FrameEncoder = std::function<Tensor(const Tensor& frame)>;

Tensor video_features(const std::vector<Tensor>& clip_frames, const FrameEncoder& encoder);

// GAP of the guider's visual feature map.
FrameEncoder avnet_encoder(const avnet::AvNet& net);
// Seeded Gaussian random projection of a downsampled frame; network-free.
FrameEncoder random_projection_encoder(int out_dim, uint64_t seed);

// Frechet distance between Gaussian fits of the two feature sets. Each set
// needs >= 2 vectors; tiny negative eigenvalues are clipped at zero.
double vfid(const std::vector<Tensor>& features_real, const std::vector<Tensor>& features_fake);

struct VariantMetrics {
    std::string variant;
    std::string mask_type;
    std::map<std::string, double> per_clip_psnr;
    std::map<std::string, double> per_clip_psnr_hole;
    std::map<std::string, double> per_clip_ssim;
    double mean_psnr = 0.0;
    double mean_psnr_hole = 0.0;
    double mean_ssim = 0.0;
    double vfid_value = 0.0;
};

struct MetricReport {
    std::string dataset_id;
    std::string feature_extractor;
    std::vector<VariantMetrics> rows;
};

void write_report_json(const std::string& path, const MetricReport& report);
std::string format_report_table(const MetricReport& report);

}  // namespace avi::metrics
