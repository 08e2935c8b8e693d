// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "avinpaint/image.hpp"
#include "json.hpp"

namespace avi::metrics {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> gaussian_kernel() {
    std::vector<double> k(kWin);
    const int half = kWin / 2;
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - half;
        k[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += k[static_cast<size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

// Separable valid-mode filtering of an (H,W) plane.
Tensor filter_valid(const Tensor& img, const std::vector<double>& k) {
    const int h = img.dim(0), w = img.dim(1);
    const int oh = h - kWin + 1, ow = w - kWin + 1;
    Tensor tmp({h, ow});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWin; ++i) s += k[static_cast<size_t>(i)] * img.at2(y, x + i);
            tmp.at2(y, x) = s;
        }
    Tensor out({oh, ow});
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWin; ++i) s += k[static_cast<size_t>(i)] * tmp.at2(y + i, x);
            out.at2(y, x) = s;
        }
    return out;
}

Tensor luma(const Tensor& rgb) {
    if (rgb.rank() != 3) throw InvalidInputError("ssim: expected (C,H,W)");
    const int h = rgb.dim(1), w = rgb.dim(2);
    Tensor y({h, w});
    if (rgb.dim(0) == 1) {
        std::copy(rgb.data.begin(), rgb.data.end(), y.data.begin());
        return y;
    }
    if (rgb.dim(0) != 3) throw InvalidInputError("ssim: expected 1 or 3 channels");
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
            y.at2(yy, xx) = 0.299 * rgb.at3(0, yy, xx) + 0.587 * rgb.at3(1, yy, xx) +
                            0.114 * rgb.at3(2, yy, xx);
    return y;
}

}  // namespace

PsnrResult psnr(const Tensor& a, const Tensor& b, double max_value) {
    if (!a.same_shape(b)) throw InvalidInputError("psnr: shape mismatch");
    double mse = 0.0;
    for (long i = 0; i < a.numel(); ++i) {
        const double d = a.data[static_cast<size_t>(i)] - b.data[static_cast<size_t>(i)];
        mse += d * d;
    }
    mse /= static_cast<double>(a.numel());
    PsnrResult r;
    if (mse == 0.0) {
        r.db = kPsnrCap;
        r.capped = true;
        return r;
    }
    r.db = 10.0 * std::log10(max_value * max_value / mse);
    return r;
}

double ssim(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw InvalidInputError("ssim: shape mismatch");
    const Tensor xa = luma(a);
    const Tensor xb = luma(b);
    if (xa.dim(0) < kWin || xa.dim(1) < kWin)
        throw InvalidInputError("ssim: frame smaller than the 11x11 window");

    static const std::vector<double> k = gaussian_kernel();
    Tensor xa2 = xa, xb2 = xb, xab = xa;
    for (long i = 0; i < xa.numel(); ++i) {
        xa2.data[static_cast<size_t>(i)] = xa.data[static_cast<size_t>(i)] * xa.data[static_cast<size_t>(i)];
        xb2.data[static_cast<size_t>(i)] = xb.data[static_cast<size_t>(i)] * xb.data[static_cast<size_t>(i)];
        xab.data[static_cast<size_t>(i)] = xa.data[static_cast<size_t>(i)] * xb.data[static_cast<size_t>(i)];
    }
    const Tensor mu_a = filter_valid(xa, k);
    const Tensor mu_b = filter_valid(xb, k);
    const Tensor m_a2 = filter_valid(xa2, k);
    const Tensor m_b2 = filter_valid(xb2, k);
    const Tensor m_ab = filter_valid(xab, k);

    double acc = 0.0;
    for (long i = 0; i < mu_a.numel(); ++i) {
        const size_t s = static_cast<size_t>(i);
        const double ma = mu_a.data[s], mb = mu_b.data[s];
        const double va = m_a2.data[s] - ma * ma;
        const double vb = m_b2.data[s] - mb * mb;
        const double cov = m_ab.data[s] - ma * mb;
        acc += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
               ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
    }
    return acc / static_cast<double>(mu_a.numel());
}

Tensor video_features(const std::vector<Tensor>& clip_frames, const FrameEncoder& encoder) {
    if (clip_frames.empty()) throw InvalidInputError("video_features: empty clip");
    Tensor acc;
    for (const auto& f : clip_frames) {
        Tensor e = encoder(f);
        if (acc.numel() == 0)
            acc = std::move(e);
        else
            for (long i = 0; i < acc.numel(); ++i)
                acc.data[static_cast<size_t>(i)] += e.data[static_cast<size_t>(i)];
    }
    for (double& v : acc.data) v /= static_cast<double>(clip_frames.size());
    return acc;
}

FrameEncoder avnet_encoder(const avnet::AvNet& net) {
    return [&net](const Tensor& frame) {
        const Tensor v_map = net.visual_map(frame);
        const int c = v_map.dim(0);
        const long hw = static_cast<long>(v_map.dim(1)) * v_map.dim(2);
        Tensor out({c});
        for (int ci = 0; ci < c; ++ci) {
            double s = 0.0;
            for (long p = 0; p < hw; ++p) s += v_map.data[static_cast<size_t>(ci) * hw + p];
            out.data[static_cast<size_t>(ci)] = s / static_cast<double>(hw);
        }
        return out;
    };
}

FrameEncoder random_projection_encoder(int out_dim, uint64_t seed) {
    // Fixed projection matrix over a 28x28 grayscale thumbnail.
    const int side = 28;
    auto proj = std::make_shared<Tensor>(Tensor({out_dim, side * side}));
    Rng rng(derive_seed(seed, "random-projection"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(side * side));
    for (double& v : proj->data) v = rng.normal(0.0, scale);
    return [proj, out_dim, side](const Tensor& frame) {
        const Tensor small = resize_bilinear(frame, side, side);
        Tensor gray({side * side});
        const long hw = static_cast<long>(side) * side;
        for (long p = 0; p < hw; ++p) {
            double s = 0.0;
            for (int c = 0; c < small.dim(0); ++c) s += small.data[static_cast<size_t>(c) * hw + p];
            gray.data[static_cast<size_t>(p)] = s / small.dim(0);
        }
        Tensor out({out_dim});
        for (int i = 0; i < out_dim; ++i) {
            double s = 0.0;
            const double* row = proj->data.data() + static_cast<size_t>(i) * hw;
            for (long p = 0; p < hw; ++p) s += row[p] * gray.data[static_cast<size_t>(p)];
            out.data[static_cast<size_t>(i)] = s;
        }
        return out;
    };
}

double vfid(const std::vector<Tensor>& features_real, const std::vector<Tensor>& features_fake) {
    if (features_real.size() < 2 || features_fake.size() < 2)
        throw InvalidInputError("vfid: each feature set needs at least 2 vectors");
    const long d = features_real[0].numel();
    for (const auto& f : features_real)
        if (f.numel() != d) throw InvalidInputError("vfid: inconsistent feature dimensions");
    for (const auto& f : features_fake)
        if (f.numel() != d) throw InvalidInputError("vfid: inconsistent feature dimensions");

    using Mat = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;
    auto fit = [d](const std::vector<Tensor>& set, Vec& mu, Mat& sigma) {
        const long n = static_cast<long>(set.size());
        mu = Vec::Zero(d);
        for (const auto& f : set)
            mu += Eigen::Map<const Vec>(f.data.data(), d);
        mu /= static_cast<double>(n);
        sigma = Mat::Zero(d, d);
        for (const auto& f : set) {
            const Vec c = Eigen::Map<const Vec>(f.data.data(), d) - mu;
            sigma += c * c.transpose();
        }
        sigma /= static_cast<double>(n - 1);
    };

    Vec mu1, mu2;
    Mat s1, s2;
    fit(features_real, mu1, s1);
    fit(features_fake, mu2, s2);

    // Tr((S1 S2)^{1/2}) via the symmetric form sqrt(S1) S2 sqrt(S1).
    Eigen::SelfAdjointEigenSolver<Mat> es1(s1);
    Vec ev1 = es1.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const Mat sqrt_s1 = es1.eigenvectors() * ev1.asDiagonal() * es1.eigenvectors().transpose();
    const Mat inner = sqrt_s1 * s2 * sqrt_s1;
    Eigen::SelfAdjointEigenSolver<Mat> es2(0.5 * (inner + inner.transpose()));
    const double tr_sqrt = es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    const double dist = (mu1 - mu2).squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
    return std::max(dist, 0.0);
}

void write_report_json(const std::string& path, const MetricReport& report) {
    nlohmann::json j;
    j["dataset_id"] = report.dataset_id;
    j["feature_extractor"] = report.feature_extractor;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json e;
        e["variant"] = r.variant;
        e["mask_type"] = r.mask_type;
        e["mean_psnr"] = r.mean_psnr;
        e["mean_psnr_hole"] = r.mean_psnr_hole;
        e["mean_ssim"] = r.mean_ssim;
        e["vfid"] = r.vfid_value;
        e["per_clip_psnr"] = r.per_clip_psnr;
        e["per_clip_psnr_hole"] = r.per_clip_psnr_hole;
        e["per_clip_ssim"] = r.per_clip_ssim;
        j["rows"].push_back(e);
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp);
        os << j.dump(2) << "\n";
        if (!os) throw IoError("failed writing metric report: " + path);
    }
    std::rename(tmp.c_str(), path.c_str());
}

std::string format_report_table(const MetricReport& report) {
    // Rows are method variants, metric columns grouped per mask type.
    std::vector<std::string> mask_types;
    std::vector<std::string> variants;
    for (const auto& r : report.rows) {
        if (std::find(mask_types.begin(), mask_types.end(), r.mask_type) == mask_types.end())
            mask_types.push_back(r.mask_type);
        if (std::find(variants.begin(), variants.end(), r.variant) == variants.end())
            variants.push_back(r.variant);
    }
    std::ostringstream os;
    os << "method";
    for (const auto& m : mask_types)
        os << " | " << m << ": PSNR^ SSIM^ VFID.";
    os << "\n";
    for (const auto& v : variants) {
        os << v;
        for (const auto& m : mask_types) {
            const VariantMetrics* found = nullptr;
            for (const auto& r : report.rows)
                if (r.variant == v && r.mask_type == m) found = &r;
            if (found) {
                char buf[96];
                std::snprintf(buf, sizeof(buf), " | %.2f %.4f %.4f", found->mean_psnr,
                              found->mean_ssim, found->vfid_value);
                os << buf;
            } else {
                os << " | - - -";
            }
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace avi::metrics
