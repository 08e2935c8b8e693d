// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include <Eigen/Dense>

#include <cmath>

#include "avinpaint/metrics.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace avi;
using namespace avi::metrics;

TEST_CASE("psnr fixtures") {
    Rng rng(3);
    Tensor a = testing::random_tensor({3, 16, 16}, rng, 0.0, 1.0);

    const auto self = psnr(a, a);
    CHECK(self.capped);
    CHECK(self.db == kPsnrCap);

    // Uniform error of 0.1 gives MSE 0.01 and exactly 20 dB.
    Tensor b = a;
    for (double& v : b.data) v += 0.1;
    const auto r = psnr(b, a);
    CHECK_FALSE(r.capped);
    CHECK(std::fabs(r.db - 20.0) < 1e-9);

    // Mixed-signs error with MSE 0.01 gives the same closed form.
    Tensor c = a;
    for (long i = 0; i < c.numel(); ++i)
        c.data[static_cast<size_t>(i)] += (i % 2 ? 0.1 : -0.1);
    CHECK(std::fabs(psnr(c, a).db - 20.0) < 1e-9);

    CHECK_THROWS_AS(psnr(a, Tensor({3, 8, 8})), InvalidInputError);
}

TEST_CASE("psnr strictly decreases with noise amplitude") {
    Rng rng(4);
    Tensor base = testing::random_tensor({3, 32, 32}, rng, 0.2, 0.8);
    Tensor noise = testing::random_tensor({3, 32, 32}, rng, -1.0, 1.0);
    double prev = 1e300;
    for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
        Tensor noisy = base;
        for (long i = 0; i < noisy.numel(); ++i)
            noisy.data[static_cast<size_t>(i)] += amp * noise.data[static_cast<size_t>(i)];
        const double db = psnr(noisy, base).db;
        CHECK(db < prev);
        prev = db;
    }
}

TEST_CASE("ssim fixtures") {
    Rng rng(5);
    Tensor a = testing::random_tensor({3, 32, 32}, rng, 0.0, 1.0);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    Tensor b = testing::random_tensor({3, 32, 32}, rng, 0.0, 1.0);
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));

    // Constant frames 0 vs 1: closed form C1/(1+C1).
    Tensor zeros = Tensor::zeros({3, 16, 16});
    Tensor ones = Tensor::full({3, 16, 16}, 1.0);
    const double c1 = 0.01 * 0.01;
    CHECK(ssim(zeros, ones) == doctest::Approx(c1 / (1.0 + c1)).epsilon(1e-9));

    CHECK_THROWS_AS(ssim(Tensor({3, 8, 8}), Tensor({3, 8, 8})), InvalidInputError);
}

TEST_CASE("video features are deterministic means over frames") {
    // Hand oracle on a 2-frame toy clip with a mean-per-channel encoder.
    Tensor f1 = Tensor::full({3, 4, 4}, 0.25);
    Tensor f2 = Tensor::full({3, 4, 4}, 0.75);
    f2.at3(1, 0, 0) = 0.75;  // keep it constant per channel

    FrameEncoder mean_encoder = [](const Tensor& f) {
        Tensor out({3});
        const long hw = static_cast<long>(f.dim(1)) * f.dim(2);
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (long p = 0; p < hw; ++p) s += f.data[static_cast<size_t>(c) * hw + p];
            out.data[static_cast<size_t>(c)] = s / hw;
        }
        return out;
    };
    const Tensor feat = video_features({f1, f2}, mean_encoder);
    REQUIRE(feat.numel() == 3);
    for (int c = 0; c < 3; ++c) CHECK(feat.data[static_cast<size_t>(c)] == doctest::Approx(0.5));

    // Random projection extractor: deterministic, fixed length.
    FrameEncoder rp = random_projection_encoder(16, 99);
    const Tensor e1 = rp(f1);
    const Tensor e2 = rp(f1);
    CHECK(e1.numel() == 16);
    CHECK(e1.data == e2.data);

    CHECK_THROWS_AS(video_features({}, rp), InvalidInputError);
}

TEST_CASE("vfid closed-form Gaussian fixtures") {
    Rng rng(6);
    // Identical sets -> 0.
    std::vector<Tensor> set;
    for (int i = 0; i < 32; ++i) set.push_back(testing::random_tensor({5}, rng));
    CHECK(vfid(set, set) <= 1e-6);

    // 1-D N(0,1) vs N(1,1) -> 1.0; N(0,1) vs N(0,4) -> (1+4-2*2) = 1.0.
    std::vector<Tensor> n01, n11, n04;
    for (int i = 0; i < 10000; ++i) {
        n01.push_back(Tensor({1}, {rng.normal(0.0, 1.0)}));
        n11.push_back(Tensor({1}, {rng.normal(1.0, 1.0)}));
        n04.push_back(Tensor({1}, {rng.normal(0.0, 2.0)}));
    }
    CHECK(vfid(n01, n11) == doctest::Approx(1.0).epsilon(0.05));
    CHECK(vfid(n01, n04) == doctest::Approx(1.0).epsilon(0.05));

    CHECK_THROWS_AS(vfid({Tensor({1}, {0.0})}, n01), InvalidInputError);
}

TEST_CASE("vfid is rotation invariant and nonnegative") {
    Rng rng(7);
    const int d = 6;
    std::vector<Tensor> a, b;
    for (int i = 0; i < 64; ++i) {
        a.push_back(testing::random_tensor({d}, rng, -1.0, 1.0));
        b.push_back(testing::random_tensor({d}, rng, -0.5, 1.5));
    }
    const double base = vfid(a, b);
    CHECK(base >= 0.0);

    // Random orthogonal rotation applied to both sets.
    Eigen::MatrixXd m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal(0.0, 1.0);
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
    auto rotate = [&](const std::vector<Tensor>& set) {
        std::vector<Tensor> out;
        for (const auto& t : set) {
            const Eigen::VectorXd v = q * Eigen::Map<const Eigen::VectorXd>(t.data.data(), d);
            Tensor r({d});
            for (int i = 0; i < d; ++i) r.data[static_cast<size_t>(i)] = v(i);
            out.push_back(std::move(r));
        }
        return out;
    };
    CHECK(vfid(rotate(a), rotate(b)) == doctest::Approx(base).epsilon(1e-8));
}

TEST_CASE("report table lists one row per variant and mask type") {
    MetricReport report;
    report.dataset_id = "synth";
    report.feature_extractor = "avnet";
    for (const char* variant : {"neither", "cls_only", "att_only", "both"}) {
        for (const char* mask : {"imask", "smask"}) {
            VariantMetrics row;
            row.variant = variant;
            row.mask_type = mask;
            row.mean_psnr = 30.0;
            row.mean_ssim = 0.9;
            row.vfid_value = 1.0;
            report.rows.push_back(row);
        }
    }
    const std::string table = format_report_table(report);
    CHECK(table.find("neither") != std::string::npos);
    CHECK(table.find("both") != std::string::npos);
    CHECK(table.find("imask") != std::string::npos);
    CHECK(table.find("smask") != std::string::npos);
}
