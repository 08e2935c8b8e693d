// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include <cmath>
#include <filesystem>

#include "avinpaint/synthbench.hpp"
#include "avinpaint/vinet.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace avi;
using namespace avi::vinet;
namespace fs = std::filesystem;

namespace {

ViNetConfig toy_config() {
    ViNetConfig cfg;
    cfg.audio_c = 4;
    cfg.enc_channels = {4, 6, 8};
    cfg.dec_mid = 4;
    cfg.disc_channels = {4, 6, 8};
    return cfg;
}

const std::string& tiny_dataset() {
    static const std::string root = [] {
        const fs::path dir = fs::temp_directory_path() / "avi_tiny_ds_vinet";
        synth::DatasetOptions opts;
        opts.n_classes = 2;
        opts.clips_per_class = 6;
        opts.seed = 23;
        opts.duration_s = 1.0;
        synth::generate_dataset(dir.string(), opts);
        return dir.string();
    }();
    return root;
}

avnet::AvNet tiny_guider() {
    avnet::AvNetConfig cfg;
    cfg.c = 4;
    cfg.k_classes = 3;
    cfg.vis_hidden = {4, 4, 4};
    cfg.aud_hidden = {4, 4, 4};
    avnet::AvNet net = avnet::AvNet::init(cfg, 77);
    net.frozen = true;
    return net;
}

}  // namespace

TEST_CASE("inpaint obeys the shape and range contract") {
    ViNet net = ViNet::init(toy_config(), 5);
    Rng rng(6);
    Tensor corrupted = testing::random_tensor({4, 224, 224}, rng, 0.0, 1.0);
    Tensor a_emb = testing::random_tensor({4}, rng, -1.0, 1.0);
    const Tensor out = net.inpaint(corrupted, a_emb);
    REQUIRE(out.shape == std::vector<int>({3, 224, 224}));
    for (double v : out.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK_THROWS_AS(net.inpaint(Tensor({3, 224, 224}), a_emb), InvalidInputError);
    CHECK_THROWS_AS(net.inpaint(corrupted, Tensor({7})), InvalidInputError);
}

TEST_CASE("the audio path is live") {
    ViNet net = ViNet::init(toy_config(), 8);
    Rng rng(9);
    Tensor corrupted = testing::random_tensor({4, 32, 32}, rng, 0.0, 1.0);
    Tensor a1 = testing::random_tensor({4}, rng, -1.0, 1.0);
    Tensor a2 = testing::random_tensor({4}, rng, -1.0, 1.0);
    const Tensor o1 = net.inpaint(corrupted, a1);
    const Tensor o2 = net.inpaint(corrupted, a2);
    double diff = 0.0;
    for (long i = 0; i < o1.numel(); ++i)
        diff = std::max(diff, std::fabs(o1.data[static_cast<size_t>(i)] - o2.data[static_cast<size_t>(i)]));
    CHECK(diff > 0.0);
}

TEST_CASE("generator gradients match finite differences") {
    ViNet net = ViNet::init(toy_config(), 10);
    Rng rng(11);
    Tensor corrupted = testing::random_tensor({4, 32, 32}, rng, 0.0, 1.0);
    Tensor a_emb = testing::random_tensor({4}, rng, -1.0, 1.0);
    Tensor target = testing::random_tensor({3, 32, 32}, rng, 0.0, 1.0);

    auto value = [&]() {
        ParamLeaves L(net.params, false);
        auto vhat = net.inpaint_graph(L, ad::constant(corrupted), ad::constant(a_emb));
        return ad::mean_abs_diff(vhat, target)->value.data[0];
    };
    ParamLeaves L(net.params, true);
    auto vhat = net.inpaint_graph(L, ad::constant(corrupted), ad::constant(a_emb));
    auto root = ad::mean_abs_diff(vhat, target);
    ad::backward(root);
    GradStore grads;
    L.collect(grads);

    const auto report = testing::finite_difference_check(
        net.params, value, [&](const std::string& name) { return grads.find(name); });
    CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("composite keeps ground truth outside the mask") {
    Rng rng(12);
    Tensor vhat = testing::random_tensor({3, 16, 16}, rng, 0.0, 1.0);
    Tensor gt = testing::random_tensor({3, 16, 16}, rng, 0.0, 1.0);
    masks::BinaryMask mask(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 8; ++x) mask.at(y, x) = 1;

    const Tensor comp = composite(vhat, gt, mask);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                const double expect = mask.at(y, x) ? vhat.at3(c, y, x) : gt.at3(c, y, x);
                CHECK(comp.at3(c, y, x) == expect);  // bitwise
            }

    masks::BinaryMask zero(16, 16);
    CHECK(composite(vhat, gt, zero).data == gt.data);
    masks::BinaryMask full(16, 16);
    std::fill(full.grid.begin(), full.grid.end(), 1);
    CHECK(composite(vhat, gt, full).data == vhat.data);
}

TEST_CASE("reconstruction L1 fixtures") {
    Rng rng(13);
    Tensor a = testing::random_tensor({3, 8, 8}, rng, 0.0, 0.9);
    CHECK(reconstruction_l1(a, a) == 0.0);

    Tensor b = a;
    for (double& v : b.data) v += 0.1;
    CHECK(reconstruction_l1(b, a) == doctest::Approx(0.1).epsilon(1e-12));

    Tensor c = testing::random_tensor({3, 8, 8}, rng, 0.0, 1.0);
    double oracle = 0.0;
    for (long i = 0; i < a.numel(); ++i)
        oracle += std::fabs(a.data[static_cast<size_t>(i)] - c.data[static_cast<size_t>(i)]);
    oracle /= a.numel();
    CHECK(reconstruction_l1(a, c) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("hinge losses at zero scores and saturation") {
    ViNetConfig cfg = toy_config();
    Discriminator disc = Discriminator::init(cfg, 14);
    for (auto& [name, t] : disc.params.items()) std::fill(t.data.begin(), t.data.end(), 0.0);

    Rng rng(15);
    std::vector<Tensor> real, fake;
    for (int t = 0; t < 4; ++t) {
        real.push_back(testing::random_tensor({3, 32, 32}, rng, 0.0, 1.0));
        fake.push_back(testing::random_tensor({3, 32, 32}, rng, 0.0, 1.0));
    }
    auto [gen0, disc0] = adversarial_losses(real, fake, disc);
    CHECK(disc0 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(gen0 == doctest::Approx(0.0).epsilon(1e-12));

    // Pass-through discriminator: every layer keeps the center tap of input
    // channel 0, so the patch scores follow the input sign. Strongly positive
    // reals and negative fakes then saturate both hinge terms to zero.
    auto passthrough = [&](const char* w, double gain) {
        Tensor& t = disc.params.at(w);
        std::fill(t.data.begin(), t.data.end(), 0.0);
        // center tap of kernel (1,1,1) on in-channel 0 for out-channel 0
        const int kt = t.dim(2), kh = t.dim(3), kw = t.dim(4);
        const long center = ((0L * t.dim(1) + 0) * kt + kt / 2) * kh * kw + (kh / 2) * kw + kw / 2;
        t.data[static_cast<size_t>(center)] = gain;
    };
    passthrough("c0.w", 1.0);
    passthrough("c1.w", 1.0);
    passthrough("c2.w", 1.0);
    passthrough("out.w", 1000.0);

    std::vector<Tensor> pos, neg;
    for (int t = 0; t < 4; ++t) {
        pos.push_back(Tensor::full({3, 32, 32}, 3.0));
        neg.push_back(Tensor::full({3, 32, 32}, -3.0));
    }
    auto [gen_sat, disc_sat] = adversarial_losses(pos, neg, disc);
    CHECK(disc_sat == doctest::Approx(0.0).epsilon(1e-9));

    // Generator loss decreases as fake scores increase.
    double prev = 1e300;
    for (double level : {-2.0, -0.5, 0.5, 2.0}) {
        std::vector<Tensor> fakes(4, Tensor::full({3, 32, 32}, level));
        auto [g, d] = adversarial_losses(pos, fakes, disc);
        CHECK(g < prev);
        prev = g;
    }

    CHECK_THROWS_AS(adversarial_losses({real[0]}, {fake[0]}, disc), InvalidInputError);
}

TEST_CASE("vinet training is deterministic and leaves the guider untouched") {
    ClipStore data(tiny_dataset());
    const avnet::AvNet guider = tiny_guider();
    const uint64_t guider_hash = guider.params.content_hash();

    ViNetConfig cfg = toy_config();
    ViNetTrainConfig tcfg;
    tcfg.steps = 3;
    tcfg.t_window = 3;
    tcfg.seed = 1001;
    tcfg.mask_regime = "smask";

    const auto a = train_vinet(data, guider, cfg, tcfg);
    const auto b = train_vinet(data, guider, cfg, tcfg);
    CHECK(guider.params.content_hash() == guider_hash);
    REQUIRE(a.log.size() == b.log.size());
    for (size_t i = 0; i < a.log.size(); ++i) {
        CHECK(std::fabs(a.log[i].second.total - b.log[i].second.total) < 1e-6);
        // Bundle identity at every logged step.
        const auto& bd = a.log[i].second;
        CHECK(bd.total == doctest::Approx(tcfg.weights.l1 * bd.l1 + tcfg.weights.adv * bd.adv +
                                          tcfg.weights.att_av * bd.att_av +
                                          tcfg.weights.cls_av * bd.cls_av)
                              .epsilon(1e-9));
    }
    CHECK(a.net.params.content_hash() == b.net.params.content_hash());
}

TEST_CASE("zeroed guidance weights reproduce the audio-free objective") {
    ClipStore data(tiny_dataset());
    const avnet::AvNet guider = tiny_guider();

    ViNetConfig cfg = toy_config();
    ViNetTrainConfig tcfg;
    tcfg.steps = 2;
    tcfg.t_window = 2;
    tcfg.seed = 2002;
    tcfg.weights.att_av = 0.0;
    tcfg.weights.cls_av = 0.0;

    const auto res = train_vinet(data, guider, cfg, tcfg);
    for (const auto& [step, bd] : res.log) {
        // Reported but unweighted.
        CHECK(bd.att_av > 0.0);
        CHECK(bd.cls_av > 0.0);
        CHECK(bd.total == doctest::Approx(tcfg.weights.l1 * bd.l1 + tcfg.weights.adv * bd.adv)
                              .epsilon(1e-9));
    }
}

TEST_CASE("warm start restores parameters and validates architecture") {
    ClipStore data(tiny_dataset());
    const avnet::AvNet guider = tiny_guider();

    ViNetConfig cfg = toy_config();
    ViNetTrainConfig tcfg;
    tcfg.steps = 1;
    tcfg.t_window = 2;
    tcfg.seed = 3003;
    const fs::path ckpt = fs::temp_directory_path() / "avi_warm.ckpt";
    tcfg.ckpt_path = ckpt.string();

    const auto first = train_vinet(data, guider, cfg, tcfg);

    ViNetTrainConfig warm = tcfg;
    warm.warm_start = ckpt.string();
    warm.ckpt_path.clear();
    const auto second = train_vinet(data, guider, cfg, warm);
    // One more step moved the parameters away from the warm-start point.
    CHECK(second.net.params.content_hash() != first.net.params.content_hash());

    ViNetConfig other = cfg;
    other.enc_channels = {6, 8, 10};
    CHECK_THROWS_AS(train_vinet(data, guider, other, warm), ConfigError);
    fs::remove(ckpt);

    avnet::AvNet thawed = tiny_guider();
    thawed.frozen = false;
    CHECK_THROWS_AS(train_vinet(data, thawed, cfg, tcfg), ConfigError);
}
