// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include <cmath>
#include <filesystem>

#include "avinpaint/avio.hpp"
#include "avinpaint/common.hpp"
#include "avinpaint/wavio.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace avi;
using namespace avi::avio;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> sine(double freq, int n, double amp = 0.5) {
    std::vector<double> s(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        s[static_cast<size_t>(i)] = amp * std::sin(2.0 * kPi * freq * i / kSampleRate);
    return s;
}

// Independent re-derivation of the mel filter centers: 82 edges equally
// spaced on the 2595*log10(1+f/700) scale over 0..8000 Hz.
std::vector<double> oracle_mel_centers() {
    auto to_mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
    auto to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
    const double mel_max = to_mel(8000.0);
    std::vector<double> centers(kMelBins);
    for (int i = 0; i < kMelBins; ++i)
        centers[static_cast<size_t>(i)] = to_hz(mel_max * (i + 1) / (kMelBins + 1));
    return centers;
}

int nearest_center(double hz) {
    const auto centers = oracle_mel_centers();
    int best = 0;
    for (int i = 1; i < kMelBins; ++i)
        if (std::fabs(centers[static_cast<size_t>(i)] - hz) < std::fabs(centers[static_cast<size_t>(best)] - hz))
            best = i;
    return best;
}

}  // namespace

TEST_CASE("compute_log_mel yields exactly 201x80") {
    Rng rng(7);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> seg(16000);
        for (double& v : seg) v = rng.uniform(-1.0, 1.0);
        const Tensor mel = compute_log_mel(seg);
        REQUIRE(mel.rank() == 2);
        CHECK(mel.dim(0) == 201);
        CHECK(mel.dim(1) == 80);
        CHECK(mel.all_finite());
    }
}

TEST_CASE("silence maps to the constant log(epsilon)") {
    const std::vector<double> zeros(16000, 0.0);
    const Tensor mel = compute_log_mel(zeros);
    const double expect = std::log(1e-6);
    for (double v : mel.data) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("440 Hz sine peaks at the mel bin nearest 440 Hz") {
    const Tensor mel = compute_log_mel(sine(440.0, 16000));
    const int expect = nearest_center(440.0);
    // Library centers must agree with the independent derivation.
    const auto lib_centers = mel_center_frequencies();
    const auto ora_centers = oracle_mel_centers();
    for (int i = 0; i < kMelBins; ++i)
        CHECK(lib_centers[static_cast<size_t>(i)] ==
              doctest::Approx(ora_centers[static_cast<size_t>(i)]).epsilon(1e-9));
    // Boundary frames window padded content rather than the pure tone, so the
    // oracle applies to the 197 tone-bearing interior frames.
    for (int t = 2; t < mel.dim(0) - 2; ++t) {
        int arg = 0;
        for (int m = 1; m < kMelBins; ++m)
            if (mel.at2(t, m) > mel.at2(t, arg)) arg = m;
        CHECK(arg == expect);
    }
}

TEST_CASE("amplitude scaling never decreases pre-log mel energies") {
    Rng rng(11);
    std::vector<double> seg(16000);
    for (double& v : seg) v = rng.uniform(-0.4, 0.4);
    std::vector<double> scaled = seg;
    for (double& v : scaled) v *= 1.7;
    const Tensor base = compute_mel_power(seg);
    const Tensor big = compute_mel_power(scaled);
    for (long i = 0; i < base.numel(); ++i)
        CHECK(big.data[static_cast<size_t>(i)] >= base.data[static_cast<size_t>(i)] - 1e-15);
}

TEST_CASE("compute_log_mel rejects wrong lengths") {
    CHECK_THROWS_AS(compute_log_mel(std::vector<double>(15999, 0.0)), InvalidInputError);
    CHECK_THROWS_AS(compute_log_mel(std::vector<double>(16001, 0.0)), InvalidInputError);
}

TEST_CASE("prepare_frame test mode is deterministic and shape-correct") {
    Rng rng(3);
    Tensor img = testing::random_tensor({3, 256, 256}, rng, 0.0, 1.0);
    const Tensor a = prepare_frame_test(img);
    const Tensor b = prepare_frame_test(img);
    REQUIRE(a.shape == std::vector<int>({3, 224, 224}));
    CHECK(a.data == b.data);  // bitwise identical
}

TEST_CASE("constant frames stay constant through preparation") {
    Tensor gray = Tensor::full({3, 224, 224}, 0.5);
    const Tensor out = prepare_frame_test(gray);
    for (double v : out.data) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("train-mode crop offsets replay the seeded generator") {
    // Checkerboard input with distinct values per cell.
    Tensor img({3, 512, 512});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 512; ++y)
            for (int x = 0; x < 512; ++x)
                img.at3(c, y, x) = (((x / 32) + (y / 32)) % 2) ? 0.9 : 0.1;

    const uint64_t seed = 2024;
    Rng rng(seed);
    const Tensor out = prepare_frame(img, PrepMode::train, rng);

    // Replay: the generator draws the row offset, then the column offset.
    Rng replay(seed);
    const int oy = replay.uniform_int(0, 32);
    const int ox = replay.uniform_int(0, 32);
    const Tensor resized = resize_bilinear(img, 256, 256);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 224; ++y)
            for (int x = 0; x < 224; ++x)
                REQUIRE(out.at3(c, y, x) ==
                        doctest::Approx(std::clamp(resized.at3(c, y + oy, x + ox), 0.0, 1.0))
                            .epsilon(1e-12));
}

TEST_CASE("prepare_frame rejects empty images") {
    Rng rng(1);
    CHECK_THROWS_AS(prepare_frame(Tensor({3, 0, 4}), PrepMode::test, rng), InvalidInputError);
}

TEST_CASE("audio segment windows are centered and clamped") {
    VideoClip clip;
    clip.duration_s = 2.0;
    clip.waveform.resize(32000);
    for (int i = 0; i < 32000; ++i) clip.waveform[static_cast<size_t>(i)] = i / 32000.0;

    const auto mid = sample_audio_segment(clip, 1.0);
    REQUIRE(mid.size() == 16000);
    CHECK(mid.front() == doctest::Approx(8000 / 32000.0));
    CHECK(mid.back() == doctest::Approx(23999 / 32000.0));

    const auto lo = sample_audio_segment(clip, 0.0);
    CHECK(lo.front() == doctest::Approx(0.0));
    CHECK(lo.back() == doctest::Approx(15999 / 32000.0));

    VideoClip one;
    one.duration_s = 1.0;
    one.waveform.assign(16000, 0.25);
    const auto whole = sample_audio_segment(one, 0.77);
    CHECK(whole.size() == 16000);

    VideoClip shorty;
    shorty.waveform.assign(15999, 0.0);
    CHECK_THROWS_AS(sample_audio_segment(shorty, 0.5), InvalidInputError);
}

TEST_CASE("manifest round-trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "avi_manifest_test";
    fs::create_directories(dir);
    std::vector<ClipRef> refs = {{"c00_000", "train", 0}, {"c01_000", "test", 1}};
    write_manifest(dir.string(), refs, 2);
    const auto back = read_manifest(dir.string());
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "c00_000");
    CHECK(back[0].split == "train");
    CHECK(back[1].class_id == 1);
    fs::remove_all(dir);
}
