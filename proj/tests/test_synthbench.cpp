// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include <cmath>
#include <filesystem>
#include <queue>

#include "avinpaint/avio.hpp"
#include "avinpaint/common.hpp"
#include "avinpaint/synthbench.hpp"
#include "doctest.h"

using namespace avi;
using namespace avi::synth;
namespace fs = std::filesystem;

namespace {

SceneSpec basic_spec() {
    SceneSpec s;
    s.class_id = 1;
    s.shape = class_shape(1);
    s.color = class_color(1);
    s.tone_hz = class_tone_hz(1);  // 500 Hz
    s.start_pos = {80.0, 70.0};
    s.end_pos = {120.0, 130.0};
    s.size = 35.0;
    s.duration_s = 1.0;
    s.seed = 31;
    s.distractor_class = 3;
    s.distractor_pos = {180.0, 40.0};
    s.distractor_size = 28.0;
    return s;
}

bool connected(const masks::BinaryMask& m) {
    const long total = m.count();
    if (total == 0) return false;
    std::vector<uint8_t> seen(m.grid.size(), 0);
    std::queue<std::pair<int, int>> q;
    for (int y = 0; y < m.h && q.empty(); ++y)
        for (int x = 0; x < m.w && q.empty(); ++x)
            if (m.at(y, x)) {
                q.emplace(y, x);
                seen[static_cast<size_t>(y) * m.w + x] = 1;
            }
    long reached = 0;
    while (!q.empty()) {
        auto [y, x] = q.front();
        q.pop();
        ++reached;
        const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
        for (int d = 0; d < 4; ++d) {
            const int ny = y + dy[d], nx = x + dx[d];
            if (ny < 0 || ny >= m.h || nx < 0 || nx >= m.w) continue;
            if (!m.at(ny, nx) || seen[static_cast<size_t>(ny) * m.w + nx]) continue;
            seen[static_cast<size_t>(ny) * m.w + nx] = 1;
            q.emplace(ny, nx);
        }
    }
    return reached == total;
}

}  // namespace

TEST_CASE("generate_scene is bitwise deterministic") {
    const SceneSpec spec = basic_spec();
    auto [clip_a, gt_a] = generate_scene(spec);
    auto [clip_b, gt_b] = generate_scene(spec);
    REQUIRE(clip_a.frames.size() == clip_b.frames.size());
    for (size_t i = 0; i < clip_a.frames.size(); ++i)
        CHECK(clip_a.frames[i].data == clip_b.frames[i].data);
    CHECK(clip_a.waveform == clip_b.waveform);
    for (size_t i = 0; i < gt_a.object_masks.size(); ++i)
        CHECK(gt_a.object_masks[i].grid == gt_b.object_masks[i].grid);
}

TEST_CASE("scene audio peaks at the class tone's mel bin") {
    SceneSpec spec = basic_spec();  // 500 Hz
    auto [clip, gt] = generate_scene(spec);
    const auto seg = avio::sample_audio_segment(clip.waveform, 0.5);
    const Tensor mel = avio::compute_log_mel(seg);

    const auto centers = avio::mel_center_frequencies();
    int expect = 0;
    for (int i = 1; i < avio::kMelBins; ++i)
        if (std::fabs(centers[static_cast<size_t>(i)] - 500.0) <
            std::fabs(centers[static_cast<size_t>(expect)] - 500.0))
            expect = i;
    for (int t = 2; t < mel.dim(0) - 2; ++t) {  // interior, tone-bearing frames
        int arg = 0;
        for (int m = 1; m < avio::kMelBins; ++m)
            if (mel.at2(t, m) > mel.at2(t, arg)) arg = m;
        CHECK(arg == expect);
    }
}

TEST_CASE("object mask area matches the analytic shape area") {
    for (ShapeKind shape : {ShapeKind::circle, ShapeKind::square, ShapeKind::triangle}) {
        SceneSpec spec = basic_spec();
        spec.shape = shape;
        spec.size = 40.0;
        spec.start_pos = spec.end_pos = {112.0, 112.0};
        auto [clip, gt] = generate_scene(spec);
        const double area = shape_area(shape, spec.size);
        const double perim = shape_perimeter(shape, spec.size);
        const double count = static_cast<double>(gt.object_masks[0].count());
        CHECK(std::fabs(count - area) <= perim);
    }
}

TEST_CASE("mask interior pixels carry the shape color in prepared frames") {
    SceneSpec spec = basic_spec();
    auto [clip, gt] = generate_scene(spec);
    for (size_t f = 0; f < clip.frames.size(); f += 4) {
        const Tensor prepared = avio::prepare_frame_test(image_to_tensor(clip.frames[f]));
        masks::BinaryMask interior = masks::erode3x3(masks::erode3x3(gt.object_masks[f]));
        for (int y = 0; y < interior.h; ++y)
            for (int x = 0; x < interior.w; ++x) {
                if (!interior.at(y, x)) continue;
                for (int c = 0; c < 3; ++c)
                    CHECK(std::fabs(prepared.at3(c, y, x) - spec.color[static_cast<size_t>(c)]) < 0.03);
            }
    }
}

TEST_CASE("ground-truth masks are nonempty and connected") {
    auto [clip, gt] = generate_scene(basic_spec());
    for (const auto& m : gt.object_masks) {
        CHECK(m.count() > 0);
        CHECK(connected(m));
    }
}

TEST_CASE("class tones stay at least 150 Hz apart and identities are bijective") {
    for (int i = 0; i < 10; ++i) {
        for (int j = i + 1; j < 10; ++j) {
            CHECK(std::fabs(class_tone_hz(i) - class_tone_hz(j)) >= 150.0);
            const bool same_visual = class_shape(i) == class_shape(j) && class_color(i) == class_color(j);
            CHECK_FALSE(same_visual);
        }
        CHECK(class_tone_hz(i) < 8000.0);
    }
}

TEST_CASE("motion paths leaving the canvas are rejected") {
    SceneSpec spec = basic_spec();
    spec.end_pos = {220.0, 220.0};
    CHECK_THROWS_AS(generate_scene(spec), InvalidInputError);
}

TEST_CASE("generate_dataset stratifies splits and reproduces manifests") {
    const fs::path root = fs::temp_directory_path() / "avi_synth_ds";
    DatasetOptions opts;
    opts.n_classes = 10;
    opts.clips_per_class = 10;
    opts.seed = 5;
    opts.duration_s = 0.25;  // 2 frames per clip keeps this test fast

    const auto manifest = generate_dataset(root.string(), opts);
    CHECK(manifest.size() == 100);
    for (int k = 0; k < 10; ++k) {
        int tr = 0, va = 0, te = 0;
        for (const auto& r : manifest)
            if (r.class_id == k) {
                if (r.split == "train") ++tr;
                if (r.split == "val") ++va;
                if (r.split == "test") ++te;
            }
        CHECK(tr == 7);
        CHECK(va == 1);
        CHECK(te == 2);
    }

    const fs::path root2 = fs::temp_directory_path() / "avi_synth_ds2";
    const auto manifest2 = generate_dataset(root2.string(), opts);
    REQUIRE(manifest.size() == manifest2.size());
    for (size_t i = 0; i < manifest.size(); ++i) {
        CHECK(manifest[i].id == manifest2[i].id);
        CHECK(manifest[i].split == manifest2[i].split);
    }

    // The written layout is loadable.
    const auto back = avio::read_manifest(root.string());
    CHECK(back.size() == 100);
    const auto clip = avio::load_clip(root.string(), back[0].id);
    CHECK(clip.frames.size() == 2);
    CHECK(clip.waveform.size() == 4000);
    const auto gt = load_ground_truth(root.string(), back[0].id);
    CHECK(gt.object_masks.size() == 2);

    fs::remove_all(root);
    fs::remove_all(root2);
}

TEST_CASE("generate_dataset validates preconditions") {
    DatasetOptions opts;
    opts.n_classes = 11;
    CHECK_THROWS_AS(generate_dataset("/tmp/should_not_exist_a", opts), InvalidInputError);
    opts.n_classes = 4;
    opts.clips_per_class = 2;
    CHECK_THROWS_AS(generate_dataset("/tmp/should_not_exist_b", opts), InvalidInputError);
    opts.clips_per_class = 3;  // 70/10/20 of 3 cannot give every split a clip
    CHECK_THROWS_AS(generate_dataset("/tmp/should_not_exist_c", opts), InvalidInputError);
}
