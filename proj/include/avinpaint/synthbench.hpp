// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "avinpaint/avio.hpp"
#include "avinpaint/masks.hpp"
#include "avinpaint/rng.hpp"

namespace avi::synth {

enum class ShapeKind { circle, square, triangle };

// Class identity deterministically fixes shape, color and tone, making the
// audio a complete label for the sounding object.
inline double class_tone_hz(int class_id) { return 300.0 + 200.0 * class_id; }
ShapeKind class_shape(int class_id);
std::array<double, 3> class_color(int class_id);

struct SceneSpec {
    int class_id = 0;
    ShapeKind shape = ShapeKind::circle;
    std::array<double, 3> color = {1.0, 0.2, 0.2};
    double tone_hz = 300.0;
    // Geometry in the canonical 224x224 frame; `size` is circumradius for
    // circle/triangle and half-side for square.
    std::array<double, 2> start_pos = {80.0, 80.0};
    std::array<double, 2> end_pos = {140.0, 140.0};
    double size = 40.0;
    double duration_s = 2.0;
    uint64_t seed = 0;
    int distractor_class = 1;
    std::array<double, 2> distractor_pos = {40.0, 180.0};
    double distractor_size = 30.0;
    double snr_db = 20.0;
};

struct GroundTruth {
    std::vector<masks::BinaryMask> object_masks;  // 224x224 footprint per frame
    int class_id = 0;
};

// Analytic pixel area of the shape at the canonical resolution.
double shape_area(ShapeKind shape, double size);
double shape_perimeter(ShapeKind shape, double size);

// Deterministic render: the sounding shape translates over a fixed textured
// background with one silent distractor of a different class; audio is the
// class tone plus white noise at spec.snr_db.
std::pair<avio::VideoClip, GroundTruth> generate_scene(const SceneSpec& spec);

struct DatasetOptions {
    int n_classes = 4;
    int clips_per_class = 12;
    uint64_t seed = 0;
    std::array<double, 3> split_fractions = {0.7, 0.1, 0.2};
    double duration_s = 2.0;
    double snr_db = 20.0;
};

// Generates the avio directory layout plus gt_masks/%05d.png and gt.json per
// clip; splits are disjoint and class-stratified. Returns the manifest.
std::vector<avio::ClipRef> generate_dataset(const std::string& root, const DatasetOptions& opts);

GroundTruth load_ground_truth(const std::string& root, const std::string& clip_id);

}  // namespace avi::synth
