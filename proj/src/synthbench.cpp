// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "avinpaint/common.hpp"
#include "avinpaint/wavio.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace avi::synth {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kCanvas = avio::kFrameSize;   // canonical geometry space
constexpr int kRender = avio::kResizeSize;  // stored frame resolution

// Point-in-shape test in canonical coordinates.
bool inside_shape(ShapeKind shape, double cy, double cx, double size, double y, double x) {
    const double dy = y - cy, dx = x - cx;
    switch (shape) {
        case ShapeKind::circle:
            return dy * dy + dx * dx <= size * size;
        case ShapeKind::square:
            return std::fabs(dy) <= size && std::fabs(dx) <= size;
        case ShapeKind::triangle: {
            // Equilateral, apex up, circumradius = size.
            const double y0 = -size;           // apex
            const double y1 = size * 0.5;      // base
            if (dy < y0 || dy > y1) return false;
            const double half_width = (dy - y0) / (y1 - y0) * size * std::sqrt(3.0) * 0.5;
            return std::fabs(dx) <= half_width;
        }
    }
    return false;
}

// Fixed background texture, evaluated in canonical coordinates so every
// clip shares the same scene backdrop.
std::array<double, 3> background(double y, double x) {
    const double r = 0.32 + 0.08 * std::sin(2.0 * kPi * x / 64.0) * std::sin(2.0 * kPi * y / 48.0);
    const double g = 0.34 + 0.08 * std::sin(2.0 * kPi * x / 40.0 + 1.0) * std::cos(2.0 * kPi * y / 56.0);
    const double b = 0.30 + 0.06 * std::cos(2.0 * kPi * x / 52.0 + 0.5);
    return {r, g, b};
}

std::array<double, 2> center_at(const SceneSpec& spec, double t_frac) {
    return {spec.start_pos[0] + (spec.end_pos[0] - spec.start_pos[0]) * t_frac,
            spec.start_pos[1] + (spec.end_pos[1] - spec.start_pos[1]) * t_frac};
}

double shape_extent(ShapeKind shape, double size) {
    switch (shape) {
        case ShapeKind::circle: return size;
        case ShapeKind::square: return size * std::sqrt(2.0);
        case ShapeKind::triangle: return size;
    }
    return size;
}

nlohmann::json spec_to_json(const SceneSpec& s) {
    nlohmann::json j;
    j["class_id"] = s.class_id;
    j["shape"] = static_cast<int>(s.shape);
    j["color"] = s.color;
    j["tone_hz"] = s.tone_hz;
    j["start_pos"] = s.start_pos;
    j["end_pos"] = s.end_pos;
    j["size"] = s.size;
    j["duration_s"] = s.duration_s;
    j["seed"] = s.seed;
    j["distractor_class"] = s.distractor_class;
    j["distractor_pos"] = s.distractor_pos;
    j["distractor_size"] = s.distractor_size;
    j["snr_db"] = s.snr_db;
    return j;
}

}  // namespace

ShapeKind class_shape(int class_id) {
    switch (class_id % 3) {
        case 0: return ShapeKind::circle;
        case 1: return ShapeKind::square;
        default: return ShapeKind::triangle;
    }
}

std::array<double, 3> class_color(int class_id) {
    static const std::array<std::array<double, 3>, 10> palette = {{
        {0.95, 0.15, 0.15},
        {0.15, 0.85, 0.20},
        {0.20, 0.30, 0.95},
        {0.95, 0.85, 0.10},
        {0.90, 0.20, 0.90},
        {0.10, 0.90, 0.90},
        {0.95, 0.55, 0.10},
        {0.60, 0.20, 0.80},
        {0.75, 0.90, 0.25},
        {0.90, 0.60, 0.70},
    }};
    return palette[static_cast<size_t>(class_id % 10)];
}

double shape_area(ShapeKind shape, double size) {
    switch (shape) {
        case ShapeKind::circle: return kPi * size * size;
        case ShapeKind::square: return 4.0 * size * size;
        case ShapeKind::triangle: return 3.0 * std::sqrt(3.0) / 4.0 * size * size;
    }
    return 0.0;
}

double shape_perimeter(ShapeKind shape, double size) {
    switch (shape) {
        case ShapeKind::circle: return 2.0 * kPi * size;
        case ShapeKind::square: return 8.0 * size;
        case ShapeKind::triangle: return 3.0 * std::sqrt(3.0) * size;
    }
    return 0.0;
}

std::pair<avio::VideoClip, GroundTruth> generate_scene(const SceneSpec& spec) {
    if (spec.tone_hz >= kSampleRate / 2.0)
        throw InvalidInputError("generate_scene: tone above Nyquist");
    if (spec.duration_s <= 0.0) throw InvalidInputError("generate_scene: duration must be positive");

    const int n_frames = static_cast<int>(std::lround(spec.duration_s * avio::kFps));
    const double mover_ext = shape_extent(spec.shape, spec.size);
    for (int i = 0; i < n_frames; ++i) {
        const double tf = n_frames > 1 ? static_cast<double>(i) / (n_frames - 1) : 0.0;
        const auto c = center_at(spec, tf);
        if (c[0] - mover_ext < 0.0 || c[0] + mover_ext > kCanvas || c[1] - mover_ext < 0.0 ||
            c[1] + mover_ext > kCanvas)
            throw InvalidInputError("generate_scene: motion path leaves the canvas");
    }

    const ShapeKind d_shape = class_shape(spec.distractor_class);
    const auto d_color = class_color(spec.distractor_class);
    const double scale = static_cast<double>(kRender) / kCanvas;

    avio::VideoClip clip;
    clip.duration_s = spec.duration_s;
    GroundTruth gt;
    gt.class_id = spec.class_id;

    for (int i = 0; i < n_frames; ++i) {
        const double tf = n_frames > 1 ? static_cast<double>(i) / (n_frames - 1) : 0.0;
        const auto c = center_at(spec, tf);

        ImageU8 frame;
        frame.width = kRender;
        frame.height = kRender;
        frame.channels = 3;
        frame.data.resize(static_cast<size_t>(kRender) * kRender * 3);
        for (int y = 0; y < kRender; ++y) {
            for (int x = 0; x < kRender; ++x) {
                // Pixel center mapped to canonical coordinates.
                const double gy = (y + 0.5) / scale - 0.5;
                const double gx = (x + 0.5) / scale - 0.5;
                std::array<double, 3> col = background(gy, gx);
                if (inside_shape(d_shape, spec.distractor_pos[0], spec.distractor_pos[1],
                                 spec.distractor_size, gy, gx))
                    col = d_color;
                if (inside_shape(spec.shape, c[0], c[1], spec.size, gy, gx)) col = spec.color;
                for (int ch = 0; ch < 3; ++ch)
                    frame.at(y, x, ch) =
                        static_cast<uint8_t>(std::lround(std::clamp(col[static_cast<size_t>(ch)], 0.0, 1.0) * 255.0));
            }
        }
        clip.frames.push_back(std::move(frame));

        masks::BinaryMask m(kCanvas, kCanvas);
        for (int y = 0; y < kCanvas; ++y)
            for (int x = 0; x < kCanvas; ++x)
                if (inside_shape(spec.shape, c[0], c[1], spec.size, y, x)) m.at(y, x) = 1;
        gt.object_masks.push_back(std::move(m));
    }

    // Tone with additive white noise at the configured SNR.
    const long n_samples = std::lround(spec.duration_s * kSampleRate);
    const double amp = 0.5;
    const double signal_power = amp * amp / 2.0;
    const double noise_sigma = std::sqrt(signal_power / std::pow(10.0, spec.snr_db / 10.0));
    Rng noise_rng(derive_seed(spec.seed, "audio-noise"));
    clip.waveform.resize(static_cast<size_t>(n_samples));
    for (long s = 0; s < n_samples; ++s) {
        const double t = static_cast<double>(s) / kSampleRate;
        const double v = amp * std::sin(2.0 * kPi * spec.tone_hz * t) + noise_rng.normal(0.0, noise_sigma);
        clip.waveform[static_cast<size_t>(s)] = std::clamp(v, -1.0, 1.0);
    }
    return {std::move(clip), std::move(gt)};
}

std::vector<avio::ClipRef> generate_dataset(const std::string& root, const DatasetOptions& opts) {
    if (opts.n_classes < 2 || opts.n_classes > 10)
        throw InvalidInputError("generate_dataset: n_classes must be in [2, 10]");
    if (opts.clips_per_class < 3)
        throw InvalidInputError("generate_dataset: clips_per_class must be >= 3");
    const int n = opts.clips_per_class;
    const int n_train = static_cast<int>(std::lround(opts.split_fractions[0] * n));
    const int n_val = static_cast<int>(std::lround(opts.split_fractions[1] * n));
    const int n_test = n - n_train - n_val;
    if ((opts.split_fractions[0] > 0.0 && n_train < 1) ||
        (opts.split_fractions[1] > 0.0 && n_val < 1) ||
        (opts.split_fractions[2] > 0.0 && n_test < 1))
        throw InvalidInputError("generate_dataset: insufficient clips for stratified split");

    // Stage into a temp directory and atomically swap it in, so an aborted
    // run never leaves a partial dataset behind.
    const fs::path final_root(root);
    const fs::path staging = final_root.string() + ".staging";
    std::error_code ec;
    fs::remove_all(staging, ec);
    fs::create_directories(staging);

    std::vector<avio::ClipRef> manifest;
    char buf[64];
    for (int k = 0; k < opts.n_classes; ++k) {
        for (int j = 0; j < n; ++j) {
            const int idx = k * n + j;
            Rng rng(derive_seed(opts.seed, "clip", static_cast<uint64_t>(idx)));

            SceneSpec spec;
            spec.class_id = k;
            spec.shape = class_shape(k);
            spec.color = class_color(k);
            spec.tone_hz = class_tone_hz(k);
            spec.duration_s = opts.duration_s;
            spec.snr_db = opts.snr_db;
            spec.seed = derive_seed(opts.seed, "scene", static_cast<uint64_t>(idx));

            // Object occupies roughly 8-15% of the frame.
            const double area_frac = rng.uniform(0.08, 0.15);
            const double area = area_frac * kCanvas * kCanvas;
            switch (spec.shape) {
                case ShapeKind::circle: spec.size = std::sqrt(area / kPi); break;
                case ShapeKind::square: spec.size = std::sqrt(area) / 2.0; break;
                case ShapeKind::triangle: spec.size = std::sqrt(area / (3.0 * std::sqrt(3.0) / 4.0)); break;
            }
            const double ext = shape_extent(spec.shape, spec.size) + 2.0;
            spec.start_pos = {rng.uniform(ext, kCanvas - ext), rng.uniform(ext, kCanvas - ext)};
            for (int tries = 0; tries < 64; ++tries) {
                spec.end_pos = {rng.uniform(ext, kCanvas - ext), rng.uniform(ext, kCanvas - ext)};
                const double dy = spec.end_pos[0] - spec.start_pos[0];
                const double dx = spec.end_pos[1] - spec.start_pos[1];
                const double dist = std::sqrt(dy * dy + dx * dx);
                if (dist > 20.0 && dist < 90.0) break;
            }

            // Distractor identities come from palette classes unused by the
            // sounding set when possible, so no audio in the dataset ever
            // matches a silent shape; different sounding class otherwise.
            spec.distractor_class =
                opts.n_classes < 10
                    ? opts.n_classes + rng.uniform_int(0, 9 - opts.n_classes)
                    : (k + 1 + rng.uniform_int(0, opts.n_classes - 2)) % opts.n_classes;
            spec.distractor_size = spec.size * rng.uniform(0.5, 0.75);
            // Keep the distractor clear of the motion path when possible; it
            // shrinks per round, and the best candidate wins in the end (the
            // mover is drawn on top, so residual overlap only occludes the
            // distractor).
            bool placed = false;
            std::array<double, 2> best_pos{0.0, 0.0};
            double best_clearance = -1e300;
            for (int round = 0; round < 4 && !placed; ++round) {
                const double dext =
                    shape_extent(class_shape(spec.distractor_class), spec.distractor_size) + 2.0;
                for (int tries = 0; tries < 64 && !placed; ++tries) {
                    spec.distractor_pos = {rng.uniform(dext, kCanvas - dext),
                                           rng.uniform(dext, kCanvas - dext)};
                    double min_dist = 1e300;
                    for (int step = 0; step <= 8; ++step) {
                        const auto c = center_at(spec, step / 8.0);
                        const double dy = c[0] - spec.distractor_pos[0];
                        const double dx = c[1] - spec.distractor_pos[1];
                        min_dist = std::min(min_dist, std::sqrt(dy * dy + dx * dx));
                    }
                    const double clearance = min_dist - (ext + dext);
                    if (clearance > best_clearance) {
                        best_clearance = clearance;
                        best_pos = spec.distractor_pos;
                    }
                    if (clearance >= 4.0) placed = true;
                }
                if (!placed) spec.distractor_size *= 0.75;
            }
            if (!placed) spec.distractor_pos = best_pos;

            auto [clip, gt] = generate_scene(spec);

            std::snprintf(buf, sizeof(buf), "c%02d_%03d", k, j);
            const std::string clip_id(buf);
            const fs::path dir = staging / clip_id;
            fs::create_directories(dir / "frames");
            fs::create_directories(dir / "gt_masks");
            for (size_t f = 0; f < clip.frames.size(); ++f) {
                std::snprintf(buf, sizeof(buf), "%05zu.png", f);
                write_png((dir / "frames" / buf).string(), clip.frames[f]);
                masks::write_mask_png((dir / "gt_masks" / buf).string(), gt.object_masks[f]);
            }
            write_wav_16k_mono((dir / "audio.wav").string(), clip.waveform);

            nlohmann::json gtj;
            gtj["class_id"] = gt.class_id;
            gtj["spec"] = spec_to_json(spec);
            std::ofstream os(dir / "gt.json");
            os << gtj.dump(2) << "\n";

            avio::ClipRef ref;
            ref.id = clip_id;
            ref.class_id = k;
            ref.split = j < n_train ? "train" : (j < n_train + n_val ? "val" : "test");
            manifest.push_back(std::move(ref));
        }
    }
    avio::write_manifest(staging.string(), manifest, opts.n_classes);

    fs::remove_all(final_root, ec);
    fs::rename(staging, final_root);
    return manifest;
}

GroundTruth load_ground_truth(const std::string& root, const std::string& clip_id) {
    GroundTruth gt;
    const fs::path dir = fs::path(root) / clip_id;
    std::ifstream is(dir / "gt.json");
    if (!is) throw IoError("cannot open gt.json for clip " + clip_id);
    nlohmann::json j;
    is >> j;
    gt.class_id = j.at("class_id").get<int>();
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(dir / "gt_masks"))
        if (e.path().extension() == ".png") paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) gt.object_masks.push_back(masks::read_mask_png(p.string()));
    return gt;
}

}  // namespace avi::synth
