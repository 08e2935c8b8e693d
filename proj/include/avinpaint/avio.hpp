// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

#include "avinpaint/image.hpp"
#include "avinpaint/rng.hpp"
#include "avinpaint/tensor.hpp"

namespace avi::avio {

inline constexpr int kFps = 8;
inline constexpr int kFrameSize = 224;
inline constexpr int kResizeSize = 256;
inline constexpr int kMelFrames = 201;
inline constexpr int kMelBins = 80;
inline constexpr int kStftWindow = 160;  // 0.01 s at 16 kHz
inline constexpr int kStftHop = 80;      // half-window
inline constexpr int kFftSize = 256;
inline constexpr double kLogOffset = 1e-6;

// Synchronized frame sequence (8 fps RGB) plus mono 16 kHz waveform.
struct VideoClip {
    std::string clip_id;
    std::vector<ImageU8> frames;
    std::vector<double> waveform;
    double duration_s = 0.0;

    // Midpoint timestamp of frame i; the audio window for a frame is centered
    // here.
    double frame_time(int i) const { return (i + 0.5) / static_cast<double>(kFps); }
};

enum class PrepMode { train, test };

// Resize to 256x256, then random 224 crop (train, offsets drawn row-then-col
// from rng) or deterministic resize to 224 (test). Output clamped to [0,1].
Tensor prepare_frame(const Tensor& rgb, PrepMode mode, Rng& rng);
Tensor prepare_frame_test(const Tensor& rgb);

// Exactly one second of audio centered at center_time_s, shifted inward at
// clip boundaries.
std::vector<double> sample_audio_segment(const VideoClip& clip, double center_time_s);
std::vector<double> sample_audio_segment(const std::vector<double>& waveform,
                                         double center_time_s);

// 201x80 log-mel spectrogram of a 16000-sample segment (Hann 160, hop 80,
// reflect-centered, FFT 256, 80 area-normalized triangular mel bands over
// 0..8 kHz, log(x + 1e-6)).
Tensor compute_log_mel(const std::vector<double>& segment);

// Linear-mel energies before the log; exposed for energy-scaling properties.
Tensor compute_mel_power(const std::vector<double>& segment);

// Center frequencies (Hz) of the 80 mel filters.
std::vector<double> mel_center_frequencies();

// Dataset directory layout: <root>/<clip_id>/frames/%05d.png + audio.wav,
// listed by <root>/index.json.
struct ClipRef {
    std::string id;
    std::string split;
    int class_id = -1;
};

std::vector<ClipRef> read_manifest(const std::string& root);
void write_manifest(const std::string& root, const std::vector<ClipRef>& clips, int n_classes);
VideoClip load_clip(const std::string& root, const std::string& clip_id);

}  // namespace avi::avio
