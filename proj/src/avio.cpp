// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/avio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>

#include "avinpaint/common.hpp"
#include "avinpaint/wavio.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace avi::avio {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Iterative radix-2 FFT, n a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// 80 triangular filters over 0..8000 Hz, each scaled to unit area
// (2 / bandwidth). Rows are mel bands, columns FFT bins 0..128.
struct MelBank {
    std::vector<double> weights;  // kMelBins x (kFftSize/2+1)
    std::vector<double> centers_hz;
};

const MelBank& mel_bank() {
    static const MelBank bank = [] {
        MelBank b;
        const int n_bins = kFftSize / 2 + 1;
        const double f_max = kSampleRate / 2.0;
        const double mel_max = hz_to_mel(f_max);
        std::vector<double> edges(kMelBins + 2);
        for (int i = 0; i < kMelBins + 2; ++i)
            edges[static_cast<size_t>(i)] = mel_to_hz(mel_max * i / (kMelBins + 1));
        b.centers_hz.assign(edges.begin() + 1, edges.end() - 1);
        b.weights.assign(static_cast<size_t>(kMelBins) * n_bins, 0.0);
        for (int m = 0; m < kMelBins; ++m) {
            const double lo = edges[static_cast<size_t>(m)];
            const double mid = edges[static_cast<size_t>(m) + 1];
            const double hi = edges[static_cast<size_t>(m) + 2];
            const double norm = 2.0 / (hi - lo);
            for (int k = 0; k < n_bins; ++k) {
                const double f = static_cast<double>(k) * kSampleRate / kFftSize;
                double w = 0.0;
                if (f > lo && f < mid)
                    w = (f - lo) / (mid - lo);
                else if (f >= mid && f < hi)
                    w = (hi - f) / (hi - mid);
                b.weights[static_cast<size_t>(m) * n_bins + k] = w * norm;
            }
        }
        return b;
    }();
    return bank;
}

Tensor stft_power(const std::vector<double>& segment) {
    // Reflect padding by hop on both sides centers the first window and makes
    // the frame count floor(16000/80)+1 = 201.
    const int n = static_cast<int>(segment.size());
    std::vector<double> padded(static_cast<size_t>(n) + 2 * kStftHop);
    for (int i = 0; i < kStftHop; ++i) padded[static_cast<size_t>(i)] = segment[static_cast<size_t>(kStftHop - i)];
    std::copy(segment.begin(), segment.end(), padded.begin() + kStftHop);
    for (int i = 0; i < kStftHop; ++i)
        padded[static_cast<size_t>(kStftHop + n + i)] = segment[static_cast<size_t>(n - 2 - i)];

    std::vector<double> window(kStftWindow);
    for (int i = 0; i < kStftWindow; ++i)
        window[static_cast<size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / kStftWindow));

    const int n_frames = (static_cast<int>(padded.size()) - kStftWindow) / kStftHop + 1;
    const int n_bins = kFftSize / 2 + 1;
    Tensor power({n_frames, n_bins});
    std::vector<std::complex<double>> buf(kFftSize);
    for (int t = 0; t < n_frames; ++t) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        const double* src = padded.data() + static_cast<size_t>(t) * kStftHop;
        for (int i = 0; i < kStftWindow; ++i)
            buf[static_cast<size_t>(i)] = src[i] * window[static_cast<size_t>(i)];
        fft_inplace(buf);
        for (int k = 0; k < n_bins; ++k)
            power.at2(t, k) = std::norm(buf[static_cast<size_t>(k)]);
    }
    return power;
}

}  // namespace

Tensor prepare_frame(const Tensor& rgb, PrepMode mode, Rng& rng) {
    if (rgb.rank() != 3 || rgb.dim(0) != 3 || rgb.dim(1) < 1 || rgb.dim(2) < 1)
        throw InvalidInputError("prepare_frame: expected nonempty (3,H,W) image");
    Tensor big = resize_bilinear(rgb, kResizeSize, kResizeSize);
    Tensor out;
    if (mode == PrepMode::train) {
        const int max_off = kResizeSize - kFrameSize;
        const int oy = rng.uniform_int(0, max_off);
        const int ox = rng.uniform_int(0, max_off);
        out = Tensor({3, kFrameSize, kFrameSize});
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < kFrameSize; ++y)
                for (int x = 0; x < kFrameSize; ++x)
                    out.at3(c, y, x) = big.at3(c, y + oy, x + ox);
    } else {
        out = resize_bilinear(big, kFrameSize, kFrameSize);
    }
    for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
    return out;
}

Tensor prepare_frame_test(const Tensor& rgb) {
    Rng unused(0);
    return prepare_frame(rgb, PrepMode::test, unused);
}

std::vector<double> sample_audio_segment(const std::vector<double>& waveform,
                                         double center_time_s) {
    const long n = static_cast<long>(waveform.size());
    if (n < kSampleRate)
        throw InvalidInputError("sample_audio_segment: clip shorter than 1 s");
    long start = std::lround(center_time_s * kSampleRate) - kSampleRate / 2;
    start = std::clamp(start, 0L, n - kSampleRate);
    return std::vector<double>(waveform.begin() + start, waveform.begin() + start + kSampleRate);
}

std::vector<double> sample_audio_segment(const VideoClip& clip, double center_time_s) {
    return sample_audio_segment(clip.waveform, center_time_s);
}

Tensor compute_mel_power(const std::vector<double>& segment) {
    if (segment.size() != static_cast<size_t>(kSampleRate))
        throw InvalidInputError("compute_log_mel: segment must have exactly 16000 samples");
    const Tensor power = stft_power(segment);
    const MelBank& bank = mel_bank();
    const int n_bins = kFftSize / 2 + 1;
    Tensor mel({power.dim(0), kMelBins});
    for (int t = 0; t < power.dim(0); ++t)
        for (int m = 0; m < kMelBins; ++m) {
            double s = 0.0;
            const double* w = bank.weights.data() + static_cast<size_t>(m) * n_bins;
            const double* p = power.data.data() + static_cast<size_t>(t) * n_bins;
            for (int k = 0; k < n_bins; ++k) s += w[k] * p[k];
            mel.at2(t, m) = s;
        }
    return mel;
}

Tensor compute_log_mel(const std::vector<double>& segment) {
    Tensor mel = compute_mel_power(segment);
    for (double& v : mel.data) v = std::log(v + kLogOffset);
    if (mel.dim(0) != kMelFrames || mel.dim(1) != kMelBins)
        throw InvalidInputError("compute_log_mel: unexpected output shape " + mel.shape_str());
    return mel;
}

std::vector<double> mel_center_frequencies() { return mel_bank().centers_hz; }

std::vector<ClipRef> read_manifest(const std::string& root) {
    const fs::path p = fs::path(root) / "index.json";
    std::ifstream is(p);
    if (!is) throw IoError("cannot open manifest: " + p.string());
    nlohmann::json j;
    is >> j;
    std::vector<ClipRef> out;
    for (const auto& c : j.at("clips")) {
        ClipRef r;
        r.id = c.at("id").get<std::string>();
        r.split = c.at("split").get<std::string>();
        if (c.contains("class_id")) r.class_id = c.at("class_id").get<int>();
        out.push_back(std::move(r));
    }
    return out;
}

void write_manifest(const std::string& root, const std::vector<ClipRef>& clips, int n_classes) {
    nlohmann::json j;
    j["n_classes"] = n_classes;
    j["clips"] = nlohmann::json::array();
    for (const auto& c : clips) {
        nlohmann::json e;
        e["id"] = c.id;
        e["split"] = c.split;
        if (c.class_id >= 0) e["class_id"] = c.class_id;
        j["clips"].push_back(e);
    }
    std::ofstream os(fs::path(root) / "index.json");
    os << j.dump(2) << "\n";
    if (!os) throw IoError("failed writing manifest under " + root);
}

VideoClip load_clip(const std::string& root, const std::string& clip_id) {
    VideoClip clip;
    clip.clip_id = clip_id;
    const fs::path dir = fs::path(root) / clip_id;
    const fs::path frames_dir = dir / "frames";
    if (!fs::is_directory(frames_dir))
        throw IoError("clip has no frames directory: " + frames_dir.string());
    std::vector<fs::path> frame_paths;
    for (const auto& e : fs::directory_iterator(frames_dir))
        if (e.path().extension() == ".png") frame_paths.push_back(e.path());
    std::sort(frame_paths.begin(), frame_paths.end());
    for (const auto& p : frame_paths) clip.frames.push_back(read_png(p.string()));
    clip.waveform = read_wav_16k_mono((dir / "audio.wav").string());
    clip.duration_s = static_cast<double>(clip.frames.size()) / kFps;
    return clip;
}

}  // namespace avi::avio
