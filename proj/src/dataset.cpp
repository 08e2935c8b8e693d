// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/dataset.hpp"

#include <cstdio>
#include <filesystem>

#include "avinpaint/common.hpp"
#include "avinpaint/wavio.hpp"

namespace fs = std::filesystem;

namespace avi {

ClipStore::ClipStore(std::string root) : root_(std::move(root)) {
    refs_ = avio::read_manifest(root_);
    if (refs_.empty()) throw InvalidInputError("dataset has no clips: " + root_);
}

std::vector<avio::ClipRef> ClipStore::split(const std::string& name) const {
    std::vector<avio::ClipRef> out;
    for (const auto& r : refs_)
        if (r.split == name) out.push_back(r);
    return out;
}

const avio::ClipRef& ClipStore::ref(const std::string& clip_id) const {
    for (const auto& r : refs_)
        if (r.id == clip_id) return r;
    throw InvalidInputError("unknown clip id: " + clip_id);
}

int ClipStore::frame_count(const std::string& clip_id) const {
    auto it = frame_counts_.find(clip_id);
    if (it != frame_counts_.end()) return it->second;
    const fs::path dir = fs::path(root_) / clip_id / "frames";
    int n = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".png") ++n;
    if (n == 0) throw IoError("clip has no frames: " + clip_id);
    frame_counts_[clip_id] = n;
    return n;
}

Tensor ClipStore::load_frame_rgb(const std::string& clip_id, int frame_idx) const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%05d.png", frame_idx);
    const fs::path p = fs::path(root_) / clip_id / "frames" / buf;
    return image_to_tensor(read_png(p.string()));
}

const std::vector<double>& ClipStore::waveform(const std::string& clip_id) const {
    auto it = wave_cache_.find(clip_id);
    if (it != wave_cache_.end()) return it->second;
    const fs::path p = fs::path(root_) / clip_id / "audio.wav";
    return wave_cache_.emplace(clip_id, read_wav_16k_mono(p.string())).first->second;
}

Tensor ClipStore::frame_mel(const std::string& clip_id, int frame_idx) const {
    const auto& wave = waveform(clip_id);
    const double t = (frame_idx + 0.5) / static_cast<double>(avio::kFps);
    return avio::compute_log_mel(avio::sample_audio_segment(wave, t));
}

}  // namespace avi
