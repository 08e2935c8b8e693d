// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "avinpaint/avio.hpp"

namespace avi {

// Lazy per-clip access over the on-disk dataset layout. Waveforms and frame
// listings are cached; frames are decoded on demand.
class ClipStore {
  public:
    explicit ClipStore(std::string root);

    const std::string& root() const { return root_; }
    const std::vector<avio::ClipRef>& refs() const { return refs_; }
    std::vector<avio::ClipRef> split(const std::string& name) const;
    const avio::ClipRef& ref(const std::string& clip_id) const;

    int frame_count(const std::string& clip_id) const;
    // Raw stored frame as (3,H,W) in [0,1] (no preparation applied).
    Tensor load_frame_rgb(const std::string& clip_id, int frame_idx) const;
    const std::vector<double>& waveform(const std::string& clip_id) const;

    // 1-second log-mel centered on the frame's midpoint timestamp.
    Tensor frame_mel(const std::string& clip_id, int frame_idx) const;

  private:
    std::string root_;
    std::vector<avio::ClipRef> refs_;
    mutable std::map<std::string, std::vector<double>> wave_cache_;
    mutable std::map<std::string, int> frame_counts_;
};

}  // namespace avi
