// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <string>
#include <vector>

namespace avi {

// Mono 16-bit PCM WAV at 16 kHz. Any other format is rejected; resampling is
// out of scope.
std::vector<double> read_wav_16k_mono(const std::string& path);
void write_wav_16k_mono(const std::string& path, const std::vector<double>& samples);

inline constexpr int kSampleRate = 16000;

}  // namespace avi
