// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avinpaint/tensor.hpp"

namespace avi {

// Interleaved 8-bit image, channels = 1 (gray) or 3 (RGB).
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> data;

    uint8_t at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    uint8_t& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

ImageU8 read_png(const std::string& path);
void write_png(const std::string& path, const ImageU8& img);

// Conversions between interleaved u8 and planar (C,H,W) double in [0,1].
Tensor image_to_tensor(const ImageU8& img);
ImageU8 tensor_to_image(const Tensor& t);

// Bilinear resample with half-pixel-center mapping; preserves constants.
Tensor resize_bilinear(const Tensor& src, int out_h, int out_w);

}  // namespace avi
