// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avinpaint/rng.hpp"
#include "avinpaint/tensor.hpp"

namespace avi::masks {

// Per-pixel hole indicator; 1 = missing/blinded.
struct BinaryMask {
    int h = 0;
    int w = 0;
    std::vector<uint8_t> grid;

    BinaryMask() = default;
    BinaryMask(int h_, int w_) : h(h_), w(w_), grid(static_cast<size_t>(h_) * w_, 0) {}

    uint8_t at(int y, int x) const { return grid[static_cast<size_t>(y) * w + x]; }
    uint8_t& at(int y, int x) { return grid[static_cast<size_t>(y) * w + x]; }
    long count() const;
    bool empty_mask() const { return count() == 0; }
};

double coverage(const BinaryMask& mask);

// Union of random thick strokes and ellipses with achieved coverage within
// target_ratio +/- 0.02. Bounded restarts; failure raises GenerationError.
BinaryMask generate_imask(int h, int w, double target_ratio, Rng& rng);

struct SmaskResult {
    BinaryMask mask;
    bool fallback_used = false;  // empty input replaced by the centered square
};

// Morphological adjustment of an object mask toward target coverage with a
// 3x3 structuring element, stopping at the first crossing.
SmaskResult generate_smask(const BinaryMask& object_mask, double target_ratio = 0.20);

// Corrupted frame: masked pixels zeroed, mask appended as 4th channel.
Tensor apply_mask(const Tensor& frame, const BinaryMask& mask);

BinaryMask dilate3x3(const BinaryMask& mask);
BinaryMask erode3x3(const BinaryMask& mask);

// Nearest-neighbor upsample (for feature-resolution masks).
BinaryMask upsample_nearest(const BinaryMask& mask, int out_h, int out_w);

Tensor mask_to_tensor(const BinaryMask& mask);
BinaryMask mask_from_tensor_threshold(const Tensor& map, double tau);

// PNG persistence: 255 = hole, 0 = valid; the loader treats any nonzero
// value as hole so external irregular-mask files work unchanged.
void write_mask_png(const std::string& path, const BinaryMask& mask);
BinaryMask read_mask_png(const std::string& path);

}  // namespace avi::masks
