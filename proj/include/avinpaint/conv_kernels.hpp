// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <array>

#include "avinpaint/tensor.hpp"

namespace avi {

// x (C,H,W), w (OC,C,kh,kw), b (OC) or nullptr. Zero padding, floor output
// size. Gradient outputs may be nullptr to skip that branch.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor* b, int stride, int pad);
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int stride, int pad,
                     Tensor* dx, Tensor* dw, Tensor* db);

// x (C,T,H,W), w (OC,C,kt,kh,kw), b (OC) or nullptr.
Tensor conv3d_forward(const Tensor& x, const Tensor& w, const Tensor* b,
                      std::array<int, 3> stride, std::array<int, 3> pad);
void conv3d_backward(const Tensor& x, const Tensor& w, const Tensor& dy,
                     std::array<int, 3> stride, std::array<int, 3> pad,
                     Tensor* dx, Tensor* dw, Tensor* db);

}  // namespace avi
