// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0
//
// Minimal reverse-mode automatic differentiation over Tensor. Graphs are
// built per sample, backward runs once in reverse topological order, and
// gradients accumulate into node-local buffers. Convolutions lower to
// im2col + Eigen GEMM (see conv_kernels.hpp).

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "avinpaint/tensor.hpp"

namespace avi::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_ready = false;
    std::vector<NodePtr> inputs;
    std::function<void(Node&)> backward_fn;

    // Gradient buffer, allocated on first use.
    Tensor& g() {
        if (!grad_ready) {
            grad = Tensor::zeros(value.shape);
            grad_ready = true;
        }
        return grad;
    }
};

NodePtr constant(Tensor v);
NodePtr leaf(Tensor v, bool requires_grad = true);

// Convolutions. Bias may be nullptr.
NodePtr conv2d(NodePtr x, NodePtr w, NodePtr b, int stride, int pad);
NodePtr conv3d(NodePtr x, NodePtr w, NodePtr b, std::array<int, 3> stride,
               std::array<int, 3> pad);
NodePtr linear(NodePtr x, NodePtr w, NodePtr b);

// Activations and elementwise.
NodePtr relu(NodePtr x);
NodePtr leaky_relu(NodePtr x, double slope);
NodePtr sigmoid(NodePtr x);
NodePtr add(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr affine(NodePtr x, double scale, double shift);

// y = s*x + b with learnable scalars s, b of shape {1}.
NodePtr scale_shift(NodePtr x, NodePtr s, NodePtr b);

// Reductions and shape ops.
NodePtr gap2d(NodePtr x);                              // (C,H,W) -> (C), mean over H*W
NodePtr reduce_max(NodePtr x);                         // -> {1}, subgradient to first argmax
NodePtr mean(NodePtr x);                               // -> {1}
NodePtr concat_channels(NodePtr a, NodePtr b);         // (C1,H,W)+(C2,H,W) -> (C1+C2,H,W)
NodePtr broadcast_spatial(NodePtr v, int h, int w);    // (C) -> (C,H,W)
NodePtr upsample_nearest2(NodePtr x);                  // (C,H,W) -> (C,2H,2W)
NodePtr stack_time(const std::vector<NodePtr>& frames);  // T x (C,H,W) -> (C,T,H,W)

// Per-location cosine between a (C) and v (C,H,W), both L2-normalized with
// norms clamped below at eps. Output (H,W).
NodePtr cosine_map(NodePtr a, NodePtr v, double eps = 1e-12);

// mask (H,W) in {0,1}: mask*x + (1-mask)*other, broadcast over channels.
NodePtr blend(NodePtr x, const Tensor& other, const Tensor& mask);

// Losses.
NodePtr bce_prob(NodePtr p, double y);                         // p scalar in (0,1)
NodePtr mean_sq_diff(NodePtr x, const Tensor& target);         // scalar
NodePtr mean_abs_diff(NodePtr x, const Tensor& target);        // scalar
NodePtr ce_with_index(NodePtr logits, int label);              // scalar
NodePtr ce_with_soft_target(NodePtr logits, const Tensor& p);  // scalar
NodePtr weighted_sum(const std::vector<NodePtr>& xs, const std::vector<double>& ws);

// Reverse pass. Each seed adds an initial gradient to its node; every seed
// tensor must match its node's value shape. The single-root overload seeds 1.
void backward(const std::vector<std::pair<NodePtr, Tensor>>& seeds);
void backward(const NodePtr& scalar_root);

}  // namespace avi::ad
