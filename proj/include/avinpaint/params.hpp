// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "avinpaint/autodiff.hpp"
#include "avinpaint/rng.hpp"
#include "avinpaint/tensor.hpp"

namespace avi {

// Named, ordered parameter collection. Iteration order is insertion order so
// optimizer state and checkpoints are stable across runs.
class ParamSet {
  public:
    Tensor& add(const std::string& name, Tensor t) {
        items_.emplace_back(name, std::move(t));
        return items_.back().second;
    }

    Tensor& at(const std::string& name) {
        for (auto& [n, t] : items_)
            if (n == name) return t;
        throw InvalidInputError("param not found: " + name);
    }

    const Tensor& at(const std::string& name) const {
        for (const auto& [n, t] : items_)
            if (n == name) return t;
        throw InvalidInputError("param not found: " + name);
    }

    bool has(const std::string& name) const {
        for (const auto& [n, t] : items_)
            if (n == name) return true;
        return false;
    }

    std::vector<std::pair<std::string, Tensor>>& items() { return items_; }
    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    size_t size() const { return items_.size(); }

    long total_scalars() const {
        long n = 0;
        for (const auto& [name, t] : items_) n += t.numel();
        return n;
    }

    uint64_t content_hash() const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& [name, t] : items_) {
            h ^= hash_tag(name);
            h *= 0x100000001b3ULL;
            h ^= tensor_bytes_hash(t);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

  private:
    std::vector<std::pair<std::string, Tensor>> items_;
};

// Per-step gradient accumulator keyed by parameter name.
class GradStore {
  public:
    void accumulate(const std::string& name, const Tensor& g) {
        auto it = grads_.find(name);
        if (it == grads_.end()) {
            grads_.emplace(name, g);
            return;
        }
        for (long i = 0; i < g.numel(); ++i)
            it->second.data[static_cast<size_t>(i)] += g.data[static_cast<size_t>(i)];
    }

    void scale(double f) {
        for (auto& [n, g] : grads_)
            for (double& v : g.data) v *= f;
    }

    const Tensor* find(const std::string& name) const {
        auto it = grads_.find(name);
        return it == grads_.end() ? nullptr : &it->second;
    }

    bool all_finite() const {
        for (const auto& [n, g] : grads_)
            if (!g.all_finite()) return false;
        return true;
    }

    void clear() { grads_.clear(); }

  private:
    std::map<std::string, Tensor> grads_;
};

// Leaf nodes for one graph instance over a parameter set. Frozen sets produce
// non-differentiable leaves, so no weight gradients are ever computed.
class ParamLeaves {
  public:
    ParamLeaves(const ParamSet& params, bool trainable) {
        for (const auto& [name, t] : params.items())
            leaves_.emplace_back(name, ad::leaf(t, trainable));
    }

    ad::NodePtr at(const std::string& name) const {
        for (const auto& [n, node] : leaves_)
            if (n == name) return node;
        throw InvalidInputError("param leaf not found: " + name);
    }

    // Pull accumulated leaf gradients into the store (insertion order).
    void collect(GradStore& store) const {
        for (const auto& [name, node] : leaves_)
            if (node->requires_grad && node->grad_ready) store.accumulate(name, node->grad);
    }

  private:
    std::vector<std::pair<std::string, ad::NodePtr>> leaves_;
};

class Adam {
  public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    void step(ParamSet& params, const GradStore& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (auto& [name, p] : params.items()) {
            const Tensor* g = grads.find(name);
            if (!g) continue;
            auto& [m, v] = state(name, p);
            for (long i = 0; i < p.numel(); ++i) {
                const size_t s = static_cast<size_t>(i);
                const double gi = g->data[s];
                m.data[s] = beta1_ * m.data[s] + (1.0 - beta1_) * gi;
                v.data[s] = beta2_ * v.data[s] + (1.0 - beta2_) * gi * gi;
                const double mhat = m.data[s] / bc1;
                const double vhat = v.data[s] / bc2;
                p.data[s] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

  private:
    std::pair<Tensor, Tensor>& state(const std::string& name, const Tensor& like) {
        auto it = state_.find(name);
        if (it == state_.end())
            it = state_.emplace(name, std::make_pair(Tensor::zeros(like.shape), Tensor::zeros(like.shape))).first;
        return it->second;
    }

    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::map<std::string, std::pair<Tensor, Tensor>> state_;
};

// Kaiming-style init for conv / linear weights.
inline Tensor init_conv_weight(std::vector<int> shape, Rng& rng) {
    long fan_in = 1;
    for (size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
    const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.normal(0.0, std);
    return t;
}

}  // namespace avi
