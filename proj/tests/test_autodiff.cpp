// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0
//
// Every autodiff op is validated against central finite differences on small
// random instances.

#include <cmath>

#include "avinpaint/autodiff.hpp"
#include "doctest.h"
#include "test_helpers.hpp"

using namespace avi;
using avi::testing::finite_difference_wrt;
using avi::testing::max_rel_err;
using avi::testing::random_tensor;

namespace {

// Builds the loss from a fresh graph each call so finite differences see the
// same computation as the backward pass under test.
double check_unary(Tensor& x, const std::function<ad::NodePtr(ad::NodePtr)>& body) {
    auto loss_value = [&]() {
        auto leaf = ad::leaf(x, false);
        return body(leaf)->value.data[0];
    };
    auto leaf = ad::leaf(x, true);
    auto root = body(leaf);
    ad::backward(root);
    const Tensor fd = finite_difference_wrt(x, loss_value);
    return max_rel_err(fd, leaf->grad);
}

}  // namespace

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(42);
    Tensor x = random_tensor({2, 6, 6}, rng);
    Tensor w = random_tensor({3, 2, 3, 3}, rng, -0.5, 0.5);
    Tensor b = random_tensor({3}, rng, -0.1, 0.1);

    auto build = [&](bool grad) {
        auto xn = ad::leaf(x, grad);
        auto wn = ad::leaf(w, grad);
        auto bn = ad::leaf(b, grad);
        auto y = ad::conv2d(xn, wn, bn, 2, 1);
        return std::make_tuple(ad::mean_sq_diff(y, Tensor::zeros(y->value.shape)), xn, wn, bn);
    };
    auto [root, xn, wn, bn] = build(true);
    ad::backward(root);
    auto loss = [&]() { return std::get<0>(build(false))->value.data[0]; };

    CHECK(max_rel_err(finite_difference_wrt(x, loss), xn->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(w, loss), wn->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(b, loss), bn->grad) < 1e-6);
}

TEST_CASE("conv3d gradients match finite differences") {
    Rng rng(43);
    Tensor x = random_tensor({2, 3, 5, 5}, rng);
    Tensor w = random_tensor({2, 2, 3, 3, 3}, rng, -0.5, 0.5);
    Tensor b = random_tensor({2}, rng, -0.1, 0.1);

    auto build = [&](bool grad) {
        auto xn = ad::leaf(x, grad);
        auto wn = ad::leaf(w, grad);
        auto bn = ad::leaf(b, grad);
        auto y = ad::conv3d(xn, wn, bn, {1, 2, 2}, {1, 1, 1});
        return std::make_tuple(ad::mean_sq_diff(y, Tensor::zeros(y->value.shape)), xn, wn, bn);
    };
    auto [root, xn, wn, bn] = build(true);
    ad::backward(root);
    auto loss = [&]() { return std::get<0>(build(false))->value.data[0]; };

    CHECK(max_rel_err(finite_difference_wrt(x, loss), xn->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(w, loss), wn->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(b, loss), bn->grad) < 1e-6);
}

TEST_CASE("elementwise and reduction ops match finite differences") {
    Rng rng(44);
    Tensor x = random_tensor({3, 4, 4}, rng);

    CHECK(check_unary(x, [](ad::NodePtr n) {
              return ad::mean(ad::sigmoid(n));
          }) < 1e-6);
    CHECK(check_unary(x, [](ad::NodePtr n) {
              return ad::mean(ad::leaky_relu(n, 0.2));
          }) < 1e-6);
    CHECK(check_unary(x, [](ad::NodePtr n) {
              return ad::mean(ad::upsample_nearest2(n));
          }) < 1e-6);
    CHECK(check_unary(x, [](ad::NodePtr n) { return ad::mean(ad::gap2d(n)); }) < 1e-6);
    CHECK(check_unary(x, [](ad::NodePtr n) { return ad::reduce_max(n); }) < 1e-6);

    Tensor target = random_tensor({3, 4, 4}, rng);
    CHECK(check_unary(x, [&](ad::NodePtr n) { return ad::mean_sq_diff(n, target); }) < 1e-6);
    CHECK(check_unary(x, [&](ad::NodePtr n) { return ad::mean_abs_diff(n, target); }) < 1e-6);
}

TEST_CASE("linear, scale_shift and broadcast gradients") {
    Rng rng(45);
    Tensor x = random_tensor({6}, rng);
    Tensor w = random_tensor({4, 6}, rng);
    Tensor b = random_tensor({4}, rng);

    auto build = [&](bool grad) {
        auto xn = ad::leaf(x, grad);
        auto wn = ad::leaf(w, grad);
        auto bn = ad::leaf(b, grad);
        auto y = ad::linear(xn, wn, bn);
        return std::make_tuple(ad::mean(ad::broadcast_spatial(y, 3, 2)), xn, wn, bn);
    };
    auto [root, xn, wn, bn] = build(true);
    ad::backward(root);
    auto loss = [&]() { return std::get<0>(build(false))->value.data[0]; };
    CHECK(max_rel_err(finite_difference_wrt(x, loss), xn->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(w, loss), wn->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(b, loss), bn->grad) < 1e-6);

    Tensor s = Tensor::scalar(1.7);
    Tensor sb = Tensor::scalar(-0.3);
    auto build2 = [&](bool grad) {
        auto xn2 = ad::leaf(x, grad);
        auto sn = ad::leaf(s, grad);
        auto bn2 = ad::leaf(sb, grad);
        return std::make_tuple(ad::mean(ad::scale_shift(xn2, sn, bn2)), xn2, sn, bn2);
    };
    auto [root2, xn2, sn, bn2] = build2(true);
    ad::backward(root2);
    auto loss2 = [&]() { return std::get<0>(build2(false))->value.data[0]; };
    CHECK(max_rel_err(finite_difference_wrt(x, loss2), xn2->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(s, loss2), sn->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(sb, loss2), bn2->grad) < 1e-6);
}

TEST_CASE("cosine_map gradients match finite differences") {
    Rng rng(46);
    Tensor a = random_tensor({5}, rng);
    Tensor v = random_tensor({5, 3, 3}, rng);

    auto build = [&](bool grad) {
        auto an = ad::leaf(a, grad);
        auto vn = ad::leaf(v, grad);
        return std::make_tuple(ad::mean(ad::cosine_map(an, vn)), an, vn);
    };
    auto [root, an, vn] = build(true);
    ad::backward(root);
    auto loss = [&]() { return std::get<0>(build(false))->value.data[0]; };
    CHECK(max_rel_err(finite_difference_wrt(a, loss), an->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(v, loss), vn->grad) < 1e-6);
}

TEST_CASE("cosine_map treats zero-norm vectors as neutral") {
    Tensor a = Tensor::zeros({4});
    Tensor v = Tensor::full({4, 2, 2}, 0.5);
    auto cos = ad::cosine_map(ad::constant(a), ad::constant(v));
    for (double c : cos->value.data) CHECK(c == doctest::Approx(0.0));
}

TEST_CASE("classification and bce losses match finite differences") {
    Rng rng(47);
    Tensor logits = random_tensor({7}, rng, -2.0, 2.0);

    CHECK(check_unary(logits, [](ad::NodePtr n) { return ad::ce_with_index(n, 3); }) < 1e-6);

    Tensor soft({7});
    double s = 0.0;
    for (long i = 0; i < 7; ++i) {
        soft.data[static_cast<size_t>(i)] = std::exp(rng.uniform(-1.0, 1.0));
        s += soft.data[static_cast<size_t>(i)];
    }
    for (double& v : soft.data) v /= s;
    CHECK(check_unary(logits, [&](ad::NodePtr n) { return ad::ce_with_soft_target(n, soft); }) < 1e-6);

    Tensor p = Tensor::scalar(0.37);
    CHECK(check_unary(p, [](ad::NodePtr n) { return ad::bce_prob(n, 1.0); }) < 1e-6);
    CHECK(check_unary(p, [](ad::NodePtr n) { return ad::bce_prob(n, 0.0); }) < 1e-6);
}

TEST_CASE("blend, concat, stack and weighted_sum gradients") {
    Rng rng(48);
    Tensor x = random_tensor({3, 4, 4}, rng);
    Tensor other = random_tensor({3, 4, 4}, rng);
    Tensor mask({4, 4});
    for (long i = 0; i < 16; ++i) mask.data[static_cast<size_t>(i)] = (i % 3 == 0) ? 1.0 : 0.0;

    CHECK(check_unary(x, [&](ad::NodePtr n) { return ad::mean(ad::blend(n, other, mask)); }) < 1e-6);

    Tensor y = random_tensor({2, 4, 4}, rng);
    auto build = [&](bool grad) {
        auto xn = ad::leaf(x, grad);
        auto yn = ad::leaf(y, grad);
        auto cat = ad::concat_channels(xn, yn);
        auto st = ad::stack_time({cat, cat});
        return std::make_tuple(ad::mean(st), xn, yn);
    };
    auto [root, xn, yn] = build(true);
    ad::backward(root);
    auto loss = [&]() { return std::get<0>(build(false))->value.data[0]; };
    CHECK(max_rel_err(finite_difference_wrt(x, loss), xn->grad) < 1e-6);
    CHECK(max_rel_err(finite_difference_wrt(y, loss), yn->grad) < 1e-6);

    auto a = ad::leaf(Tensor::scalar(2.0), true);
    auto b = ad::leaf(Tensor::scalar(-1.0), true);
    auto ws = ad::weighted_sum({a, b}, {0.25, 4.0});
    CHECK(ws->value.data[0] == doctest::Approx(0.25 * 2.0 - 4.0));
    ad::backward(ws);
    CHECK(a->grad.data[0] == doctest::Approx(0.25));
    CHECK(b->grad.data[0] == doctest::Approx(4.0));
}

TEST_CASE("constants receive no gradients and frozen branches stay zero") {
    Rng rng(49);
    Tensor x = random_tensor({2, 4, 4}, rng);
    Tensor w = random_tensor({2, 2, 3, 3}, rng);
    auto xn = ad::leaf(x, true);
    auto wn = ad::leaf(w, false);  // frozen
    auto y = ad::conv2d(xn, wn, nullptr, 1, 1);
    auto root = ad::mean(y);
    ad::backward(root);
    CHECK(xn->grad_ready);
    CHECK_FALSE(wn->grad_ready);  // never touched
}

TEST_CASE("backward supports multiple seeds accumulating on shared nodes") {
    Tensor x = Tensor::full({3}, 2.0);
    auto xn = ad::leaf(x, true);
    auto doubled = ad::affine(xn, 2.0, 0.0);
    auto m = ad::mean(doubled);
    Tensor seed_vec = Tensor::full({3}, 0.5);
    ad::backward({{m, Tensor::scalar(1.0)}, {doubled, seed_vec}});
    // d(mean)/dx = 2/3 each; plus seeded 0.5 * 2 on the affine path.
    for (long i = 0; i < 3; ++i)
        CHECK(xn->grad.data[static_cast<size_t>(i)] == doctest::Approx(2.0 / 3.0 + 1.0));
}
