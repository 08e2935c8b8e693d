// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0
//
// Shared oracles for the test suites. The finite-difference checker is the
// independent reference for every analytic gradient in the project and must
// not call into the backward pass it validates.

#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "avinpaint/params.hpp"
#include "avinpaint/rng.hpp"
#include "avinpaint/tensor.hpp"

namespace avi::testing {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    long worst_index = -1;
    long checked = 0;
};

// Central finite differences over every scalar in `params`, compared against
// `analytic(name)` gradients produced by the caller's backward pass.
// `loss(params)` must be a pure function of the parameter values.
inline GradCheckReport finite_difference_check(
    ParamSet& params, const std::function<double()>& loss,
    const std::function<const Tensor*(const std::string&)>& analytic, double step = 1e-5) {
    GradCheckReport report;
    for (auto& [name, tensor] : params.items()) {
        const Tensor* grad = analytic(name);
        for (long i = 0; i < tensor.numel(); ++i) {
            const size_t s = static_cast<size_t>(i);
            const double saved = tensor.data[s];
            const double h = step * std::max(1.0, std::fabs(saved));
            tensor.data[s] = saved + h;
            const double up = loss();
            tensor.data[s] = saved - h;
            const double down = loss();
            tensor.data[s] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = grad ? grad->data[s] : 0.0;
            const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
            const double rel = std::fabs(fd - an) / denom;
            ++report.checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

// Finite differences of a scalar function with respect to one tensor input.
inline Tensor finite_difference_wrt(Tensor& x, const std::function<double()>& loss,
                                    double step = 1e-5) {
    Tensor fd(x.shape);
    for (long i = 0; i < x.numel(); ++i) {
        const size_t s = static_cast<size_t>(i);
        const double saved = x.data[s];
        const double h = step * std::max(1.0, std::fabs(saved));
        x.data[s] = saved + h;
        const double up = loss();
        x.data[s] = saved - h;
        const double down = loss();
        x.data[s] = saved;
        fd.data[s] = (up - down) / (2.0 * h);
    }
    return fd;
}

inline double max_rel_err(const Tensor& a, const Tensor& b) {
    double worst = 0.0;
    for (long i = 0; i < a.numel(); ++i) {
        const size_t s = static_cast<size_t>(i);
        const double denom = std::max({std::fabs(a.data[s]), std::fabs(b.data[s]), 1e-8});
        worst = std::max(worst, std::fabs(a.data[s] - b.data[s]) / denom);
    }
    return worst;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace avi::testing
