// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "avinpaint/conv_kernels.hpp"

namespace avi::ad {

namespace {

NodePtr make_op(Tensor value, std::vector<NodePtr> inputs, std::function<void(Node&)> bw) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs) {
        if (in->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backward_fn = std::move(bw);
    return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw InvalidInputError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                                b.shape_str());
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Stable log-sum-exp plus softmax of a logit vector.
double softmax_lse(const std::vector<double>& logits, std::vector<double>& probs) {
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double s = 0.0;
    for (double v : logits) s += std::exp(v - m);
    const double lse = m + std::log(s);
    probs.resize(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) probs[i] = std::exp(logits[i] - lse);
    return lse;
}

}  // namespace

NodePtr constant(Tensor v) { return leaf(std::move(v), false); }

NodePtr leaf(Tensor v, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    return n;
}

NodePtr conv2d(NodePtr x, NodePtr w, NodePtr b, int stride, int pad) {
    Tensor y = conv2d_forward(x->value, w->value, b ? &b->value : nullptr, stride, pad);
    std::vector<NodePtr> ins = {x, w};
    if (b) ins.push_back(b);
    return make_op(std::move(y), std::move(ins), [stride, pad](Node& n) {
        Node& x_ = *n.inputs[0];
        Node& w_ = *n.inputs[1];
        Node* b_ = n.inputs.size() > 2 ? n.inputs[2].get() : nullptr;
        conv2d_backward(x_.value, w_.value, n.grad, stride, pad,
                        x_.requires_grad ? &x_.g() : nullptr,
                        w_.requires_grad ? &w_.g() : nullptr,
                        (b_ && b_->requires_grad) ? &b_->g() : nullptr);
    });
}

NodePtr conv3d(NodePtr x, NodePtr w, NodePtr b, std::array<int, 3> stride,
               std::array<int, 3> pad) {
    Tensor y = conv3d_forward(x->value, w->value, b ? &b->value : nullptr, stride, pad);
    std::vector<NodePtr> ins = {x, w};
    if (b) ins.push_back(b);
    return make_op(std::move(y), std::move(ins), [stride, pad](Node& n) {
        Node& x_ = *n.inputs[0];
        Node& w_ = *n.inputs[1];
        Node* b_ = n.inputs.size() > 2 ? n.inputs[2].get() : nullptr;
        conv3d_backward(x_.value, w_.value, n.grad, stride, pad,
                        x_.requires_grad ? &x_.g() : nullptr,
                        w_.requires_grad ? &w_.g() : nullptr,
                        (b_ && b_->requires_grad) ? &b_->g() : nullptr);
    });
}

NodePtr linear(NodePtr x, NodePtr w, NodePtr b) {
    const Tensor& xv = x->value;
    const Tensor& wv = w->value;
    if (wv.rank() != 2 || xv.numel() != wv.dim(1))
        throw InvalidInputError("linear: shape mismatch x" + xv.shape_str() + " w" + wv.shape_str());
    const int m = wv.dim(0), k = wv.dim(1);
    Tensor y({m});
    for (int i = 0; i < m; ++i) {
        double s = b ? b->value.data[static_cast<size_t>(i)] : 0.0;
        const double* wr = wv.data.data() + static_cast<size_t>(i) * k;
        for (int j = 0; j < k; ++j) s += wr[j] * xv.data[static_cast<size_t>(j)];
        y.data[static_cast<size_t>(i)] = s;
    }
    std::vector<NodePtr> ins = {x, w};
    if (b) ins.push_back(b);
    return make_op(std::move(y), std::move(ins), [m, k](Node& n) {
        Node& x_ = *n.inputs[0];
        Node& w_ = *n.inputs[1];
        Node* b_ = n.inputs.size() > 2 ? n.inputs[2].get() : nullptr;
        for (int i = 0; i < m; ++i) {
            const double gi = n.grad.data[static_cast<size_t>(i)];
            if (gi == 0.0) continue;
            if (w_.requires_grad) {
                double* dwr = w_.g().data.data() + static_cast<size_t>(i) * k;
                for (int j = 0; j < k; ++j) dwr[j] += gi * x_.value.data[static_cast<size_t>(j)];
            }
            if (x_.requires_grad) {
                const double* wr = w_.value.data.data() + static_cast<size_t>(i) * k;
                double* dx = x_.g().data.data();
                for (int j = 0; j < k; ++j) dx[j] += gi * wr[j];
            }
            if (b_ && b_->requires_grad) b_->g().data[static_cast<size_t>(i)] += gi;
        }
    });
}

NodePtr relu(NodePtr x) {
    Tensor y = x->value;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return make_op(std::move(y), {x}, [](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        Tensor& dx = x_.g();
        for (long i = 0; i < n.value.numel(); ++i)
            if (x_.value.data[static_cast<size_t>(i)] > 0.0)
                dx.data[static_cast<size_t>(i)] += n.grad.data[static_cast<size_t>(i)];
    });
}

NodePtr leaky_relu(NodePtr x, double slope) {
    Tensor y = x->value;
    for (double& v : y.data) v = v > 0.0 ? v : slope * v;
    return make_op(std::move(y), {x}, [slope](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        Tensor& dx = x_.g();
        for (long i = 0; i < n.value.numel(); ++i) {
            const double f = x_.value.data[static_cast<size_t>(i)] > 0.0 ? 1.0 : slope;
            dx.data[static_cast<size_t>(i)] += f * n.grad.data[static_cast<size_t>(i)];
        }
    });
}

NodePtr sigmoid(NodePtr x) {
    Tensor y = x->value;
    for (double& v : y.data) v = stable_sigmoid(v);
    return make_op(std::move(y), {x}, [](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        Tensor& dx = x_.g();
        for (long i = 0; i < n.value.numel(); ++i) {
            const double s = n.value.data[static_cast<size_t>(i)];
            dx.data[static_cast<size_t>(i)] += s * (1.0 - s) * n.grad.data[static_cast<size_t>(i)];
        }
    });
}

NodePtr add(NodePtr a, NodePtr b) {
    check_same_shape(a->value, b->value, "add");
    Tensor y = a->value;
    for (long i = 0; i < y.numel(); ++i) y.data[static_cast<size_t>(i)] += b->value.data[static_cast<size_t>(i)];
    return make_op(std::move(y), {a, b}, [](Node& n) {
        for (int s = 0; s < 2; ++s) {
            Node& in = *n.inputs[static_cast<size_t>(s)];
            if (!in.requires_grad) continue;
            Tensor& d = in.g();
            for (long i = 0; i < n.value.numel(); ++i)
                d.data[static_cast<size_t>(i)] += n.grad.data[static_cast<size_t>(i)];
        }
    });
}

NodePtr mul(NodePtr a, NodePtr b) {
    check_same_shape(a->value, b->value, "mul");
    Tensor y = a->value;
    for (long i = 0; i < y.numel(); ++i) y.data[static_cast<size_t>(i)] *= b->value.data[static_cast<size_t>(i)];
    return make_op(std::move(y), {a, b}, [](Node& n) {
        Node& a_ = *n.inputs[0];
        Node& b_ = *n.inputs[1];
        if (a_.requires_grad) {
            Tensor& d = a_.g();
            for (long i = 0; i < n.value.numel(); ++i)
                d.data[static_cast<size_t>(i)] +=
                    b_.value.data[static_cast<size_t>(i)] * n.grad.data[static_cast<size_t>(i)];
        }
        if (b_.requires_grad) {
            Tensor& d = b_.g();
            for (long i = 0; i < n.value.numel(); ++i)
                d.data[static_cast<size_t>(i)] +=
                    a_.value.data[static_cast<size_t>(i)] * n.grad.data[static_cast<size_t>(i)];
        }
    });
}

NodePtr affine(NodePtr x, double scale, double shift) {
    Tensor y = x->value;
    for (double& v : y.data) v = scale * v + shift;
    return make_op(std::move(y), {x}, [scale](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        Tensor& dx = x_.g();
        for (long i = 0; i < n.value.numel(); ++i)
            dx.data[static_cast<size_t>(i)] += scale * n.grad.data[static_cast<size_t>(i)];
    });
}

NodePtr scale_shift(NodePtr x, NodePtr s, NodePtr b) {
    if (s->value.numel() != 1 || b->value.numel() != 1)
        throw InvalidInputError("scale_shift: s and b must be scalars");
    const double sv = s->value.data[0], bv = b->value.data[0];
    Tensor y = x->value;
    for (double& v : y.data) v = sv * v + bv;
    return make_op(std::move(y), {x, s, b}, [sv](Node& n) {
        Node& x_ = *n.inputs[0];
        Node& s_ = *n.inputs[1];
        Node& b_ = *n.inputs[2];
        if (x_.requires_grad) {
            Tensor& dx = x_.g();
            for (long i = 0; i < n.value.numel(); ++i)
                dx.data[static_cast<size_t>(i)] += sv * n.grad.data[static_cast<size_t>(i)];
        }
        if (s_.requires_grad) {
            double acc = 0.0;
            for (long i = 0; i < n.value.numel(); ++i)
                acc += x_.value.data[static_cast<size_t>(i)] * n.grad.data[static_cast<size_t>(i)];
            s_.g().data[0] += acc;
        }
        if (b_.requires_grad) {
            double acc = 0.0;
            for (long i = 0; i < n.value.numel(); ++i) acc += n.grad.data[static_cast<size_t>(i)];
            b_.g().data[0] += acc;
        }
    });
}

NodePtr gap2d(NodePtr x) {
    if (x->value.rank() != 3) throw InvalidInputError("gap2d: expected (C,H,W)");
    const int c = x->value.dim(0);
    const long hw = static_cast<long>(x->value.dim(1)) * x->value.dim(2);
    Tensor y({c});
    for (int ci = 0; ci < c; ++ci) {
        double s = 0.0;
        const double* p = x->value.data.data() + ci * hw;
        for (long i = 0; i < hw; ++i) s += p[i];
        y.data[static_cast<size_t>(ci)] = s / static_cast<double>(hw);
    }
    return make_op(std::move(y), {x}, [c, hw](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        Tensor& dx = x_.g();
        for (int ci = 0; ci < c; ++ci) {
            const double g = n.grad.data[static_cast<size_t>(ci)] / static_cast<double>(hw);
            double* p = dx.data.data() + ci * hw;
            for (long i = 0; i < hw; ++i) p[i] += g;
        }
    });
}

NodePtr reduce_max(NodePtr x) {
    long arg = 0;
    double best = x->value.data[0];
    for (long i = 1; i < x->value.numel(); ++i) {
        if (x->value.data[static_cast<size_t>(i)] > best) {
            best = x->value.data[static_cast<size_t>(i)];
            arg = i;
        }
    }
    return make_op(Tensor::scalar(best), {x}, [arg](Node& n) {
        Node& x_ = *n.inputs[0];
        if (x_.requires_grad) x_.g().data[static_cast<size_t>(arg)] += n.grad.data[0];
    });
}

NodePtr mean(NodePtr x) {
    const long n_el = x->value.numel();
    double s = 0.0;
    for (double v : x->value.data) s += v;
    return make_op(Tensor::scalar(s / static_cast<double>(n_el)), {x}, [n_el](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        const double g = n.grad.data[0] / static_cast<double>(n_el);
        Tensor& dx = x_.g();
        for (long i = 0; i < n_el; ++i) dx.data[static_cast<size_t>(i)] += g;
    });
}

NodePtr concat_channels(NodePtr a, NodePtr b) {
    const Tensor& av = a->value;
    const Tensor& bv = b->value;
    if (av.rank() != 3 || bv.rank() != 3 || av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2))
        throw InvalidInputError("concat_channels: incompatible shapes");
    Tensor y({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
    std::copy(av.data.begin(), av.data.end(), y.data.begin());
    std::copy(bv.data.begin(), bv.data.end(), y.data.begin() + av.numel());
    const long na = av.numel();
    return make_op(std::move(y), {a, b}, [na](Node& n) {
        Node& a_ = *n.inputs[0];
        Node& b_ = *n.inputs[1];
        if (a_.requires_grad) {
            Tensor& d = a_.g();
            for (long i = 0; i < na; ++i)
                d.data[static_cast<size_t>(i)] += n.grad.data[static_cast<size_t>(i)];
        }
        if (b_.requires_grad) {
            Tensor& d = b_.g();
            for (long i = 0; i < n.value.numel() - na; ++i)
                d.data[static_cast<size_t>(i)] += n.grad.data[static_cast<size_t>(na + i)];
        }
    });
}

NodePtr broadcast_spatial(NodePtr v, int h, int w) {
    if (v->value.rank() != 1) throw InvalidInputError("broadcast_spatial: expected (C)");
    const int c = v->value.dim(0);
    Tensor y({c, h, w});
    const long hw = static_cast<long>(h) * w;
    for (int ci = 0; ci < c; ++ci)
        std::fill_n(y.data.begin() + ci * hw, hw, v->value.data[static_cast<size_t>(ci)]);
    return make_op(std::move(y), {v}, [c, hw](Node& n) {
        Node& v_ = *n.inputs[0];
        if (!v_.requires_grad) return;
        Tensor& dv = v_.g();
        for (int ci = 0; ci < c; ++ci) {
            double s = 0.0;
            const double* p = n.grad.data.data() + ci * hw;
            for (long i = 0; i < hw; ++i) s += p[i];
            dv.data[static_cast<size_t>(ci)] += s;
        }
    });
}

NodePtr upsample_nearest2(NodePtr x) {
    if (x->value.rank() != 3) throw InvalidInputError("upsample_nearest2: expected (C,H,W)");
    const int c = x->value.dim(0), h = x->value.dim(1), w = x->value.dim(2);
    Tensor y({c, 2 * h, 2 * w});
    for (int ci = 0; ci < c; ++ci)
        for (int yy = 0; yy < 2 * h; ++yy)
            for (int xx = 0; xx < 2 * w; ++xx)
                y.at3(ci, yy, xx) = x->value.at3(ci, yy / 2, xx / 2);
    return make_op(std::move(y), {x}, [c, h, w](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        Tensor& dx = x_.g();
        for (int ci = 0; ci < c; ++ci)
            for (int yy = 0; yy < 2 * h; ++yy)
                for (int xx = 0; xx < 2 * w; ++xx)
                    dx.at3(ci, yy / 2, xx / 2) += n.grad.at3(ci, yy, xx);
    });
}

NodePtr stack_time(const std::vector<NodePtr>& frames) {
    if (frames.empty()) throw InvalidInputError("stack_time: no frames");
    const Tensor& f0 = frames[0]->value;
    if (f0.rank() != 3) throw InvalidInputError("stack_time: expected (C,H,W) frames");
    const int c = f0.dim(0), h = f0.dim(1), w = f0.dim(2);
    const int t = static_cast<int>(frames.size());
    Tensor y({c, t, h, w});
    const long hw = static_cast<long>(h) * w;
    for (int ti = 0; ti < t; ++ti) {
        check_same_shape(frames[static_cast<size_t>(ti)]->value, f0, "stack_time");
        const Tensor& fv = frames[static_cast<size_t>(ti)]->value;
        for (int ci = 0; ci < c; ++ci)
            std::copy_n(fv.data.data() + ci * hw, hw,
                        y.data.data() + (static_cast<long>(ci) * t + ti) * hw);
    }
    return make_op(std::move(y), std::vector<NodePtr>(frames), [c, t, hw](Node& n) {
        for (int ti = 0; ti < t; ++ti) {
            Node& f = *n.inputs[static_cast<size_t>(ti)];
            if (!f.requires_grad) continue;
            Tensor& df = f.g();
            for (int ci = 0; ci < c; ++ci) {
                const double* src = n.grad.data.data() + (static_cast<long>(ci) * t + ti) * hw;
                double* dst = df.data.data() + ci * hw;
                for (long i = 0; i < hw; ++i) dst[i] += src[i];
            }
        }
    });
}

NodePtr cosine_map(NodePtr a, NodePtr v, double eps) {
    const Tensor& av = a->value;
    const Tensor& vv = v->value;
    if (av.rank() != 1 || vv.rank() != 3 || av.dim(0) != vv.dim(0))
        throw InvalidInputError("cosine_map: expected (C) and (C,H,W) with matching C");
    if (!av.all_finite() || !vv.all_finite())
        throw InvalidInputError("cosine_map: non-finite input");
    const int c = av.dim(0), h = vv.dim(1), w = vv.dim(2);
    const long hw = static_cast<long>(h) * w;

    double na = 0.0;
    for (double x : av.data) na += x * x;
    na = std::sqrt(na);
    const double na_eff = std::max(na, eps);

    Tensor y({h, w});
    for (long p = 0; p < hw; ++p) {
        double nv = 0.0, dot = 0.0;
        for (int ci = 0; ci < c; ++ci) {
            const double vc = vv.data[static_cast<size_t>(ci) * hw + p];
            nv += vc * vc;
            dot += vc * av.data[static_cast<size_t>(ci)];
        }
        const double nv_eff = std::max(std::sqrt(nv), eps);
        y.data[static_cast<size_t>(p)] = dot / (na_eff * nv_eff);
    }
    return make_op(std::move(y), {a, v}, [c, hw, eps, na_eff, na](Node& n) {
        Node& a_ = *n.inputs[0];
        Node& v_ = *n.inputs[1];
        const Tensor& av_ = a_.value;
        const Tensor& vv_ = v_.value;
        const bool a_clamped = na < eps;
        for (long p = 0; p < hw; ++p) {
            const double g = n.grad.data[static_cast<size_t>(p)];
            if (g == 0.0) continue;
            double nv = 0.0;
            for (int ci = 0; ci < c; ++ci) {
                const double vc = vv_.data[static_cast<size_t>(ci) * hw + p];
                nv += vc * vc;
            }
            const double nv_sqrt = std::sqrt(nv);
            const double nv_eff = std::max(nv_sqrt, eps);
            const bool v_clamped = nv_sqrt < eps;
            const double cval = n.value.data[static_cast<size_t>(p)];
            for (int ci = 0; ci < c; ++ci) {
                const double ac = av_.data[static_cast<size_t>(ci)];
                const double vc = vv_.data[static_cast<size_t>(ci) * hw + p];
                const double ahat = ac / na_eff;
                const double vhat = vc / nv_eff;
                if (a_.requires_grad) {
                    const double da = a_clamped ? vhat / na_eff : (vhat - cval * ahat) / na_eff;
                    a_.g().data[static_cast<size_t>(ci)] += g * da;
                }
                if (v_.requires_grad) {
                    const double dv = v_clamped ? ahat / nv_eff : (ahat - cval * vhat) / nv_eff;
                    v_.g().data[static_cast<size_t>(ci) * hw + p] += g * dv;
                }
            }
        }
    });
}

NodePtr blend(NodePtr x, const Tensor& other, const Tensor& mask) {
    const Tensor& xv = x->value;
    if (xv.rank() != 3 || mask.rank() != 2 || xv.dim(1) != mask.dim(0) || xv.dim(2) != mask.dim(1))
        throw InvalidInputError("blend: mask must be (H,W) matching x");
    check_same_shape(xv, other, "blend");
    const int c = xv.dim(0);
    const long hw = mask.numel();
    Tensor y = xv;
    for (int ci = 0; ci < c; ++ci)
        for (long p = 0; p < hw; ++p) {
            const double m = mask.data[static_cast<size_t>(p)];
            const size_t i = static_cast<size_t>(ci) * hw + p;
            y.data[i] = m * xv.data[i] + (1.0 - m) * other.data[i];
        }
    Tensor mask_copy = mask;
    return make_op(std::move(y), {x}, [c, hw, mask_copy](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        Tensor& dx = x_.g();
        for (int ci = 0; ci < c; ++ci)
            for (long p = 0; p < hw; ++p) {
                const size_t i = static_cast<size_t>(ci) * hw + p;
                dx.data[i] += mask_copy.data[static_cast<size_t>(p)] * n.grad.data[i];
            }
    });
}

NodePtr bce_prob(NodePtr p, double y) {
    if (p->value.numel() != 1) throw InvalidInputError("bce_prob: expected scalar probability");
    const double raw = p->value.data[0];
    const double pc = std::clamp(raw, 1e-12, 1.0 - 1e-12);
    const double loss = -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
    return make_op(Tensor::scalar(loss), {p}, [pc, y](Node& n) {
        Node& p_ = *n.inputs[0];
        if (!p_.requires_grad) return;
        p_.g().data[0] += n.grad.data[0] * (pc - y) / (pc * (1.0 - pc));
    });
}

NodePtr mean_sq_diff(NodePtr x, const Tensor& target) {
    check_same_shape(x->value, target, "mean_sq_diff");
    const long n_el = x->value.numel();
    double s = 0.0;
    for (long i = 0; i < n_el; ++i) {
        const double d = x->value.data[static_cast<size_t>(i)] - target.data[static_cast<size_t>(i)];
        s += d * d;
    }
    Tensor tcopy = target;
    return make_op(Tensor::scalar(s / static_cast<double>(n_el)), {x}, [n_el, tcopy](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        const double g = 2.0 * n.grad.data[0] / static_cast<double>(n_el);
        Tensor& dx = x_.g();
        for (long i = 0; i < n_el; ++i)
            dx.data[static_cast<size_t>(i)] +=
                g * (x_.value.data[static_cast<size_t>(i)] - tcopy.data[static_cast<size_t>(i)]);
    });
}

NodePtr mean_abs_diff(NodePtr x, const Tensor& target) {
    check_same_shape(x->value, target, "mean_abs_diff");
    const long n_el = x->value.numel();
    double s = 0.0;
    for (long i = 0; i < n_el; ++i)
        s += std::fabs(x->value.data[static_cast<size_t>(i)] - target.data[static_cast<size_t>(i)]);
    Tensor tcopy = target;
    return make_op(Tensor::scalar(s / static_cast<double>(n_el)), {x}, [n_el, tcopy](Node& n) {
        Node& x_ = *n.inputs[0];
        if (!x_.requires_grad) return;
        const double g = n.grad.data[0] / static_cast<double>(n_el);
        Tensor& dx = x_.g();
        for (long i = 0; i < n_el; ++i) {
            const double d =
                x_.value.data[static_cast<size_t>(i)] - tcopy.data[static_cast<size_t>(i)];
            if (d > 0.0)
                dx.data[static_cast<size_t>(i)] += g;
            else if (d < 0.0)
                dx.data[static_cast<size_t>(i)] -= g;
        }
    });
}

NodePtr ce_with_index(NodePtr logits, int label) {
    const long k = logits->value.numel();
    if (label < 0 || label >= k)
        throw InvalidInputError("ce_with_index: label " + std::to_string(label) + " outside [0," +
                                std::to_string(k) + ")");
    std::vector<double> probs;
    const double lse = softmax_lse(logits->value.data, probs);
    const double loss = lse - logits->value.data[static_cast<size_t>(label)];
    return make_op(Tensor::scalar(loss), {logits}, [probs, label](Node& n) {
        Node& l_ = *n.inputs[0];
        if (!l_.requires_grad) return;
        const double g = n.grad.data[0];
        Tensor& dl = l_.g();
        for (size_t i = 0; i < probs.size(); ++i) dl.data[i] += g * probs[i];
        dl.data[static_cast<size_t>(label)] -= g;
    });
}

NodePtr ce_with_soft_target(NodePtr logits, const Tensor& p) {
    if (logits->value.numel() != p.numel())
        throw InvalidInputError("ce_with_soft_target: length mismatch");
    std::vector<double> q;
    const double lse = softmax_lse(logits->value.data, q);
    double loss = 0.0;
    for (long i = 0; i < p.numel(); ++i)
        loss += p.data[static_cast<size_t>(i)] * (lse - logits->value.data[static_cast<size_t>(i)]);
    Tensor pcopy = p;
    return make_op(Tensor::scalar(loss), {logits}, [q, pcopy](Node& n) {
        Node& l_ = *n.inputs[0];
        if (!l_.requires_grad) return;
        const double g = n.grad.data[0];
        Tensor& dl = l_.g();
        for (size_t i = 0; i < q.size(); ++i) dl.data[i] += g * (q[i] - pcopy.data[i]);
    });
}

NodePtr weighted_sum(const std::vector<NodePtr>& xs, const std::vector<double>& ws) {
    if (xs.empty() || xs.size() != ws.size())
        throw InvalidInputError("weighted_sum: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        if (xs[i]->value.numel() != 1) throw InvalidInputError("weighted_sum: inputs must be scalars");
        s += ws[i] * xs[i]->value.data[0];
    }
    std::vector<double> wcopy = ws;
    return make_op(Tensor::scalar(s), std::vector<NodePtr>(xs), [wcopy](Node& n) {
        for (size_t i = 0; i < n.inputs.size(); ++i) {
            Node& in = *n.inputs[i];
            if (in.requires_grad) in.g().data[0] += wcopy[i] * n.grad.data[0];
        }
    });
}

void backward(const std::vector<std::pair<NodePtr, Tensor>>& seeds) {
    for (const auto& [node, seed] : seeds) {
        if (!node->value.same_shape(seed))
            throw InvalidInputError("backward: seed shape mismatch");
        Tensor& g = node->g();
        for (long i = 0; i < seed.numel(); ++i)
            g.data[static_cast<size_t>(i)] += seed.data[static_cast<size_t>(i)];
    }

    // Iterative DFS post-order over inputs; reversing it yields a topological
    // order with every consumer processed before its producers.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    for (const auto& [node, seed] : seeds) {
        if (visited.count(node.get())) continue;
        stack.emplace_back(node.get(), 0);
        visited.insert(node.get());
        while (!stack.empty()) {
            auto& [cur, idx] = stack.back();
            if (idx < cur->inputs.size()) {
                Node* next = cur->inputs[idx++].get();
                if (next->requires_grad && !visited.count(next)) {
                    visited.insert(next);
                    stack.emplace_back(next, 0);
                }
            } else {
                order.push_back(cur);
                stack.pop_back();
            }
        }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad_ready) n->backward_fn(*n);
    }
}

void backward(const NodePtr& scalar_root) {
    if (scalar_root->value.numel() != 1)
        throw InvalidInputError("backward: root must be a scalar");
    backward({{scalar_root, Tensor::scalar(1.0)}});
}

}  // namespace avi::ad
