// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/guidance.hpp"

#include <cmath>
#include <fstream>

#include "avinpaint/common.hpp"

namespace avi::guidance {

void LossWeights::validate() const {
    for (double w : {l1, adv, att_av, cls_av})
        if (!(std::isfinite(w) && w >= 0.0))
            throw ConfigError("loss weights must be finite and nonnegative");
}

double av_attention_loss(const Tensor& m_gt, const Tensor& m_inp) {
    if (!m_gt.same_shape(m_inp))
        throw InvalidInputError("av_attention_loss: attention map shapes differ");
    double s = 0.0;
    for (long i = 0; i < m_gt.numel(); ++i) {
        const double d = m_gt.data[static_cast<size_t>(i)] - m_inp.data[static_cast<size_t>(i)];
        s += d * d;
    }
    return s / static_cast<double>(m_gt.numel());
}

ad::NodePtr av_attention_loss_graph(ad::NodePtr m_inp, const Tensor& m_gt) {
    return ad::mean_sq_diff(std::move(m_inp), m_gt);
}

Tensor softmax(const Tensor& logits) {
    double m = logits.data[0];
    for (double v : logits.data) m = std::max(m, v);
    Tensor p(logits.shape);
    double s = 0.0;
    for (long i = 0; i < logits.numel(); ++i) {
        p.data[static_cast<size_t>(i)] = std::exp(logits.data[static_cast<size_t>(i)] - m);
        s += p.data[static_cast<size_t>(i)];
    }
    for (double& v : p.data) v /= s;
    return p;
}

double av_class_consistency_loss(const Tensor& audio_logits, const Tensor& inpainted_logits) {
    if (audio_logits.numel() != inpainted_logits.numel())
        throw InvalidInputError("av_class_consistency_loss: logit length mismatch");
    const Tensor p = softmax(audio_logits);
    double m = inpainted_logits.data[0];
    for (double v : inpainted_logits.data) m = std::max(m, v);
    double s = 0.0;
    for (double v : inpainted_logits.data) s += std::exp(v - m);
    const double lse = m + std::log(s);
    double loss = 0.0;
    for (long i = 0; i < p.numel(); ++i)
        loss += p.data[static_cast<size_t>(i)] * (lse - inpainted_logits.data[static_cast<size_t>(i)]);
    return loss;
}

ad::NodePtr av_class_consistency_loss_graph(ad::NodePtr inpainted_logits,
                                            const Tensor& audio_logits) {
    if (inpainted_logits->value.numel() != audio_logits.numel())
        throw InvalidInputError("av_class_consistency_loss: logit length mismatch");
    return ad::ce_with_soft_target(std::move(inpainted_logits), softmax(audio_logits));
}

LossBundle total_loss(double l1, double adv, double att_av, double cls_av,
                      const LossWeights& weights) {
    weights.validate();
    const char* names[4] = {"l1", "adv", "att_av", "cls_av"};
    const double vals[4] = {l1, adv, att_av, cls_av};
    for (int i = 0; i < 4; ++i)
        if (!std::isfinite(vals[i]))
            throw TrainingError(std::string("total_loss: component ") + names[i] +
                                " is non-finite");
    LossBundle b;
    b.l1 = l1;
    b.adv = adv;
    b.att_av = att_av;
    b.cls_av = cls_av;
    b.total = weights.l1 * l1 + weights.adv * adv + weights.att_av * att_av + weights.cls_av * cls_av;
    return b;
}

LossLog::LossLog(std::string path) : path_(std::move(path)) {
    std::ofstream os(path_, std::ios::trunc);
    os << "step,l1,adv,att_av,cls_av,total\n";
    if (!os) throw IoError("cannot open training log: " + path_);
}

void LossLog::append(int step, const LossBundle& bundle) {
    std::ofstream os(path_, std::ios::app);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", step, bundle.l1,
                  bundle.adv, bundle.att_av, bundle.cls_av, bundle.total);
    os << buf;
    if (!os) throw IoError("failed appending to training log: " + path_);
}

}  // namespace avi::guidance
