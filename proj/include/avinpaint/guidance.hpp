// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0
//
// Transfer losses computed through the frozen guider network plus the total
// objective composition. Targets (the clean-frame attention map and the
// audio classifier logits) are always gradient-detached; gradients flow only
// through the inpainted-frame branch.

#pragma once

#include <string>
#include <vector>

#include "avinpaint/autodiff.hpp"
#include "avinpaint/tensor.hpp"

namespace avi::guidance {

struct LossWeights {
    double l1 = 1.0;
    double adv = 0.01;
    double att_av = 2.0;
    double cls_av = 1.0;

    void validate() const;
};

struct LossBundle {
    double l1 = 0.0;
    double adv = 0.0;
    double att_av = 0.0;
    double cls_av = 0.0;
    double total = 0.0;
};

// Mean squared difference between the two attention maps.
double av_attention_loss(const Tensor& m_gt, const Tensor& m_inp);
ad::NodePtr av_attention_loss_graph(ad::NodePtr m_inp, const Tensor& m_gt);

// Cross-entropy of softmax(inpainted logits) against the soft target
// softmax(audio logits).
double av_class_consistency_loss(const Tensor& audio_logits, const Tensor& inpainted_logits);
ad::NodePtr av_class_consistency_loss_graph(ad::NodePtr inpainted_logits,
                                            const Tensor& audio_logits);

Tensor softmax(const Tensor& logits);

// Weighted sum per the published objective; aborts naming the term if any
// component is non-finite.
LossBundle total_loss(double l1, double adv, double att_av, double cls_av,
                      const LossWeights& weights);

// Training log rows: step,l1,adv,att_av,cls_av,total.
class LossLog {
  public:
    explicit LossLog(std::string path);
    void append(int step, const LossBundle& bundle);

  private:
    std::string path_;
};

}  // namespace avi::guidance
