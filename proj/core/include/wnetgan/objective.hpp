#pragma once

#include "wnetgan/autograd.hpp"
#include "wnetgan/tensor.hpp"

namespace wnetgan::objective {

using nn::Tensor;
using nn::Var;

struct LossWeights {
    float lambda_l1 = 100.0f;
    float real_label = 1.0f;
    float fake_label = 0.0f;

    void validate() const;  // lambda_l1 >= 0
};

// --- plain reductions (double accumulation) ---------------------------------
// Least-squares adversarial terms; maps are probability maps in (0,1).

// mean((d_on_real - 1)^2) + mean(d_on_fake^2)
double d_loss(const Tensor& d_on_real, const Tensor& d_on_fake);

// mean((d_on_fake - 1)^2)
double g_adv_loss(const Tensor& d_on_fake);

// mean |generated - ground_truth| over valid pixels (all when mask is null).
double l1_loss(const Tensor& generated, const Tensor& ground_truth,
               const Tensor* valid_mask = nullptr);

// g_adv_loss + lambda_l1 * l1_loss
double g_total_loss(const Tensor& d_on_fake, const Tensor& generated,
                    const Tensor& ground_truth, const LossWeights& weights,
                    const Tensor* valid_mask = nullptr);

// --- graph ops (same forms, differentiable) ----------------------------------

Var mse_to_label(const Var& map, float label);
Var d_loss_node(const Var& d_on_real, const Var& d_on_fake, const LossWeights& weights);
Var g_adv_loss_node(const Var& d_on_fake, const LossWeights& weights);
Var l1_loss_node(const Var& generated, const Var& ground_truth,
                 const Tensor* valid_mask = nullptr);
Var g_total_loss_node(const Var& d_on_fake, const Var& generated,
                      const Var& ground_truth, const LossWeights& weights,
                      const Tensor* valid_mask = nullptr);

}  // namespace wnetgan::objective
