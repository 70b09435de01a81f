#include "wnetgan/objective.hpp"

#include <cmath>

#include "wnetgan/errors.hpp"
#include "wnetgan/layers.hpp"

namespace wnetgan::objective {

namespace {

void require_nonempty(const Tensor& t, const char* what) {
    if (t.numel() < 1) throw ParameterError(std::string(what) + ": empty tensor");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!(a.shape() == b.shape()))
        throw ParameterError(std::string(what) + ": shapes differ, " + a.shape().str() +
                             " vs " + b.shape().str());
}

double mean_sq_to(const Tensor& t, double label) {
    double acc = 0.0;
    for (float v : t.vec()) {
        const double d = v - label;
        acc += d * d;
    }
    return acc / static_cast<double>(t.numel());
}

}  // namespace

void LossWeights::validate() const {
    if (lambda_l1 < 0.0f) throw ParameterError("lambda_l1 must be >= 0");
}

double d_loss(const Tensor& d_on_real, const Tensor& d_on_fake) {
    require_nonempty(d_on_real, "d_loss");
    require_nonempty(d_on_fake, "d_loss");
    return mean_sq_to(d_on_real, 1.0) + mean_sq_to(d_on_fake, 0.0);
}

double g_adv_loss(const Tensor& d_on_fake) {
    require_nonempty(d_on_fake, "g_adv_loss");
    return mean_sq_to(d_on_fake, 1.0);
}

double l1_loss(const Tensor& generated, const Tensor& ground_truth,
               const Tensor* valid_mask) {
    require_nonempty(generated, "l1_loss");
    require_same_shape(generated, ground_truth, "l1_loss");
    if (valid_mask) require_same_shape(generated, *valid_mask, "l1_loss mask");

    double acc = 0.0;
    double count = 0.0;
    const std::int64_t n = generated.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const double m = valid_mask ? valid_mask->data()[i] : 1.0;
        if (m == 0.0) continue;
        acc += m * std::abs(static_cast<double>(generated.data()[i]) -
                            ground_truth.data()[i]);
        count += m;
    }
    if (count == 0.0) throw ParameterError("l1_loss: empty valid set");
    return acc / count;
}

double g_total_loss(const Tensor& d_on_fake, const Tensor& generated,
                    const Tensor& ground_truth, const LossWeights& weights,
                    const Tensor* valid_mask) {
    weights.validate();
    return g_adv_loss(d_on_fake) +
           static_cast<double>(weights.lambda_l1) *
               l1_loss(generated, ground_truth, valid_mask);
}

Var mse_to_label(const Var& map, float label) {
    require_nonempty(map->value, "mse_to_label");
    Tensor y = Tensor::scalar(static_cast<float>(mean_sq_to(map->value, label)));
    return nn::make_node(std::move(y), {map}, [label](nn::Node& node) {
        const Var& xp = node.parents[0];
        if (!xp->requires_grad) return;
        const float g = node.grad.item();
        const std::int64_t n = xp->value.numel();
        const float scale = 2.0f / static_cast<float>(n);
        const float* x = xp->value.data();
        float* dx = xp->ensure_grad().data();
        for (std::int64_t i = 0; i < n; ++i) dx[i] += g * scale * (x[i] - label);
    });
}

Var d_loss_node(const Var& d_on_real, const Var& d_on_fake, const LossWeights& weights) {
    return nn::add_scalars(mse_to_label(d_on_real, weights.real_label),
                           mse_to_label(d_on_fake, weights.fake_label));
}

Var g_adv_loss_node(const Var& d_on_fake, const LossWeights& weights) {
    return mse_to_label(d_on_fake, weights.real_label);
}

Var l1_loss_node(const Var& generated, const Var& ground_truth,
                 const Tensor* valid_mask) {
    const double value =
        l1_loss(generated->value, ground_truth->value, valid_mask);

    // The mask is captured by value: tiny relative to activations.
    Tensor mask_copy = valid_mask ? *valid_mask : Tensor();
    const bool has_mask = valid_mask != nullptr;
    double weight_sum = 0.0;
    if (has_mask) {
        for (float m : mask_copy.vec()) weight_sum += m;
    } else {
        weight_sum = static_cast<double>(generated->value.numel());
    }

    Tensor y = Tensor::scalar(static_cast<float>(value));
    return nn::make_node(
        std::move(y), {generated, ground_truth},
        [mask = std::move(mask_copy), has_mask, weight_sum](nn::Node& node) {
            const Var& gen = node.parents[0];
            const Var& gt = node.parents[1];
            const float g = node.grad.item();
            const std::int64_t n = gen->value.numel();
            const float inv = static_cast<float>(1.0 / weight_sum);
            const float* a = gen->value.data();
            const float* b = gt->value.data();
            for (std::int64_t i = 0; i < n; ++i) {
                const float m = has_mask ? mask.data()[i] : 1.0f;
                if (m == 0.0f) continue;
                const float d = a[i] - b[i];
                const float s = d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f);
                const float contrib = g * s * m * inv;
                if (gen->requires_grad) gen->ensure_grad().data()[i] += contrib;
                if (gt->requires_grad) gt->ensure_grad().data()[i] -= contrib;
            }
        });
}

Var g_total_loss_node(const Var& d_on_fake, const Var& generated,
                      const Var& ground_truth, const LossWeights& weights,
                      const Tensor* valid_mask) {
    weights.validate();
    return nn::add_scalars(
        g_adv_loss_node(d_on_fake, weights),
        nn::scale_scalar(l1_loss_node(generated, ground_truth, valid_mask),
                         weights.lambda_l1));
}

}  // namespace wnetgan::objective
