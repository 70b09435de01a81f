#include "wnetgan/optim.hpp"

#include <cmath>

#include "wnetgan/errors.hpp"

namespace wnetgan::nn {

AdamOptimizer::AdamOptimizer(std::vector<Var> params, float lr, float beta1,
                             float beta2, float eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (!(lr > 0.0f)) throw ParameterError("adam: learning rate must be > 0");
    if (beta1 <= 0.0f || beta1 >= 1.0f || beta2 <= 0.0f || beta2 >= 1.0f)
        throw ParameterError("adam: betas must lie in (0, 1)");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->value.shape(), 0.0f);
        v_.emplace_back(p->value.shape(), 0.0f);
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& p : params_) p->zero_grad();
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(static_cast<double>(beta1_), static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(static_cast<double>(beta2_), static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Node& p = *params_[i];
        const std::int64_t n = p.value.numel();
        float* theta = p.value.data();
        float* m = m_[i].data();
        float* v = v_[i].data();
        const float* g = p.grad_allocated ? p.grad.data() : nullptr;
        for (std::int64_t j = 0; j < n; ++j) {
            const double gj = g ? g[j] : 0.0;
            const double mj = beta1_ * m[j] + (1.0 - beta1_) * gj;
            const double vj = beta2_ * v[j] + (1.0 - beta2_) * gj * gj;
            m[j] = static_cast<float>(mj);
            v[j] = static_cast<float>(vj);
            theta[j] -= static_cast<float>(lr_ * (mj / bc1) /
                                           (std::sqrt(vj / bc2) + eps_));
        }
    }
}

void set_requires_grad(const ParamList& params, bool value) {
    for (const auto& [name, p] : params.params) p->requires_grad = value;
}

}  // namespace wnetgan::nn
