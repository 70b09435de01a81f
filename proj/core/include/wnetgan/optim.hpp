#pragma once

#include <cstdint>
#include <vector>

#include "wnetgan/autograd.hpp"
#include "wnetgan/layers.hpp"

namespace wnetgan::nn {

// ADAM with the standard bias-corrected moment recurrences.
class AdamOptimizer {
public:
    AdamOptimizer() = default;
    AdamOptimizer(std::vector<Var> params, float lr, float beta1, float beta2,
                  float eps = 1e-8f);

    void zero_grad();
    void step();

    std::int64_t step_count() const { return t_; }
    void set_step_count(std::int64_t t) { t_ = t; }

    std::size_t n_params() const { return params_.size(); }
    Tensor& moment1(std::size_t i) { return m_[i]; }
    Tensor& moment2(std::size_t i) { return v_[i]; }

private:
    std::vector<Var> params_;
    std::vector<Tensor> m_, v_;
    float lr_ = 2e-4f, beta1_ = 0.5f, beta2_ = 0.999f, eps_ = 1e-8f;
    std::int64_t t_ = 0;
};

void set_requires_grad(const ParamList& params, bool value);

}  // namespace wnetgan::nn
