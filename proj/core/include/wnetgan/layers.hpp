#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wnetgan/autograd.hpp"
#include "wnetgan/rng.hpp"
#include "wnetgan/tensor.hpp"

namespace wnetgan::nn {

// Named views over a network's trainable parameters and its non-trainable
// buffers (batch-norm running statistics). Registration order is fixed by
// construction order, which also fixes the initialization RNG stream.
struct ParamList {
    std::vector<std::pair<std::string, Var>> params;
    void add(const std::string& name, const Var& p) { params.emplace_back(name, p); }
};
struct BufferList {
    std::vector<std::pair<std::string, Tensor*>> buffers;
    void add(const std::string& name, Tensor* t) { buffers.emplace_back(name, t); }
};

// --- graph ops -------------------------------------------------------------

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);
Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad);

Var leaky_relu(const Var& x, float slope = 0.2f);
Var relu(const Var& x);
Var tanh_op(const Var& x);
Var sigmoid_op(const Var& x);

// Elementwise mask dropout; identity when !training or rate == 0.
Var dropout(const Var& x, float rate, bool training, RandomSource& rng);

Var concat_channels(const Var& a, const Var& b);

// Scalar graph arithmetic (shape (1,1,1,1) nodes), used to combine losses.
Var add_scalars(const Var& a, const Var& b);
Var scale_scalar(const Var& a, float s);

// --- scalar closed forms (activation conformance references) ---------------

float leaky_relu_scalar(float z, float slope = 0.2f);
float sigmoid_scalar(float z);  // overflow-safe for large |z|
float tanh_scalar(float z);

// --- layer modules ----------------------------------------------------------

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, bool bias);

    void init(RandomSource& rng);  // weights ~ N(0, 0.02), bias 0
    Var forward(const Var& x) const;
    void collect(ParamList& out, const std::string& prefix) const;

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }
    int kernel() const { return kernel_; }
    int stride() const { return stride_; }

private:
    int in_ch_ = 0, out_ch_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
    Var weight_, bias_;
};

class ConvTranspose2d {
public:
    ConvTranspose2d() = default;
    ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride, int pad, bool bias);

    void init(RandomSource& rng);
    Var forward(const Var& x) const;
    void collect(ParamList& out, const std::string& prefix) const;

    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }

private:
    int in_ch_ = 0, out_ch_ = 0, kernel_ = 0, stride_ = 1, pad_ = 0;
    Var weight_, bias_;
};

// Per-channel batch statistics while training, running statistics at
// evaluation. Running variance stores the unbiased estimate.
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);

    void init(RandomSource& rng);  // gamma ~ N(1, 0.02), beta 0
    Var forward(const Var& x, bool training);
    void collect(ParamList& out, const std::string& prefix);
    void collect_buffers(BufferList& out, const std::string& prefix);

private:
    int channels_ = 0;
    float momentum_ = 0.1f;
    float eps_ = 1e-5f;
    Var gamma_, beta_;
    Tensor running_mean_, running_var_;
};

}  // namespace wnetgan::nn
