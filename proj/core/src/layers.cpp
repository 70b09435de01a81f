#include "wnetgan/layers.hpp"

#include <cmath>
#include <cstring>

#include "wnetgan/errors.hpp"

namespace wnetgan::nn {

namespace {

// Patch-extraction geometry shared by conv (image -> columns over output
// positions) and transposed conv (image -> columns over *input* positions).
struct ConvGeom {
    int channels, img_h, img_w;  // big side
    int k, stride, pad;
    int col_h, col_w;  // column-grid positions
    std::int64_t col_rows() const { return static_cast<std::int64_t>(channels) * k * k; }
    std::int64_t col_cols() const { return static_cast<std::int64_t>(col_h) * col_w; }
};

void im2col(const ConvGeom& g, const float* img, float* col) {
    for (int c = 0; c < g.channels; ++c) {
        for (int kr = 0; kr < g.k; ++kr) {
            for (int kc = 0; kc < g.k; ++kc) {
                float* dst = col + ((static_cast<std::size_t>(c) * g.k + kr) * g.k + kc) *
                                       g.col_h * g.col_w;
                for (int oy = 0; oy < g.col_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + kr;
                    if (iy < 0 || iy >= g.img_h) {
                        std::memset(dst, 0, sizeof(float) * g.col_w);
                        dst += g.col_w;
                        continue;
                    }
                    const float* src = img + (static_cast<std::size_t>(c) * g.img_h + iy) * g.img_w;
                    for (int ox = 0; ox < g.col_w; ++ox) {
                        const int ix = ox * g.stride - g.pad + kc;
                        *dst++ = (ix < 0 || ix >= g.img_w) ? 0.0f : src[ix];
                    }
                }
            }
        }
    }
}

void col2im_add(const ConvGeom& g, const float* col, float* img) {
    for (int c = 0; c < g.channels; ++c) {
        for (int kr = 0; kr < g.k; ++kr) {
            for (int kc = 0; kc < g.k; ++kc) {
                const float* src = col + ((static_cast<std::size_t>(c) * g.k + kr) * g.k + kc) *
                                             g.col_h * g.col_w;
                for (int oy = 0; oy < g.col_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + kr;
                    if (iy >= 0 && iy < g.img_h) {
                        float* dst = img + (static_cast<std::size_t>(c) * g.img_h + iy) * g.img_w;
                        for (int ox = 0; ox < g.col_w; ++ox) {
                            const int ix = ox * g.stride - g.pad + kc;
                            if (ix >= 0 && ix < g.img_w) dst[ix] += src[ox];
                        }
                    }
                    src += g.col_w;
                }
            }
        }
    }
}

int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

void add_bias(Tensor& y, const Tensor& bias) {
    const auto& s = y.shape();
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            float* p = y.data() + y.sample_offset(n) + c * plane;
            const float b = bias.data()[c];
            for (std::size_t i = 0; i < plane; ++i) p[i] += b;
        }
    }
}

void bias_grad_accum(const Tensor& dy, Tensor& db) {
    const auto& s = dy.shape();
    const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            const float* p = dy.data() + dy.sample_offset(n) + c * plane;
            double acc = 0.0;
            for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            db.data()[c] += static_cast<float>(acc);
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d: weight (Cout, Cin, K, K)
// ---------------------------------------------------------------------------

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
    const Shape4 xs = x->value.shape();
    const Shape4 ws = weight->value.shape();
    if (xs.c != ws.c)
        throw InputError("conv2d: input has " + std::to_string(xs.c) +
                         " channels, weight expects " + std::to_string(ws.c));
    const int k = ws.h;
    const int out_h = conv_out_dim(xs.h, k, stride, pad);
    const int out_w = conv_out_dim(xs.w, k, stride, pad);
    if (out_h < 1 || out_w < 1) throw InputError("conv2d: output would be empty");

    ConvGeom g{xs.c, xs.h, xs.w, k, stride, pad, out_h, out_w};
    const int cout = ws.n;
    const int col_rows = static_cast<int>(g.col_rows());
    const int col_cols = static_cast<int>(g.col_cols());

    Tensor y(Shape4{xs.n, cout, out_h, out_w});
    std::vector<float> col(static_cast<std::size_t>(col_rows) * col_cols);
    for (int n = 0; n < xs.n; ++n) {
        im2col(g, x->value.data() + x->value.sample_offset(n), col.data());
        gemm(false, false, cout, col_cols, col_rows, 1.0f, weight->value.data(),
             col_rows, col.data(), col_cols, 0.0f,
             y.data() + y.sample_offset(n), col_cols);
    }
    const bool has_bias = bias != nullptr;
    if (has_bias) add_bias(y, bias->value);

    std::vector<Var> parents{x, weight};
    if (has_bias) parents.push_back(bias);
    return make_node(std::move(y), std::move(parents), [g, cout, has_bias](Node& node) {
        const Var& xp = node.parents[0];
        const Var& wp = node.parents[1];
        const int col_rows = static_cast<int>(g.col_rows());
        const int col_cols = static_cast<int>(g.col_cols());
        const int batch = node.value.shape().n;
        std::vector<float> col;
        std::vector<float> dcol;
        if (wp->requires_grad) col.resize(static_cast<std::size_t>(col_rows) * col_cols);
        if (xp->requires_grad) dcol.resize(static_cast<std::size_t>(col_rows) * col_cols);
        for (int n = 0; n < batch; ++n) {
            const float* dy = node.grad.data() + node.grad.sample_offset(n);
            if (wp->requires_grad) {
                im2col(g, xp->value.data() + xp->value.sample_offset(n), col.data());
                gemm(false, true, cout, col_rows, col_cols, 1.0f, dy, col_cols,
                     col.data(), col_cols, 1.0f, wp->ensure_grad().data(), col_rows);
            }
            if (xp->requires_grad) {
                gemm(true, false, col_rows, col_cols, cout, 1.0f, wp->value.data(),
                     col_rows, dy, col_cols, 0.0f, dcol.data(), col_cols);
                col2im_add(g, dcol.data(),
                           xp->ensure_grad().data() + xp->grad.sample_offset(n));
            }
        }
        if (has_bias && node.parents[2]->requires_grad)
            bias_grad_accum(node.grad, node.parents[2]->ensure_grad());
    });
}

// ---------------------------------------------------------------------------
// conv_transpose2d: weight (Cin, Cout, K, K); output (H-1)*s - 2p + K
// ---------------------------------------------------------------------------

Var conv_transpose2d(const Var& x, const Var& weight, const Var& bias, int stride, int pad) {
    const Shape4 xs = x->value.shape();
    const Shape4 ws = weight->value.shape();
    if (xs.c != ws.n)
        throw InputError("conv_transpose2d: input has " + std::to_string(xs.c) +
                         " channels, weight expects " + std::to_string(ws.n));
    const int k = ws.h;
    const int cout = ws.c;
    const int out_h = (xs.h - 1) * stride - 2 * pad + k;
    const int out_w = (xs.w - 1) * stride - 2 * pad + k;
    if (out_h < 1 || out_w < 1) throw InputError("conv_transpose2d: output would be empty");

    // Geometry of the equivalent forward conv from the (big) output back to
    // the (small) input positions.
    ConvGeom g{cout, out_h, out_w, k, stride, pad, xs.h, xs.w};
    const int col_rows = static_cast<int>(g.col_rows());  // Cout*K*K
    const int col_cols = static_cast<int>(g.col_cols());  // Hin*Win
    const int cin = xs.c;

    Tensor y(Shape4{xs.n, cout, out_h, out_w}, 0.0f);
    std::vector<float> col(static_cast<std::size_t>(col_rows) * col_cols);
    for (int n = 0; n < xs.n; ++n) {
        gemm(true, false, col_rows, col_cols, cin, 1.0f, weight->value.data(),
             col_rows, x->value.data() + x->value.sample_offset(n), col_cols,
             0.0f, col.data(), col_cols);
        col2im_add(g, col.data(), y.data() + y.sample_offset(n));
    }
    const bool has_bias = bias != nullptr;
    if (has_bias) add_bias(y, bias->value);

    std::vector<Var> parents{x, weight};
    if (has_bias) parents.push_back(bias);
    return make_node(std::move(y), std::move(parents), [g, cin, has_bias](Node& node) {
        const Var& xp = node.parents[0];
        const Var& wp = node.parents[1];
        const int col_rows = static_cast<int>(g.col_rows());
        const int col_cols = static_cast<int>(g.col_cols());
        const int batch = node.value.shape().n;
        std::vector<float> col(static_cast<std::size_t>(col_rows) * col_cols);
        for (int n = 0; n < batch; ++n) {
            const float* dy = node.grad.data() + node.grad.sample_offset(n);
            im2col(g, dy, col.data());
            if (xp->requires_grad) {
                gemm(false, false, cin, col_cols, col_rows, 1.0f, wp->value.data(),
                     col_rows, col.data(), col_cols, 1.0f,
                     xp->ensure_grad().data() + xp->grad.sample_offset(n), col_cols);
            }
            if (wp->requires_grad) {
                gemm(false, true, cin, col_rows, col_cols, 1.0f,
                     xp->value.data() + xp->value.sample_offset(n), col_cols,
                     col.data(), col_cols, 1.0f, wp->ensure_grad().data(), col_rows);
            }
        }
        if (has_bias && node.parents[2]->requires_grad)
            bias_grad_accum(node.grad, node.parents[2]->ensure_grad());
    });
}

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------

float leaky_relu_scalar(float z, float slope) { return z > 0.0f ? z : slope * z; }

float sigmoid_scalar(float z) {
    if (z >= 0.0f) return 1.0f / (1.0f + std::exp(-z));
    const float e = std::exp(z);
    return e / (1.0f + e);
}

float tanh_scalar(float z) { return std::tanh(z); }

Var leaky_relu(const Var& x, float slope) {
    Tensor y(x->value.shape());
    const float* in = x->value.data();
    float* out = y.data();
    const std::int64_t n = y.numel();
    for (std::int64_t i = 0; i < n; ++i) out[i] = leaky_relu_scalar(in[i], slope);
    return make_node(std::move(y), {x}, [slope](Node& node) {
        const Var& xp = node.parents[0];
        if (!xp->requires_grad) return;
        const float* in = xp->value.data();
        const float* dy = node.grad.data();
        float* dx = xp->ensure_grad().data();
        const std::int64_t n = node.grad.numel();
        for (std::int64_t i = 0; i < n; ++i)
            dx[i] += dy[i] * (in[i] > 0.0f ? 1.0f : slope);
    });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0f); }

Var tanh_op(const Var& x) {
    Tensor y(x->value.shape());
    const float* in = x->value.data();
    float* out = y.data();
    const std::int64_t n = y.numel();
    for (std::int64_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
    return make_node(std::move(y), {x}, [](Node& node) {
        const Var& xp = node.parents[0];
        if (!xp->requires_grad) return;
        const float* yv = node.value.data();
        const float* dy = node.grad.data();
        float* dx = xp->ensure_grad().data();
        const std::int64_t n = node.grad.numel();
        for (std::int64_t i = 0; i < n; ++i) dx[i] += dy[i] * (1.0f - yv[i] * yv[i]);
    });
}

Var sigmoid_op(const Var& x) {
    Tensor y(x->value.shape());
    const float* in = x->value.data();
    float* out = y.data();
    const std::int64_t n = y.numel();
    for (std::int64_t i = 0; i < n; ++i) out[i] = sigmoid_scalar(in[i]);
    return make_node(std::move(y), {x}, [](Node& node) {
        const Var& xp = node.parents[0];
        if (!xp->requires_grad) return;
        const float* yv = node.value.data();
        const float* dy = node.grad.data();
        float* dx = xp->ensure_grad().data();
        const std::int64_t n = node.grad.numel();
        for (std::int64_t i = 0; i < n; ++i) dx[i] += dy[i] * yv[i] * (1.0f - yv[i]);
    });
}

Var dropout(const Var& x, float rate, bool training, RandomSource& rng) {
    if (!training || rate <= 0.0f) return x;
    if (rate >= 1.0f) throw ParameterError("dropout rate must be < 1");
    const float keep = 1.0f - rate;
    const float scale = 1.0f / keep;
    Tensor mask(x->value.shape());
    for (auto& m : mask.vec()) m = rng.uniform() < rate ? 0.0f : scale;

    Tensor y(x->value.shape());
    const float* in = x->value.data();
    const float* mk = mask.data();
    float* out = y.data();
    const std::int64_t n = y.numel();
    for (std::int64_t i = 0; i < n; ++i) out[i] = in[i] * mk[i];
    return make_node(std::move(y), {x}, [mask = std::move(mask)](Node& node) {
        const Var& xp = node.parents[0];
        if (!xp->requires_grad) return;
        const float* mk = mask.data();
        const float* dy = node.grad.data();
        float* dx = xp->ensure_grad().data();
        const std::int64_t n = node.grad.numel();
        for (std::int64_t i = 0; i < n; ++i) dx[i] += dy[i] * mk[i];
    });
}

Var concat_channels(const Var& a, const Var& b) {
    const Shape4 as = a->value.shape(), bs = b->value.shape();
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
        throw InputError("concat_channels: shapes " + as.str() + " and " + bs.str() +
                         " differ outside the channel axis");
    Tensor y(Shape4{as.n, as.c + bs.c, as.h, as.w});
    const std::size_t plane = static_cast<std::size_t>(as.h) * as.w;
    for (int n = 0; n < as.n; ++n) {
        std::memcpy(y.data() + y.sample_offset(n),
                    a->value.data() + a->value.sample_offset(n),
                    sizeof(float) * as.c * plane);
        std::memcpy(y.data() + y.sample_offset(n) + static_cast<std::size_t>(as.c) * plane,
                    b->value.data() + b->value.sample_offset(n),
                    sizeof(float) * bs.c * plane);
    }
    const int ca = as.c, cb = bs.c;
    return make_node(std::move(y), {a, b}, [ca, cb, plane](Node& node) {
        const Var& ap = node.parents[0];
        const Var& bp = node.parents[1];
        const int batch = node.value.shape().n;
        for (int n = 0; n < batch; ++n) {
            const float* dy = node.grad.data() + node.grad.sample_offset(n);
            if (ap->requires_grad) {
                float* da = ap->ensure_grad().data() + ap->grad.sample_offset(n);
                for (std::size_t i = 0; i < ca * plane; ++i) da[i] += dy[i];
            }
            if (bp->requires_grad) {
                float* db = bp->ensure_grad().data() + bp->grad.sample_offset(n);
                const float* dyb = dy + ca * plane;
                for (std::size_t i = 0; i < cb * plane; ++i) db[i] += dyb[i];
            }
        }
    });
}

Var add_scalars(const Var& a, const Var& b) {
    if (a->value.numel() != 1 || b->value.numel() != 1)
        throw InternalError("add_scalars expects scalar nodes");
    Tensor y = Tensor::scalar(a->value.item() + b->value.item());
    return make_node(std::move(y), {a, b}, [](Node& node) {
        const float g = node.grad.item();
        for (auto& p : node.parents)
            if (p->requires_grad) p->ensure_grad().data()[0] += g;
    });
}

Var scale_scalar(const Var& a, float s) {
    if (a->value.numel() != 1) throw InternalError("scale_scalar expects a scalar node");
    Tensor y = Tensor::scalar(a->value.item() * s);
    return make_node(std::move(y), {a}, [s](Node& node) {
        if (node.parents[0]->requires_grad)
            node.parents[0]->ensure_grad().data()[0] += node.grad.item() * s;
    });
}

// ---------------------------------------------------------------------------
// layer modules
// ---------------------------------------------------------------------------

Conv2d::Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad, bool bias)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {
    weight_ = leaf(Tensor(Shape4{out_ch, in_ch, kernel, kernel}), true);
    if (bias) bias_ = leaf(Tensor(Shape4{1, out_ch, 1, 1}), true);
}

void Conv2d::init(RandomSource& rng) {
    for (auto& w : weight_->value.vec()) w = static_cast<float>(rng.normal(0.0, 0.02));
    if (bias_) bias_->value.fill(0.0f);
}

Var Conv2d::forward(const Var& x) const { return conv2d(x, weight_, bias_, stride_, pad_); }

void Conv2d::collect(ParamList& out, const std::string& prefix) const {
    out.add(prefix + ".weight", weight_);
    if (bias_) out.add(prefix + ".bias", bias_);
}

ConvTranspose2d::ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride,
                                 int pad, bool bias)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {
    weight_ = leaf(Tensor(Shape4{in_ch, out_ch, kernel, kernel}), true);
    if (bias) bias_ = leaf(Tensor(Shape4{1, out_ch, 1, 1}), true);
}

void ConvTranspose2d::init(RandomSource& rng) {
    for (auto& w : weight_->value.vec()) w = static_cast<float>(rng.normal(0.0, 0.02));
    if (bias_) bias_->value.fill(0.0f);
}

Var ConvTranspose2d::forward(const Var& x) const {
    return conv_transpose2d(x, weight_, bias_, stride_, pad_);
}

void ConvTranspose2d::collect(ParamList& out, const std::string& prefix) const {
    out.add(prefix + ".weight", weight_);
    if (bias_) out.add(prefix + ".bias", bias_);
}

BatchNorm2d::BatchNorm2d(int channels) : channels_(channels) {
    gamma_ = leaf(Tensor(Shape4{1, channels, 1, 1}, 1.0f), true);
    beta_ = leaf(Tensor(Shape4{1, channels, 1, 1}, 0.0f), true);
    running_mean_ = Tensor(Shape4{1, channels, 1, 1}, 0.0f);
    running_var_ = Tensor(Shape4{1, channels, 1, 1}, 1.0f);
}

void BatchNorm2d::init(RandomSource& rng) {
    for (auto& g : gamma_->value.vec()) g = static_cast<float>(rng.normal(1.0, 0.02));
    beta_->value.fill(0.0f);
}

Var BatchNorm2d::forward(const Var& x, bool training) {
    const Shape4 xs = x->value.shape();
    if (xs.c != channels_)
        throw InputError("batchnorm: expected " + std::to_string(channels_) +
                         " channels, got " + std::to_string(xs.c));
    const std::size_t plane = static_cast<std::size_t>(xs.h) * xs.w;
    const std::size_t m = static_cast<std::size_t>(xs.n) * plane;

    Tensor mean(Shape4{1, channels_, 1, 1});
    Tensor inv_std(Shape4{1, channels_, 1, 1});
    if (training) {
        for (int c = 0; c < channels_; ++c) {
            double acc = 0.0;
            for (int n = 0; n < xs.n; ++n) {
                const float* p = x->value.data() + x->value.sample_offset(n) + c * plane;
                for (std::size_t i = 0; i < plane; ++i) acc += p[i];
            }
            const double mu = acc / static_cast<double>(m);
            double var_acc = 0.0;
            for (int n = 0; n < xs.n; ++n) {
                const float* p = x->value.data() + x->value.sample_offset(n) + c * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const double d = p[i] - mu;
                    var_acc += d * d;
                }
            }
            const double var = var_acc / static_cast<double>(m);
            mean.data()[c] = static_cast<float>(mu);
            inv_std.data()[c] = static_cast<float>(1.0 / std::sqrt(var + eps_));
            const double var_unbiased = m > 1 ? var * m / (m - 1.0) : var;
            running_mean_.data()[c] = static_cast<float>(
                (1.0 - momentum_) * running_mean_.data()[c] + momentum_ * mu);
            running_var_.data()[c] = static_cast<float>(
                (1.0 - momentum_) * running_var_.data()[c] + momentum_ * var_unbiased);
        }
    } else {
        for (int c = 0; c < channels_; ++c) {
            mean.data()[c] = running_mean_.data()[c];
            inv_std.data()[c] =
                static_cast<float>(1.0 / std::sqrt(static_cast<double>(running_var_.data()[c]) + eps_));
        }
    }

    Tensor y(xs);
    for (int n = 0; n < xs.n; ++n) {
        for (int c = 0; c < channels_; ++c) {
            const float* in = x->value.data() + x->value.sample_offset(n) + c * plane;
            float* out = y.data() + y.sample_offset(n) + c * plane;
            const float mu = mean.data()[c], inv = inv_std.data()[c];
            const float g = gamma_->value.data()[c], b = beta_->value.data()[c];
            for (std::size_t i = 0; i < plane; ++i) out[i] = g * (in[i] - mu) * inv + b;
        }
    }

    const int channels = channels_;
    return make_node(std::move(y), {x, gamma_, beta_},
                     [mean = std::move(mean), inv_std = std::move(inv_std), channels,
                      plane, m, training](Node& node) {
        const Var& xp = node.parents[0];
        const Var& gp = node.parents[1];
        const Var& bp = node.parents[2];
        const int batch = node.value.shape().n;

        for (int c = 0; c < channels; ++c) {
            const float mu = mean.data()[c], inv = inv_std.data()[c];
            const float g = gp->value.data()[c];
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (int n = 0; n < batch; ++n) {
                const float* dy = node.grad.data() + node.grad.sample_offset(n) + c * plane;
                const float* xv = xp->value.data() + xp->value.sample_offset(n) + c * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    sum_dy += dy[i];
                    sum_dy_xhat += dy[i] * (xv[i] - mu) * inv;
                }
            }
            if (gp->requires_grad)
                gp->ensure_grad().data()[c] += static_cast<float>(sum_dy_xhat);
            if (bp->requires_grad)
                bp->ensure_grad().data()[c] += static_cast<float>(sum_dy);
            if (!xp->requires_grad) continue;

            if (training) {
                const float mean_dy = static_cast<float>(sum_dy / static_cast<double>(m));
                const float mean_dy_xhat =
                    static_cast<float>(sum_dy_xhat / static_cast<double>(m));
                for (int n = 0; n < batch; ++n) {
                    const float* dy = node.grad.data() + node.grad.sample_offset(n) + c * plane;
                    const float* xv = xp->value.data() + xp->value.sample_offset(n) + c * plane;
                    float* dx = xp->ensure_grad().data() + xp->grad.sample_offset(n) + c * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        const float xhat = (xv[i] - mu) * inv;
                        dx[i] += g * inv * (dy[i] - mean_dy - xhat * mean_dy_xhat);
                    }
                }
            } else {
                for (int n = 0; n < batch; ++n) {
                    const float* dy = node.grad.data() + node.grad.sample_offset(n) + c * plane;
                    float* dx = xp->ensure_grad().data() + xp->grad.sample_offset(n) + c * plane;
                    for (std::size_t i = 0; i < plane; ++i) dx[i] += dy[i] * g * inv;
                }
            }
        }
    });
}

void BatchNorm2d::collect(ParamList& out, const std::string& prefix) {
    out.add(prefix + ".gamma", gamma_);
    out.add(prefix + ".beta", beta_);
}

void BatchNorm2d::collect_buffers(BufferList& out, const std::string& prefix) {
    out.add(prefix + ".running_mean", &running_mean_);
    out.add(prefix + ".running_var", &running_var_);
}

}  // namespace wnetgan::nn
