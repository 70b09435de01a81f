#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wnetgan/layers.hpp"

namespace wnetgan::nets {

using nn::BufferList;
using nn::ParamList;
using nn::Tensor;
using nn::Var;

struct GeneratorSpec {
    int in_size = 256;
    int base_width = 64;
    int n_levels = 8;
    int fusion_width = 64;
    float dropout_rate = 0.5f;       // applied on the three innermost decoder levels
    std::string arch = "wnet";       // "wnet" (two-stream) or "unet_dsm" (baseline)

    void validate() const;  // in_size divisible by 2^n_levels, widths >= 1
    bool operator==(const GeneratorSpec&) const = default;
};

struct DiscriminatorSpec {
    // Five convolutional layers; the widths are the per-layer output channels.
    std::vector<int> widths = {64, 128, 256, 512, 1};
    float leaky_slope = 0.2f;

    void validate() const;
    bool operator==(const DiscriminatorSpec&) const = default;
};

// Encoder-decoder stream with skips, run up to (not including) the final
// upsampling layer: output has 2*base_width channels at in_size/2 resolution.
class UNetStream {
public:
    UNetStream() = default;
    UNetStream(const GeneratorSpec& spec, RandomSource& rng);

    Var forward(const Var& x, bool training, RandomSource* rng);
    void collect(ParamList& out, const std::string& prefix);
    void collect_buffers(BufferList& out, const std::string& prefix);

    // concat of the last decoder output with the first skip
    int out_channels() const { return 2 * widths_[1]; }

private:
    GeneratorSpec spec_;
    std::vector<int> widths_;                 // encoder widths, 1-based level index
    std::vector<nn::Conv2d> enc_;
    std::vector<nn::BatchNorm2d> enc_bn_;     // levels 2..n-1
    std::vector<nn::ConvTranspose2d> dec_;    // levels n-1..1
    std::vector<nn::BatchNorm2d> dec_bn_;
};

class Generator {
public:
    virtual ~Generator() = default;
    // dsm_patch and pan_patch: (batch, 1, in_size, in_size) in [-1, 1].
    virtual Var forward(const Var& dsm_patch, const Var& pan_patch, bool training,
                        RandomSource* rng = nullptr) = 0;
    virtual const GeneratorSpec& spec() const = 0;
    virtual void collect(ParamList& out) = 0;
    virtual void collect_buffers(BufferList& out) = 0;
};

// Two parallel UNet streams (DSM, PAN) fused by channel concatenation and a
// 1x1 convolution, then a single shared upsampling head with a tanh output.
class WNetGenerator final : public Generator {
public:
    WNetGenerator(const GeneratorSpec& spec, RandomSource& rng);

    Var forward(const Var& dsm_patch, const Var& pan_patch, bool training,
                RandomSource* rng = nullptr) override;
    const GeneratorSpec& spec() const override { return spec_; }
    void collect(ParamList& out) override;
    void collect_buffers(BufferList& out) override;

    const nn::Conv2d& fusion_conv() const { return fusion_; }

private:
    GeneratorSpec spec_;
    UNetStream dsm_stream_, pan_stream_;
    nn::Conv2d fusion_;
    nn::ConvTranspose2d head_;
};

// Single-stream baseline: the same UNet trunk fed with the DSM only.
class UNetGenerator final : public Generator {
public:
    UNetGenerator(const GeneratorSpec& spec, RandomSource& rng);

    Var forward(const Var& dsm_patch, const Var& pan_patch, bool training,
                RandomSource* rng = nullptr) override;
    const GeneratorSpec& spec() const override { return spec_; }
    void collect(ParamList& out) override;
    void collect_buffers(BufferList& out) override;

private:
    GeneratorSpec spec_;
    UNetStream stream_;
    nn::ConvTranspose2d head_;
};

std::unique_ptr<Generator> build_generator(const GeneratorSpec& spec, RandomSource& rng);

// Conditional classifier over [stereo DSM ‖ candidate]: five 4x4 convolutions
// (strides 2,2,2,1,1), leaky ReLU 0.2 between layers, sigmoid probability map
// on the last. 256x256 input yields a 30x30 map.
class PatchDiscriminator {
public:
    PatchDiscriminator(const DiscriminatorSpec& spec, RandomSource& rng);

    Var forward(const Var& dsm_patch, const Var& candidate, bool training);
    const DiscriminatorSpec& spec() const { return spec_; }
    void collect(ParamList& out);
    void collect_buffers(BufferList& out);

    int n_conv_layers() const { return static_cast<int>(convs_.size()); }

private:
    DiscriminatorSpec spec_;
    std::vector<nn::Conv2d> convs_;
    std::vector<nn::BatchNorm2d> bns_;  // layers 2..4
};

std::unique_ptr<PatchDiscriminator> build_discriminator(const DiscriminatorSpec& spec,
                                                        RandomSource& rng);

}  // namespace wnetgan::nets
