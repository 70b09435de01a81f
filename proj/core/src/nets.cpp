#include "wnetgan/nets.hpp"

#include "wnetgan/errors.hpp"

namespace wnetgan::nets {

namespace {

// Channel width per encoder level: base, 2x, 4x, then capped at 8x.
int level_width(int base, int level) {
    const int mult = level >= 4 ? 8 : (1 << (level - 1));
    return base * mult;
}

void check_patch_input(const Var& x, int in_size, const char* what) {
    const nn::Shape4 s = x->value.shape();
    if (s.c != 1 || s.h != in_size || s.w != in_size)
        throw InputError(std::string(what) + ": expected (batch,1," +
                         std::to_string(in_size) + "," + std::to_string(in_size) +
                         "), got " + s.str());
}

}  // namespace

void GeneratorSpec::validate() const {
    if (base_width < 1) throw ParameterError("base_width must be >= 1");
    if (fusion_width < 1) throw ParameterError("fusion_width must be >= 1");
    if (n_levels < 2) throw ParameterError("n_levels must be >= 2");
    if (n_levels > 30 || in_size % (1 << n_levels) != 0)
        throw ParameterError("in_size " + std::to_string(in_size) +
                             " is not divisible by 2^" + std::to_string(n_levels));
    if (dropout_rate < 0.0f || dropout_rate >= 1.0f)
        throw ParameterError("dropout_rate must be in [0, 1)");
    if (arch != "wnet" && arch != "unet_dsm")
        throw ParameterError("unknown generator arch '" + arch + "'");
}

void DiscriminatorSpec::validate() const {
    if (widths.size() != 5)
        throw ParameterError("discriminator takes exactly five convolutional layers");
    for (int w : widths)
        if (w < 1) throw ParameterError("discriminator widths must be >= 1");
    if (widths.back() != 1)
        throw ParameterError("discriminator's final layer must have width 1");
}

// ---------------------------------------------------------------------------
// UNetStream
// ---------------------------------------------------------------------------

UNetStream::UNetStream(const GeneratorSpec& spec, RandomSource& rng) : spec_(spec) {
    const int n = spec.n_levels;
    widths_.resize(n + 1);
    for (int k = 1; k <= n; ++k) widths_[k] = level_width(spec.base_width, k);

    // Encoder: 4x4 stride-2 convs. Feature normalization everywhere except
    // the first and the innermost level; bias only where no norm follows.
    enc_.reserve(n);
    for (int k = 1; k <= n; ++k) {
        const int in_ch = k == 1 ? 1 : widths_[k - 1];
        const bool has_bn = k != 1 && k != n;
        enc_.emplace_back(in_ch, widths_[k], 4, 2, 1, /*bias=*/!has_bn);
        if (has_bn) enc_bn_.emplace_back(widths_[k]);
    }
    // Decoder: 4x4 stride-2 transposed convs with same-stream skips, stopping
    // before the final upsampling layer.
    dec_.reserve(n - 1);
    for (int j = n - 1; j >= 1; --j) {
        const int in_ch = j == n - 1 ? widths_[n] : 2 * widths_[j + 1];
        dec_.emplace_back(in_ch, widths_[j], 4, 2, 1, /*bias=*/false);
        dec_bn_.emplace_back(widths_[j]);
    }

    for (auto& c : enc_) c.init(rng);
    for (auto& b : enc_bn_) b.init(rng);
    for (auto& c : dec_) c.init(rng);
    for (auto& b : dec_bn_) b.init(rng);
}

Var UNetStream::forward(const Var& x, bool training, RandomSource* rng) {
    const int n = spec_.n_levels;
    std::vector<Var> skips(n + 1);

    Var h = enc_[0].forward(x);
    skips[1] = h;
    std::size_t bn_i = 0;
    for (int k = 2; k <= n; ++k) {
        h = enc_[k - 1].forward(nn::leaky_relu(h, 0.2f));
        if (k != n) h = enc_bn_[bn_i++].forward(h, training);
        skips[k] = h;
    }

    Var d = skips[n];
    for (int j = n - 1; j >= 1; --j) {
        const std::size_t i = static_cast<std::size_t>(n - 1 - j);
        d = dec_bn_[i].forward(dec_[i].forward(nn::relu(d)), training);
        const bool innermost_three = (n - 1 - j) < 3;
        if (innermost_three && spec_.dropout_rate > 0.0f && training) {
            if (!rng) throw InternalError("training forward pass needs a RandomSource for dropout");
            d = nn::dropout(d, spec_.dropout_rate, training, *rng);
        }
        d = nn::concat_channels(d, skips[j]);
    }
    return d;
}

void UNetStream::collect(ParamList& out, const std::string& prefix) {
    for (std::size_t i = 0; i < enc_.size(); ++i)
        enc_[i].collect(out, prefix + ".enc" + std::to_string(i + 1));
    for (std::size_t i = 0; i < enc_bn_.size(); ++i)
        enc_bn_[i].collect(out, prefix + ".enc_bn" + std::to_string(i + 2));
    for (std::size_t i = 0; i < dec_.size(); ++i)
        dec_[i].collect(out, prefix + ".dec" + std::to_string(i + 1));
    for (std::size_t i = 0; i < dec_bn_.size(); ++i)
        dec_bn_[i].collect(out, prefix + ".dec_bn" + std::to_string(i + 1));
}

void UNetStream::collect_buffers(BufferList& out, const std::string& prefix) {
    for (std::size_t i = 0; i < enc_bn_.size(); ++i)
        enc_bn_[i].collect_buffers(out, prefix + ".enc_bn" + std::to_string(i + 2));
    for (std::size_t i = 0; i < dec_bn_.size(); ++i)
        dec_bn_[i].collect_buffers(out, prefix + ".dec_bn" + std::to_string(i + 1));
}

// ---------------------------------------------------------------------------
// WNetGenerator
// ---------------------------------------------------------------------------

WNetGenerator::WNetGenerator(const GeneratorSpec& spec, RandomSource& rng) : spec_(spec) {
    spec_.arch = "wnet";
    spec_.validate();
    dsm_stream_ = UNetStream(spec_, rng);
    pan_stream_ = UNetStream(spec_, rng);
    const int fused_in = dsm_stream_.out_channels() + pan_stream_.out_channels();
    fusion_ = nn::Conv2d(fused_in, spec_.fusion_width, 1, 1, 0, /*bias=*/true);
    head_ = nn::ConvTranspose2d(spec_.fusion_width, 1, 4, 2, 1, /*bias=*/true);
    fusion_.init(rng);
    head_.init(rng);
}

Var WNetGenerator::forward(const Var& dsm_patch, const Var& pan_patch, bool training,
                           RandomSource* rng) {
    check_patch_input(dsm_patch, spec_.in_size, "generator dsm input");
    check_patch_input(pan_patch, spec_.in_size, "generator pan input");
    if (dsm_patch->value.shape() != pan_patch->value.shape())
        throw InputError("generator stream inputs differ in shape: " +
                         dsm_patch->value.shape().str() + " vs " +
                         pan_patch->value.shape().str());

    Var a = dsm_stream_.forward(dsm_patch, training, rng);
    Var b = pan_stream_.forward(pan_patch, training, rng);
    Var fused = fusion_.forward(nn::concat_channels(a, b));
    return nn::tanh_op(head_.forward(nn::relu(fused)));
}

void WNetGenerator::collect(ParamList& out) {
    dsm_stream_.collect(out, "g.dsm");
    pan_stream_.collect(out, "g.pan");
    fusion_.collect(out, "g.fusion");
    head_.collect(out, "g.head");
}

void WNetGenerator::collect_buffers(BufferList& out) {
    dsm_stream_.collect_buffers(out, "g.dsm");
    pan_stream_.collect_buffers(out, "g.pan");
}

// ---------------------------------------------------------------------------
// UNetGenerator (single-stream baseline)
// ---------------------------------------------------------------------------

UNetGenerator::UNetGenerator(const GeneratorSpec& spec, RandomSource& rng) : spec_(spec) {
    spec_.arch = "unet_dsm";
    spec_.validate();
    stream_ = UNetStream(spec_, rng);
    head_ = nn::ConvTranspose2d(stream_.out_channels(), 1, 4, 2, 1, /*bias=*/true);
    head_.init(rng);
}

Var UNetGenerator::forward(const Var& dsm_patch, const Var& /*pan_patch*/, bool training,
                           RandomSource* rng) {
    check_patch_input(dsm_patch, spec_.in_size, "generator dsm input");
    Var a = stream_.forward(dsm_patch, training, rng);
    return nn::tanh_op(head_.forward(nn::relu(a)));
}

void UNetGenerator::collect(ParamList& out) {
    stream_.collect(out, "g.dsm");
    head_.collect(out, "g.head");
}

void UNetGenerator::collect_buffers(BufferList& out) {
    stream_.collect_buffers(out, "g.dsm");
}

std::unique_ptr<Generator> build_generator(const GeneratorSpec& spec, RandomSource& rng) {
    spec.validate();
    if (spec.arch == "unet_dsm")
        return std::make_unique<UNetGenerator>(spec, rng);
    return std::make_unique<WNetGenerator>(spec, rng);
}

// ---------------------------------------------------------------------------
// PatchDiscriminator
// ---------------------------------------------------------------------------

PatchDiscriminator::PatchDiscriminator(const DiscriminatorSpec& spec, RandomSource& rng)
    : spec_(spec) {
    spec_.validate();
    const auto& w = spec_.widths;
    const int strides[5] = {2, 2, 2, 1, 1};
    for (int i = 0; i < 5; ++i) {
        const int in_ch = i == 0 ? 2 : w[i - 1];
        const bool has_bn = i != 0 && i != 4;
        convs_.emplace_back(in_ch, w[i], 4, strides[i], 1, /*bias=*/!has_bn);
        if (has_bn) bns_.emplace_back(w[i]);
    }
    for (auto& c : convs_) c.init(rng);
    for (auto& b : bns_) b.init(rng);
}

Var PatchDiscriminator::forward(const Var& dsm_patch, const Var& candidate, bool training) {
    if (dsm_patch->value.shape() != candidate->value.shape())
        throw InputError("discriminator inputs differ in shape: " +
                         dsm_patch->value.shape().str() + " vs " +
                         candidate->value.shape().str());
    // Channel 0 is always the conditioning stereo DSM, channel 1 the candidate.
    Var h = nn::concat_channels(dsm_patch, candidate);
    h = nn::leaky_relu(convs_[0].forward(h), spec_.leaky_slope);
    for (int i = 1; i < 4; ++i)
        h = nn::leaky_relu(bns_[i - 1].forward(convs_[i].forward(h), training),
                           spec_.leaky_slope);
    return nn::sigmoid_op(convs_[4].forward(h));
}

void PatchDiscriminator::collect(ParamList& out) {
    for (std::size_t i = 0; i < convs_.size(); ++i)
        convs_[i].collect(out, "d.conv" + std::to_string(i + 1));
    for (std::size_t i = 0; i < bns_.size(); ++i)
        bns_[i].collect(out, "d.bn" + std::to_string(i + 2));
}

void PatchDiscriminator::collect_buffers(BufferList& out) {
    for (std::size_t i = 0; i < bns_.size(); ++i)
        bns_[i].collect_buffers(out, "d.bn" + std::to_string(i + 2));
}

std::unique_ptr<PatchDiscriminator> build_discriminator(const DiscriminatorSpec& spec,
                                                        RandomSource& rng) {
    return std::make_unique<PatchDiscriminator>(spec, rng);
}

}  // namespace wnetgan::nets
