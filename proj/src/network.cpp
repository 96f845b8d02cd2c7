#include "crackseg/network.hpp"

#include <cmath>
#include <stdexcept>

#include "crackseg/checkpoint.hpp"
#include "crackseg/rng.hpp"

namespace crackseg {

std::string to_string(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::vgg_style: return "vgg-style";
        case EncoderKind::residual_style: return "residual-style";
        case EncoderKind::imported: return "imported";
    }
    return "?";
}

std::string to_string(UpsampleMode mode) {
    switch (mode) {
        case UpsampleMode::nearest: return "nearest";
        case UpsampleMode::bilinear: return "bilinear";
        case UpsampleMode::transposed_bottleneck: return "transposed-bottleneck";
    }
    return "?";
}

EncoderKind parse_encoder_kind(const std::string& s) {
    if (s == "vgg-style") return EncoderKind::vgg_style;
    if (s == "residual-style") return EncoderKind::residual_style;
    if (s == "imported") return EncoderKind::imported;
    throw ConfigError("unknown encoder kind '" + s + "' (vgg-style | residual-style | imported)");
}

UpsampleMode parse_upsample_mode(const std::string& s) {
    if (s == "nearest") return UpsampleMode::nearest;
    if (s == "bilinear") return UpsampleMode::bilinear;
    if (s == "transposed-bottleneck") return UpsampleMode::transposed_bottleneck;
    throw ConfigError("unknown upsample mode '" + s +
                      "' (nearest | bilinear | transposed-bottleneck)");
}

std::array<int, kEncoderLevels> EncoderSpec::effective_channels(int input_channels) const {
    if (level_channels.size() != kEncoderLevels) {
        throw ConfigError("encoder must have exactly 6 levels, got " +
                          std::to_string(level_channels.size()));
    }
    if (!(width_multiplier > 0)) throw ConfigError("encoder width multiplier must be positive");
    std::array<int, kEncoderLevels> out{};
    for (int l = 0; l < kEncoderLevels; ++l) {
        if (level_channels[l] < 1) throw ConfigError("encoder level channels must be positive");
        out[l] = std::max(1, static_cast<int>(std::lround(level_channels[l] * width_multiplier)));
    }
    if (kind == EncoderKind::residual_style) out[0] = input_channels;
    return out;
}

namespace nn {

namespace {

std::string level_name(const std::string& prefix, int level) {
    return prefix + std::to_string(level);
}

}  // namespace

template <typename T>
struct ConvBnRelu {
    Conv2d<T> conv;
    BatchNorm2d<T> bn;
    Tensor<T> out;

    ConvBnRelu() = default;
    ConvBnRelu(const std::string& name, int in, int filters, int stride, const ModelConfig& cfg)
        : conv(name + ".conv", in, filters, 3, stride, false),
          bn(name + ".bn", filters, cfg.bn_epsilon, cfg.bn_momentum) {}

    Tensor<T> forward(const Tensor<T>& x) {
        out = relu(bn.forward(conv.forward(x), Mode::train));
        return out;
    }
    Tensor<T> infer(const Tensor<T>& x) const { return relu(bn.infer(conv.infer(x))); }
    Tensor<T> backward(const Tensor<T>& g, bool need_input_grad = true) {
        return conv.backward(bn.backward(relu_backward(g, out)), need_input_grad);
    }
    void collect(ParamList<T>& p) {
        conv.collect(p);
        bn.collect(p);
    }
    int filters() const { return conv.out_channels(); }
};

/// Two Conv-BN-ReLU with identity addition of the block input; no activation after the sum.
template <typename T>
struct ResidualBlock {
    ConvBnRelu<T> a, b;

    ResidualBlock() = default;
    ResidualBlock(const std::string& name, int channels, const ModelConfig& cfg)
        : a(name + ".a", channels, channels, 1, cfg), b(name + ".b", channels, channels, 1, cfg) {}

    Tensor<T> forward(const Tensor<T>& x) {
        Tensor<T> y = b.forward(a.forward(x));
        add_inplace(y, x);
        return y;
    }
    Tensor<T> infer(const Tensor<T>& x) const {
        Tensor<T> y = b.infer(a.infer(x));
        add_inplace(y, x);
        return y;
    }
    Tensor<T> backward(const Tensor<T>& g) {
        Tensor<T> dx = a.backward(b.backward(g));
        add_inplace(dx, g);
        return dx;
    }
    void collect(ParamList<T>& p) {
        a.collect(p);
        b.collect(p);
    }
};

// ---------------------------------------------------------------------------
// Encoders

template <typename T>
class Encoder {
public:
    using Features = std::array<Tensor<T>, kEncoderLevels>;
    virtual ~Encoder() = default;
    virtual Features forward(const Tensor<T>& x) = 0;
    virtual Features infer(const Tensor<T>& x) const = 0;
    /// `grads[l]` is d(loss)/d(level l+1 feature); empty tensors mean zero.
    virtual void backward(Features& grads) = 0;
    virtual void collect(ParamList<T>& p) = 0;
};

namespace {

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& g) {
    if (dst.empty()) {
        dst = g;
    } else {
        add_inplace(dst, g);
    }
}

}  // namespace

/// Per level: two 3x3 Conv-BN-ReLU, then 2x2 max pooling to reach the next level.
template <typename T>
class VggEncoder final : public Encoder<T> {
public:
    using typename Encoder<T>::Features;

    VggEncoder(const std::array<int, kEncoderLevels>& ch, int input_channels, const ModelConfig& cfg) {
        int in = input_channels;
        for (int l = 0; l < kEncoderLevels; ++l) {
            const std::string name = level_name("encoder.l", l + 1);
            first_[l] = ConvBnRelu<T>(name + ".0", in, ch[l], 1, cfg);
            second_[l] = ConvBnRelu<T>(name + ".1", ch[l], ch[l], 1, cfg);
            in = ch[l];
        }
    }

    Features forward(const Tensor<T>& x) override {
        Features f;
        Tensor<T> cur = x;
        for (int l = 0; l < kEncoderLevels; ++l) {
            f[l] = second_[l].forward(first_[l].forward(cur));
            if (l + 1 < kEncoderLevels) cur = pool_[l].forward(f[l]);
        }
        return f;
    }

    Features infer(const Tensor<T>& x) const override {
        Features f;
        Tensor<T> cur = x;
        for (int l = 0; l < kEncoderLevels; ++l) {
            f[l] = second_[l].infer(first_[l].infer(cur));
            if (l + 1 < kEncoderLevels) cur = pool_[l].infer(f[l]);
        }
        return f;
    }

    void backward(Features& grads) override {
        for (int l = kEncoderLevels - 1; l >= 0; --l) {
            if (grads[l].empty()) continue;
            Tensor<T> g = first_[l].backward(second_[l].backward(grads[l]), l > 0);
            if (l > 0) accumulate(grads[l - 1], pool_[l - 1].backward(g));
        }
    }

    void collect(ParamList<T>& p) override {
        for (int l = 0; l < kEncoderLevels; ++l) {
            first_[l].collect(p);
            second_[l].collect(p);
        }
    }

private:
    std::array<ConvBnRelu<T>, kEncoderLevels> first_, second_;
    std::array<MaxPool2<T>, kEncoderLevels - 1> pool_;
};

/// Level 1 is the input itself; each further level is a stride-2 Conv-BN-ReLU followed by
/// two basic residual blocks.
template <typename T>
class ResidualEncoder final : public Encoder<T> {
public:
    using typename Encoder<T>::Features;

    ResidualEncoder(const std::array<int, kEncoderLevels>& ch, const ModelConfig& cfg) {
        for (int l = 1; l < kEncoderLevels; ++l) {
            const std::string name = level_name("encoder.l", l + 1);
            down_[l - 1] = ConvBnRelu<T>(name + ".down", ch[l - 1], ch[l], 2, cfg);
            res_a_[l - 1] = ResidualBlock<T>(name + ".res0", ch[l], cfg);
            res_b_[l - 1] = ResidualBlock<T>(name + ".res1", ch[l], cfg);
        }
    }

    Features forward(const Tensor<T>& x) override {
        Features f;
        f[0] = x;
        for (int l = 1; l < kEncoderLevels; ++l) {
            f[l] = res_b_[l - 1].forward(res_a_[l - 1].forward(down_[l - 1].forward(f[l - 1])));
        }
        return f;
    }

    Features infer(const Tensor<T>& x) const override {
        Features f;
        f[0] = x;
        for (int l = 1; l < kEncoderLevels; ++l) {
            f[l] = res_b_[l - 1].infer(res_a_[l - 1].infer(down_[l - 1].infer(f[l - 1])));
        }
        return f;
    }

    void backward(Features& grads) override {
        for (int l = kEncoderLevels - 1; l >= 1; --l) {
            if (grads[l].empty()) continue;
            Tensor<T> g = res_a_[l - 1].backward(res_b_[l - 1].backward(grads[l]));
            g = down_[l - 1].backward(g, l > 1);
            if (l > 1) accumulate(grads[l - 1], g);
        }
    }

    void collect(ParamList<T>& p) override {
        for (int l = 0; l < kEncoderLevels - 1; ++l) {
            down_[l].collect(p);
            res_a_[l].collect(p);
            res_b_[l].collect(p);
        }
    }

private:
    std::array<ConvBnRelu<T>, kEncoderLevels - 1> down_;
    std::array<ResidualBlock<T>, kEncoderLevels - 1> res_a_, res_b_;
};

// ---------------------------------------------------------------------------
// Decoder

/// x2 spatial upsampling. The transposed-bottleneck variant reduces to C/4 channels with a
/// 1x1 conv, applies a 4x4 stride-2 transposed conv, and restores C channels with a 1x1 conv.
template <typename T>
struct Upsampler {
    UpsampleMode mode = UpsampleMode::nearest;
    Conv2d<T> reduce, expand;
    ConvTranspose2d<T> tconv;
    int in_h = 0, in_w = 0;

    Upsampler() = default;
    Upsampler(const std::string& name, int channels, UpsampleMode m) : mode(m) {
        if (mode == UpsampleMode::transposed_bottleneck) {
            const int inner = std::max(1, channels / 4);
            reduce = Conv2d<T>(name + ".reduce", channels, inner, 1, 1, true);
            tconv = ConvTranspose2d<T>(name + ".tconv", inner, inner);
            expand = Conv2d<T>(name + ".expand", inner, channels, 1, 1, true);
        }
    }

    Tensor<T> forward(const Tensor<T>& x) {
        in_h = x.h;
        in_w = x.w;
        switch (mode) {
            case UpsampleMode::nearest: return upsample_nearest2x(x);
            case UpsampleMode::bilinear: return resize_bilinear(x, 2 * x.h, 2 * x.w);
            case UpsampleMode::transposed_bottleneck:
                return expand.forward(tconv.forward(reduce.forward(x)));
        }
        return {};
    }
    Tensor<T> infer(const Tensor<T>& x) const {
        switch (mode) {
            case UpsampleMode::nearest: return upsample_nearest2x(x);
            case UpsampleMode::bilinear: return resize_bilinear(x, 2 * x.h, 2 * x.w);
            case UpsampleMode::transposed_bottleneck:
                return expand.infer(tconv.infer(reduce.infer(x)));
        }
        return {};
    }
    Tensor<T> backward(const Tensor<T>& g) {
        switch (mode) {
            case UpsampleMode::nearest: return upsample_nearest2x_backward(g);
            case UpsampleMode::bilinear: return resize_bilinear_backward(g, in_h, in_w);
            case UpsampleMode::transposed_bottleneck:
                return reduce.backward(tconv.backward(expand.backward(g)));
        }
        return {};
    }
    void collect(ParamList<T>& p) {
        if (mode != UpsampleMode::transposed_bottleneck) return;
        reduce.collect(p);
        tconv.collect(p);
        expand.collect(p);
    }
};

/// Levels 2..5: Conv-BN-ReLU then two residual blocks.
template <typename T>
struct ResidualDecoderBlock {
    ConvBnRelu<T> entry;
    ResidualBlock<T> res0, res1;

    ResidualDecoderBlock() = default;
    ResidualDecoderBlock(const std::string& name, int in, int filters, const ModelConfig& cfg)
        : entry(name + ".conv", in, filters, 1, cfg),
          res0(name + ".res0", filters, cfg),
          res1(name + ".res1", filters, cfg) {
        if (entry.filters() != filters) throw std::logic_error("residual channel mismatch");
    }

    Tensor<T> forward(const Tensor<T>& x) { return res1.forward(res0.forward(entry.forward(x))); }
    Tensor<T> infer(const Tensor<T>& x) const { return res1.infer(res0.infer(entry.infer(x))); }
    Tensor<T> backward(const Tensor<T>& g) { return entry.backward(res0.backward(res1.backward(g))); }
    void collect(ParamList<T>& p) {
        entry.collect(p);
        res0.collect(p);
        res1.collect(p);
    }
};

template <typename T>
struct DoubleConv {
    ConvBnRelu<T> a, b;

    DoubleConv() = default;
    DoubleConv(const std::string& name, int in, int filters, const ModelConfig& cfg)
        : a(name + ".0", in, filters, 1, cfg), b(name + ".1", filters, filters, 1, cfg) {}

    Tensor<T> forward(const Tensor<T>& x) { return b.forward(a.forward(x)); }
    Tensor<T> infer(const Tensor<T>& x) const { return b.infer(a.infer(x)); }
    Tensor<T> backward(const Tensor<T>& g) { return a.backward(b.backward(g)); }
    void collect(ParamList<T>& p) {
        a.collect(p);
        b.collect(p);
    }
};

/// Convolution with one filter, sigmoid, and (for deep supervision) bilinear resize to the
/// input resolution.
template <typename T>
struct Head {
    Conv2d<T> conv;
    Tensor<T> prob;
    int src_h = 0, src_w = 0;

    Head() = default;
    Head(const std::string& name, int in, int kernel) : conv(name, in, 1, kernel, 1, true) {}

    Tensor<T> forward(const Tensor<T>& x, int out_h, int out_w) {
        prob = sigmoid(conv.forward(x));
        src_h = x.h;
        src_w = x.w;
        return resize_bilinear(prob, out_h, out_w);
    }
    Tensor<T> infer(const Tensor<T>& x, int out_h, int out_w) const {
        return resize_bilinear(sigmoid(conv.infer(x)), out_h, out_w);
    }
    Tensor<T> backward(const Tensor<T>& g) {
        return conv.backward(sigmoid_backward(resize_bilinear_backward(g, src_h, src_w), prob));
    }
    void collect(ParamList<T>& p) { conv.collect(p); }
};

template <typename T>
class Decoder {
public:
    using Features = typename Encoder<T>::Features;

    Decoder(const std::array<int, kEncoderLevels>& enc, const DecoderSpec& spec,
            const ModelConfig& cfg)
        : spec_(spec) {
        const auto& f = spec.filters;
        for (int v : f) {
            if (v < 1) throw ConfigError("decoder filters must be positive");
        }
        skip1_ = DoubleConv<T>("decoder.skip1", enc[0], f[0], cfg);
        // up_[i] feeds decoder level i+1; its input comes from level i+2.
        for (int l = 1; l <= kDecoderLevels; ++l) {
            const int from = l == kDecoderLevels ? enc[kEncoderLevels - 1] : f[l];
            up_[l - 1] = Upsampler<T>(level_name("decoder.up", l), from, spec.upsample);
        }
        for (int l = 2; l <= kDecoderLevels; ++l) {
            const int from = l == kDecoderLevels ? enc[kEncoderLevels - 1] : f[l];
            blocks_[l - 2] =
                ResidualDecoderBlock<T>(level_name("decoder.block", l), from + enc[l - 1], f[l - 1], cfg);
            if (spec.deep_supervision) {
                dsv_[l - 2] = Head<T>(level_name("decoder.dsv", l), f[l - 1], 1);
            }
        }
        block1_ = DoubleConv<T>("decoder.block1", f[1] + f[0], f[0], cfg);
        head_ = Head<T>("decoder.head", f[0], 3);
    }

    std::vector<Tensor<T>> forward(Features& feats, int h, int w) {
        std::array<Tensor<T>, kDecoderLevels> d;
        Tensor<T> below = feats[kEncoderLevels - 1];
        for (int l = kDecoderLevels; l >= 2; --l) {
            Tensor<T> cat = concat_channels(up_[l - 1].forward(below), feats[l - 1]);
            up_channels_[l - 1] = cat.c - feats[l - 1].c;
            d[l - 1] = blocks_[l - 2].forward(cat);
            below = d[l - 1];
        }
        Tensor<T> s1 = skip1_.forward(feats[0]);
        Tensor<T> cat = concat_channels(up_[0].forward(below), s1);
        up_channels_[0] = cat.c - s1.c;
        d[0] = block1_.forward(cat);

        std::vector<Tensor<T>> outs;
        outs.push_back(head_.forward(d[0], h, w));
        if (spec_.deep_supervision) {
            for (int l = 2; l <= kDecoderLevels; ++l) outs.push_back(dsv_[l - 2].forward(d[l - 1], h, w));
        }
        return outs;
    }

    std::vector<Tensor<T>> infer(const Features& feats, int h, int w) const {
        std::array<Tensor<T>, kDecoderLevels> d;
        Tensor<T> below = feats[kEncoderLevels - 1];
        for (int l = kDecoderLevels; l >= 2; --l) {
            d[l - 1] = blocks_[l - 2].infer(concat_channels(up_[l - 1].infer(below), feats[l - 1]));
            below = d[l - 1];
        }
        d[0] = block1_.infer(concat_channels(up_[0].infer(below), skip1_.infer(feats[0])));
        std::vector<Tensor<T>> outs;
        outs.push_back(head_.infer(d[0], h, w));
        if (spec_.deep_supervision) {
            for (int l = 2; l <= kDecoderLevels; ++l) outs.push_back(dsv_[l - 2].infer(d[l - 1], h, w));
        }
        return outs;
    }

    /// Returns d(loss)/d(encoder features).
    Features backward(const std::vector<Tensor<T>>& grads) {
        Features enc;
        Tensor<T> g_up, g_skip;
        split_channels(block1_.backward(head_.backward(grads.at(0))), up_channels_[0], g_up, g_skip);
        enc[0] = skip1_.backward(g_skip);
        Tensor<T> g_below = up_[0].backward(g_up);
        for (int l = 2; l <= kDecoderLevels; ++l) {
            if (spec_.deep_supervision && grads.size() > static_cast<std::size_t>(l - 1) &&
                !grads[l - 1].empty()) {
                add_inplace(g_below, dsv_[l - 2].backward(grads[l - 1]));
            }
            split_channels(blocks_[l - 2].backward(g_below), up_channels_[l - 1], g_up, g_skip);
            accumulate(enc[l - 1], g_skip);
            g_below = up_[l - 1].backward(g_up);
        }
        accumulate(enc[kEncoderLevels - 1], g_below);
        return enc;
    }

    void collect(ParamList<T>& p) {
        skip1_.collect(p);
        for (int l = kDecoderLevels; l >= 1; --l) {
            up_[l - 1].collect(p);
            if (l >= 2) {
                blocks_[l - 2].collect(p);
            } else {
                block1_.collect(p);
            }
        }
        head_.collect(p);
        if (spec_.deep_supervision) {
            for (auto& h : dsv_) h.collect(p);
        }
    }

private:
    DecoderSpec spec_;
    DoubleConv<T> skip1_;
    std::array<Upsampler<T>, kDecoderLevels> up_;
    std::array<ResidualDecoderBlock<T>, kDecoderLevels - 1> blocks_;
    DoubleConv<T> block1_;
    Head<T> head_;
    std::array<Head<T>, kDecoderLevels - 1> dsv_;
    std::array<int, kDecoderLevels> up_channels_{};
};

// ---------------------------------------------------------------------------
// Model

template <typename T>
Model<T>::Model(const ModelConfig& config) : config_(config) {
    if (config.input_channels != 1 && config.input_channels != 3) {
        throw ConfigError("input channels must be 1 or 3");
    }
    const auto ch = config.encoder.effective_channels(config.input_channels);
    if (config.encoder.kind == EncoderKind::residual_style) {
        encoder_ = std::make_unique<ResidualEncoder<T>>(ch, config);
    } else {
        encoder_ = std::make_unique<VggEncoder<T>>(ch, config.input_channels, config);
    }
    decoder_ = std::make_unique<Decoder<T>>(ch, config.decoder, config);
}

template <typename T>
Model<T>::Model(Model&&) noexcept = default;
template <typename T>
Model<T>& Model<T>::operator=(Model&&) noexcept = default;
template <typename T>
Model<T>::~Model() = default;

template <typename T>
void Model<T>::check_input(const Tensor<T>& x) const {
    if (x.h % kSizeDivisor != 0 || x.w % kSizeDivisor != 0 || x.h == 0 || x.w == 0) {
        throw ShapeError("input height and width must be divisible by " + std::to_string(kSizeDivisor) +
                         ", got " + std::to_string(x.w) + "x" + std::to_string(x.h));
    }
    if (x.c != config_.input_channels) {
        throw ShapeError("model expects " + std::to_string(config_.input_channels) +
                         " input channels, got " + std::to_string(x.c));
    }
}

template <typename T>
std::vector<Tensor<T>> Model<T>::forward(const Tensor<T>& x) {
    check_input(x);
    auto feats = encoder_->forward(x);
    return decoder_->forward(feats, x.h, x.w);
}

template <typename T>
std::vector<Tensor<T>> Model<T>::infer(const Tensor<T>& x) const {
    check_input(x);
    const auto feats = encoder_->infer(x);
    return decoder_->infer(feats, x.h, x.w);
}

template <typename T>
void Model<T>::backward(const std::vector<Tensor<T>>& output_grads) {
    auto enc = decoder_->backward(output_grads);
    encoder_->backward(enc);
}

template <typename T>
ParamList<T> Model<T>::params() {
    ParamList<T> p;
    encoder_->collect(p);
    decoder_->collect(p);
    return p;
}

template <typename T>
std::vector<const Param<T>*> Model<T>::params() const {
    auto p = const_cast<Model<T>*>(this)->params();
    return {p.begin(), p.end()};
}

template <typename T>
void Model<T>::zero_grad() {
    for (auto* p : params()) {
        if (p->trainable) p->grad.zero();
    }
}

template class Model<float>;
template class Model<double>;

}  // namespace nn

// ---------------------------------------------------------------------------
// Free functions

template <typename T>
nn::Model<T> build(const EncoderSpec& encoder, const DecoderSpec& decoder, int input_channels) {
    ModelConfig cfg;
    cfg.encoder = encoder;
    cfg.decoder = decoder;
    cfg.input_channels = input_channels;
    return nn::Model<T>(cfg);
}

template nn::Model<float> build<float>(const EncoderSpec&, const DecoderSpec&, int);
template nn::Model<double> build<double>(const EncoderSpec&, const DecoderSpec&, int);

nn::Tensor<float> to_tensor(const ImageTensor& image) {
    nn::Tensor<float> t(1, image.channels, image.height, image.width);
    std::copy(image.data.begin(), image.data.end(), t.data.begin());
    return t;
}

nn::Tensor<float> to_tensor(const std::vector<ImageTensor>& batch) {
    if (batch.empty()) return {};
    const auto& f = batch.front();
    nn::Tensor<float> t(static_cast<int>(batch.size()), f.channels, f.height, f.width);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& img = batch[i];
        if (img.height != f.height || img.width != f.width || img.channels != f.channels) {
            throw ShapeError("batch images differ in shape");
        }
        std::copy(img.data.begin(), img.data.end(), t.sample(static_cast<int>(i)));
    }
    return t;
}

NetworkOutputs forward(const Model& model, const ImageTensor& image) {
    const auto outs = model.infer(to_tensor(image));
    auto to_map = [](const nn::Tensor<float>& t) {
        ProbabilityMap m(t.h, t.w);
        std::copy(t.data.begin(), t.data.begin() + static_cast<std::ptrdiff_t>(t.plane()), m.data.begin());
        return m;
    };
    NetworkOutputs result;
    result.final = to_map(outs[0]);
    for (std::size_t i = 1; i < outs.size(); ++i) result.auxiliary.push_back(to_map(outs[i]));
    return result;
}

template <typename T>
ParameterCount count_parameters(const nn::Model<T>& model) {
    ParameterCount count;
    for (const auto* p : model.params()) {
        if (!p->trainable) continue;
        const auto n = static_cast<std::int64_t>(p->value.size());
        if (p->name.rfind("encoder.", 0) == 0) {
            count.encoder += n;
        } else {
            count.decoder += n;
        }
    }
    return count;
}

template ParameterCount count_parameters(const nn::Model<float>&);
template ParameterCount count_parameters(const nn::Model<double>&);

template <typename T>
void initialize(nn::Model<T>& model, std::uint64_t seed, const WeightArchive* pretrained) {
    if (model.config().encoder.kind == EncoderKind::imported && pretrained == nullptr) {
        throw ConfigError("imported encoder requires a pretrained weight archive");
    }
    SeededRng rng(seed);
    for (auto* p : model.params()) {
        const std::string& n = p->name;
        auto ends_with = [&](const char* suffix) {
            const std::string s(suffix);
            return n.size() >= s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0;
        };
        if (p->decay) {
            // Conv2d weights are (out, in, k, k); transposed convs are (in, out, k, k).
            const bool transposed = n.find(".tconv.") != std::string::npos;
            const int fan_in = (transposed ? p->value.n : p->value.c) * p->value.h * p->value.w;
            const double stddev = std::sqrt(2.0 / fan_in);
            for (auto& v : p->value.data) v = static_cast<T>(rng.normal(0.0, stddev));
        } else if (ends_with(".gamma") || ends_with(".running_var")) {
            std::fill(p->value.data.begin(), p->value.data.end(), T(1));
        } else {
            p->value.zero();
        }
    }
    if (pretrained) load_weights(model, *pretrained, "encoder.");
}

template void initialize(nn::Model<float>&, std::uint64_t, const WeightArchive*);
template void initialize(nn::Model<double>&, std::uint64_t, const WeightArchive*);

}  // namespace crackseg
