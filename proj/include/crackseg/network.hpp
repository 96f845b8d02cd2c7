#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "crackseg/image.hpp"
#include "crackseg/layers.hpp"

namespace crackseg {

inline constexpr int kEncoderLevels = 6;
inline constexpr int kDecoderLevels = 5;
/// 2^5: five halvings between level 1 and level 6.
inline constexpr int kSizeDivisor = 32;

enum class EncoderKind { vgg_style, residual_style, imported };
enum class UpsampleMode { nearest, bilinear, transposed_bottleneck };

std::string to_string(EncoderKind kind);
std::string to_string(UpsampleMode mode);
EncoderKind parse_encoder_kind(const std::string& s);
UpsampleMode parse_upsample_mode(const std::string& s);

/// Six-level encoder contract.
///
/// Level l has spatial size (H / 2^(l-1), W / 2^(l-1)) and the skip feature of level l is
/// the map right before the l-th downsampling. `level_channels` is scaled by
/// `width_multiplier` (rounded, at least 1). The residual-style encoder uses the input image
/// itself as its level-1 feature, so its first entry is replaced by the input channel count.
/// The `imported` kind shares the vgg-style topology and must be initialised from an archive.
struct EncoderSpec {
    EncoderKind kind = EncoderKind::residual_style;
    double width_multiplier = 1.0;
    std::vector<int> level_channels = {32, 64, 128, 256, 512, 512};

    std::array<int, kEncoderLevels> effective_channels(int input_channels) const;
};

struct DecoderSpec {
    /// Filters of the decoder blocks at levels 1..5.
    std::array<int, kDecoderLevels> filters = {16, 32, 64, 128, 256};
    UpsampleMode upsample = UpsampleMode::nearest;
    bool deep_supervision = true;
};

struct ModelConfig {
    EncoderSpec encoder;
    DecoderSpec decoder;
    int input_channels = 1;
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.9;
};

struct ParameterCount {
    std::int64_t encoder = 0;
    std::int64_t decoder = 0;
    std::int64_t total() const { return encoder + decoder; }
};

namespace nn {

template <typename T>
class Encoder;
template <typename T>
class Decoder;

/// Encoder-decoder network. Outputs are ordered [final, aux l=2, aux l=3, aux l=4, aux l=5];
/// auxiliaries are present only with deep supervision. Every output is N x 1 x H x W.
template <typename T>
class Model {
public:
    explicit Model(const ModelConfig& config);
    Model(Model&&) noexcept;
    Model& operator=(Model&&) noexcept;
    ~Model();

    /// Training pass: batch statistics in batch norm, caches activations for backward().
    std::vector<Tensor<T>> forward(const Tensor<T>& x);
    /// Inference pass using running statistics; const and re-entrant.
    std::vector<Tensor<T>> infer(const Tensor<T>& x) const;
    /// Accumulates parameter gradients from d(loss)/d(output) for each output of forward().
    void backward(const std::vector<Tensor<T>>& output_grads);

    ParamList<T> params();
    std::vector<const Param<T>*> params() const;
    void zero_grad();

    const ModelConfig& config() const { return config_; }
    int output_count() const { return config_.decoder.deep_supervision ? 5 : 1; }

private:
    void check_input(const Tensor<T>& x) const;

    ModelConfig config_;
    std::unique_ptr<Encoder<T>> encoder_;
    std::unique_ptr<Decoder<T>> decoder_;
};

/// Copies all parameters and buffers between models of identical topology (e.g. float <-> double).
template <typename Dst, typename Src>
void copy_weights(Model<Dst>& dst, const Model<Src>& src) {
    auto d = dst.params();
    auto s = src.params();
    if (d.size() != s.size()) throw ArchiveError("copy_weights: topology mismatch");
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& a = d[i]->value;
        const auto& b = s[i]->value;
        if (d[i]->name != s[i]->name || a.n != b.n || a.c != b.c || a.h != b.h || a.w != b.w) {
            throw ArchiveError("copy_weights: mismatch at " + s[i]->name);
        }
        for (std::size_t j = 0; j < s[i]->value.size(); ++j) {
            d[i]->value.data[j] = static_cast<Dst>(s[i]->value.data[j]);
        }
    }
}

}  // namespace nn

using Model = nn::Model<float>;

/// Per-output maps for one image.
struct NetworkOutputs {
    ProbabilityMap final;
    std::vector<ProbabilityMap> auxiliary;
};

template <typename T = float>
nn::Model<T> build(const EncoderSpec& encoder, const DecoderSpec& decoder, int input_channels);

/// Inference on a single image. Height and width must be divisible by 32.
NetworkOutputs forward(const Model& model, const ImageTensor& image);

/// Trainable parameter count split by encoder and decoder.
template <typename T>
ParameterCount count_parameters(const nn::Model<T>& model);

class WeightArchive;

/// He-normal (fan-in, gain 2) convolution kernels, zero biases, unit BN scale, zero BN shift.
/// With `pretrained`, every `encoder.*` tensor is then overwritten from the archive.
template <typename T>
void initialize(nn::Model<T>& model, std::uint64_t seed, const WeightArchive* pretrained = nullptr);

nn::Tensor<float> to_tensor(const ImageTensor& image);
nn::Tensor<float> to_tensor(const std::vector<ImageTensor>& batch);

}  // namespace crackseg
