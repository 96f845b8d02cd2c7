#pragma once

#include <string>
#include <vector>

#include "crackseg/tensor.hpp"

namespace crackseg::nn {

enum class Mode { train, eval };

/// A named tensor owned by a layer, with its gradient accumulator.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool decay = false;      // receives weight decay (convolution kernels only)
    bool trainable = true;   // false for batch-norm running statistics

    Param() = default;
    Param(std::string n, Tensor<T> v, bool d, bool t = true)
        : name(std::move(n)), value(std::move(v)), decay(d), trainable(t) {
        if (trainable) grad = Tensor<T>(value.n, value.c, value.h, value.w);
    }
};

template <typename T>
using ParamList = std::vector<Param<T>*>;

/// 2-D convolution, zero padding (k-1)/2, stride 1 or 2. Weight layout (out, in, k, k).
template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride,
           bool bias);

    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> infer(const Tensor<T>& x) const;
    Tensor<T> backward(const Tensor<T>& grad, bool need_input_grad = true);
    void collect(ParamList<T>& out);

    int in_channels() const { return in_; }
    int out_channels() const { return out_; }
    int kernel() const { return k_; }

    Param<T> weight;
    Param<T> bias;

private:
    int in_ = 0, out_ = 0, k_ = 1, stride_ = 1, pad_ = 0;
    bool has_bias_ = false;
    Tensor<T> input_;
};

/// Transposed convolution with kernel 4, stride 2, padding 1 (doubles spatial size).
/// Weight layout (in, out, k, k).
template <typename T>
class ConvTranspose2d {
public:
    ConvTranspose2d() = default;
    ConvTranspose2d(const std::string& name, int in_channels, int out_channels);

    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> infer(const Tensor<T>& x) const;
    Tensor<T> backward(const Tensor<T>& grad);
    void collect(ParamList<T>& out);

    Param<T> weight;
    Param<T> bias;

private:
    int in_ = 0, out_ = 0;
    static constexpr int k_ = 4, stride_ = 2, pad_ = 1;
    Tensor<T> input_;
};

/// Per-channel batch normalisation. Running statistics follow
/// running = momentum * running + (1 - momentum) * batch.
template <typename T>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    BatchNorm2d(const std::string& name, int channels, double eps = 1e-5, double momentum = 0.9);

    Tensor<T> forward(const Tensor<T>& x, Mode mode);
    Tensor<T> infer(const Tensor<T>& x) const;
    Tensor<T> backward(const Tensor<T>& grad);
    void collect(ParamList<T>& out);

    Param<T> gamma;
    Param<T> beta;
    Param<T> running_mean;
    Param<T> running_var;

private:
    int channels_ = 0;
    double eps_ = 1e-5;
    double momentum_ = 0.9;
    Mode mode_ = Mode::train;
    Tensor<T> xhat_;
    std::vector<T> inv_std_;
};

/// 2x2 max pooling, stride 2.
template <typename T>
class MaxPool2 {
public:
    Tensor<T> forward(const Tensor<T>& x);
    Tensor<T> infer(const Tensor<T>& x) const;
    Tensor<T> backward(const Tensor<T>& grad) const;

private:
    int in_h_ = 0, in_w_ = 0;
    std::vector<std::size_t> argmax_;
};

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
/// grad * (output > 0)
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad, const Tensor<T>& output);

/// Logistic function; saturated values are clamped to [eps/2, 1 - eps/2] of T.
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
/// grad * y * (1 - y)
template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad, const Tensor<T>& output);

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x);
template <typename T>
Tensor<T> upsample_nearest2x_backward(const Tensor<T>& grad);

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w);
template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad, int in_h, int in_w);

}  // namespace crackseg::nn
