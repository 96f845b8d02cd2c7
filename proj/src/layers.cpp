#include "crackseg/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

#include "crackseg/resample.hpp"

namespace crackseg::nn {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

// Upper bound on the element count of one column buffer; batches are split to respect it.
constexpr std::size_t kColumnBudget = std::size_t{1} << 23;

int samples_per_chunk(std::size_t per_sample, int n) {
    const std::size_t fit = std::max<std::size_t>(1, kColumnBudget / std::max<std::size_t>(1, per_sample));
    return static_cast<int>(std::min<std::size_t>(fit, static_cast<std::size_t>(n)));
}

struct Geometry {
    int channels, h, w;   // image
    int k, stride, pad;
    int gh, gw;           // column grid
};

// cols: (channels*k*k) x (nb*gh*gw), row-major.
template <typename T>
void im2col(const Tensor<T>& img, int first, int nb, const Geometry& g, T* cols) {
    const std::size_t grid = static_cast<std::size_t>(g.gh) * g.gw;
    const std::size_t ncols = grid * nb;
    for (int ci = 0; ci < g.channels; ++ci) {
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx) {
                T* row = cols + (static_cast<std::size_t>(ci * g.k + ky) * g.k + kx) * ncols;
                for (int b = 0; b < nb; ++b) {
                    const T* src = img.channel(first + b, ci);
                    T* dst = row + b * grid;
                    for (int oy = 0; oy < g.gh; ++oy) {
                        const int iy = oy * g.stride - g.pad + ky;
                        T* out = dst + static_cast<std::size_t>(oy) * g.gw;
                        if (iy < 0 || iy >= g.h) {
                            std::fill(out, out + g.gw, T(0));
                            continue;
                        }
                        const T* in = src + static_cast<std::size_t>(iy) * g.w;
                        for (int ox = 0; ox < g.gw; ++ox) {
                            const int ix = ox * g.stride - g.pad + kx;
                            out[ox] = (ix >= 0 && ix < g.w) ? in[ix] : T(0);
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im(const T* cols, int first, int nb, const Geometry& g, Tensor<T>& img) {
    const std::size_t grid = static_cast<std::size_t>(g.gh) * g.gw;
    const std::size_t ncols = grid * nb;
    for (int ci = 0; ci < g.channels; ++ci) {
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx) {
                const T* row = cols + (static_cast<std::size_t>(ci * g.k + ky) * g.k + kx) * ncols;
                for (int b = 0; b < nb; ++b) {
                    T* dst = img.channel(first + b, ci);
                    const T* src = row + b * grid;
                    for (int oy = 0; oy < g.gh; ++oy) {
                        const int iy = oy * g.stride - g.pad + ky;
                        if (iy < 0 || iy >= g.h) continue;
                        T* out = dst + static_cast<std::size_t>(iy) * g.w;
                        const T* in = src + static_cast<std::size_t>(oy) * g.gw;
                        for (int ox = 0; ox < g.gw; ++ox) {
                            const int ix = ox * g.stride - g.pad + kx;
                            if (ix >= 0 && ix < g.w) out[ix] += in[ox];
                        }
                    }
                }
            }
        }
    }
}

// Gathers samples [first, first+nb) of x into a (c) x (nb*h*w) matrix.
template <typename T>
void gather_channels(const Tensor<T>& x, int first, int nb, T* dst) {
    const std::size_t plane = x.plane();
    for (int ch = 0; ch < x.c; ++ch) {
        for (int b = 0; b < nb; ++b) {
            const T* src = x.channel(first + b, ch);
            std::copy(src, src + plane, dst + (static_cast<std::size_t>(ch) * nb + b) * plane);
        }
    }
}

template <typename T>
void scatter_channels(const T* src, int first, int nb, Tensor<T>& x) {
    const std::size_t plane = x.plane();
    for (int ch = 0; ch < x.c; ++ch) {
        for (int b = 0; b < nb; ++b) {
            const T* s = src + (static_cast<std::size_t>(ch) * nb + b) * plane;
            std::copy(s, s + plane, x.channel(first + b, ch));
        }
    }
}

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, int in,
                       int out, int k, int stride, int pad) {
    if (x.c != in) {
        throw ShapeError("conv: expected " + std::to_string(in) + " input channels, got " +
                         std::to_string(x.c));
    }
    const int oh = (x.h + 2 * pad - k) / stride + 1;
    const int ow = (x.w + 2 * pad - k) / stride + 1;
    Tensor<T> y(x.n, out, oh, ow);
    const Geometry g{in, x.h, x.w, k, stride, pad, oh, ow};
    const std::size_t rows = static_cast<std::size_t>(in) * k * k;
    const std::size_t grid = static_cast<std::size_t>(oh) * ow;
    const int chunk = samples_per_chunk(rows * grid, x.n);
    AlignedVector<T> cols;
    AlignedVector<T> res;
    ConstMapMat<T> wm(weight.data.data(), out, static_cast<Eigen::Index>(rows));
    for (int first = 0; first < x.n; first += chunk) {
        const int nb = std::min(chunk, x.n - first);
        const auto m = static_cast<Eigen::Index>(grid * nb);
        cols.resize(rows * m);
        res.resize(static_cast<std::size_t>(out) * m);
        im2col(x, first, nb, g, cols.data());
        ConstMapMat<T> cm(cols.data(), static_cast<Eigen::Index>(rows), m);
        MapMat<T> rm(res.data(), out, m);
        rm.noalias() = wm * cm;
        if (bias) {
            for (int co = 0; co < out; ++co) rm.row(co).array() += bias->data[co];
        }
        scatter_channels(res.data(), first, nb, y);
    }
    return y;
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel,
                  int stride, bool bias)
    : weight(name + ".weight", Tensor<T>(out_channels, in_channels, kernel, kernel), true),
      in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_((kernel - 1) / 2),
      has_bias_(bias) {
    if (bias) this->bias = Param<T>(name + ".bias", Tensor<T>(1, out_channels, 1, 1), false);
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
    input_ = x;
    return infer(x);
}

template <typename T>
Tensor<T> Conv2d<T>::infer(const Tensor<T>& x) const {
    return conv_forward(x, weight.value, has_bias_ ? &bias.value : nullptr, in_, out_, k_, stride_,
                        pad_);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad, bool need_input_grad) {
    const Tensor<T>& x = input_;
    const Geometry g{in_, x.h, x.w, k_, stride_, pad_, grad.h, grad.w};
    const std::size_t rows = static_cast<std::size_t>(in_) * k_ * k_;
    const std::size_t grid = grad.plane();
    const int chunk = samples_per_chunk(rows * grid, x.n);
    Tensor<T> dx;
    if (need_input_grad) dx = Tensor<T>(x.n, x.c, x.h, x.w);
    AlignedVector<T> cols, gbuf;
    ConstMapMat<T> wm(weight.value.data.data(), out_, static_cast<Eigen::Index>(rows));
    MapMat<T> dwm(weight.grad.data.data(), out_, static_cast<Eigen::Index>(rows));
    for (int first = 0; first < x.n; first += chunk) {
        const int nb = std::min(chunk, x.n - first);
        const auto m = static_cast<Eigen::Index>(grid * nb);
        cols.resize(rows * m);
        gbuf.resize(static_cast<std::size_t>(out_) * m);
        im2col(x, first, nb, g, cols.data());
        gather_channels(grad, first, nb, gbuf.data());
        ConstMapMat<T> cm(cols.data(), static_cast<Eigen::Index>(rows), m);
        ConstMapMat<T> gm(gbuf.data(), out_, m);
        dwm.noalias() += gm * cm.transpose();
        if (has_bias_) {
            for (int co = 0; co < out_; ++co) bias.grad.data[co] += gm.row(co).sum();
        }
        if (need_input_grad) {
            MapMat<T> dcm(cols.data(), static_cast<Eigen::Index>(rows), m);
            dcm.noalias() = wm.transpose() * gm;
            col2im(cols.data(), first, nb, g, dx);
        }
    }
    return dx;
}

template <typename T>
void Conv2d<T>::collect(ParamList<T>& out) {
    out.push_back(&weight);
    if (has_bias_) out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(const std::string& name, int in_channels, int out_channels)
    : weight(name + ".weight", Tensor<T>(in_channels, out_channels, k_, k_), true),
      bias(name + ".bias", Tensor<T>(1, out_channels, 1, 1), false),
      in_(in_channels), out_(out_channels) {}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x) {
    input_ = x;
    return infer(x);
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::infer(const Tensor<T>& x) const {
    if (x.c != in_) throw ShapeError("transposed conv: channel mismatch");
    const int oh = x.h * stride_;
    const int ow = x.w * stride_;
    Tensor<T> y(x.n, out_, oh, ow);
    const Geometry g{out_, oh, ow, k_, stride_, pad_, x.h, x.w};
    const std::size_t rows = static_cast<std::size_t>(out_) * k_ * k_;
    const std::size_t grid = x.plane();
    const int chunk = samples_per_chunk(rows * grid, x.n);
    ConstMapMat<T> wm(weight.value.data.data(), in_, static_cast<Eigen::Index>(rows));
    AlignedVector<T> xb, cols;
    for (int first = 0; first < x.n; first += chunk) {
        const int nb = std::min(chunk, x.n - first);
        const auto m = static_cast<Eigen::Index>(grid * nb);
        xb.resize(static_cast<std::size_t>(in_) * m);
        cols.resize(rows * m);
        gather_channels(x, first, nb, xb.data());
        ConstMapMat<T> xm(xb.data(), in_, m);
        MapMat<T> cm(cols.data(), static_cast<Eigen::Index>(rows), m);
        cm.noalias() = wm.transpose() * xm;
        col2im(cols.data(), first, nb, g, y);
    }
    for (int i = 0; i < y.n; ++i) {
        for (int co = 0; co < out_; ++co) {
            T* p = y.channel(i, co);
            for (std::size_t j = 0; j < y.plane(); ++j) p[j] += bias.value.data[co];
        }
    }
    return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& grad) {
    const Tensor<T>& x = input_;
    const Geometry g{out_, grad.h, grad.w, k_, stride_, pad_, x.h, x.w};
    const std::size_t rows = static_cast<std::size_t>(out_) * k_ * k_;
    const std::size_t grid = x.plane();
    const int chunk = samples_per_chunk(rows * grid, x.n);
    Tensor<T> dx(x.n, x.c, x.h, x.w);
    ConstMapMat<T> wm(weight.value.data.data(), in_, static_cast<Eigen::Index>(rows));
    MapMat<T> dwm(weight.grad.data.data(), in_, static_cast<Eigen::Index>(rows));
    AlignedVector<T> xb, cols, dxb;
    for (int first = 0; first < x.n; first += chunk) {
        const int nb = std::min(chunk, x.n - first);
        const auto m = static_cast<Eigen::Index>(grid * nb);
        xb.resize(static_cast<std::size_t>(in_) * m);
        dxb.resize(static_cast<std::size_t>(in_) * m);
        cols.resize(rows * m);
        gather_channels(x, first, nb, xb.data());
        im2col(grad, first, nb, g, cols.data());
        ConstMapMat<T> xm(xb.data(), in_, m);
        ConstMapMat<T> cm(cols.data(), static_cast<Eigen::Index>(rows), m);
        dwm.noalias() += xm * cm.transpose();
        MapMat<T> dxm(dxb.data(), in_, m);
        dxm.noalias() = wm * cm;
        scatter_channels(dxb.data(), first, nb, dx);
    }
    for (int i = 0; i < grad.n; ++i) {
        for (int co = 0; co < out_; ++co) {
            const T* p = grad.channel(i, co);
            T s = 0;
            for (std::size_t j = 0; j < grad.plane(); ++j) s += p[j];
            bias.grad.data[co] += s;
        }
    }
    return dx;
}

template <typename T>
void ConvTranspose2d<T>::collect(ParamList<T>& out) {
    out.push_back(&weight);
    out.push_back(&bias);
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(const std::string& name, int channels, double eps, double momentum)
    : gamma(name + ".gamma", Tensor<T>(1, channels, 1, 1, T(1)), false),
      beta(name + ".beta", Tensor<T>(1, channels, 1, 1), false),
      running_mean(name + ".running_mean", Tensor<T>(1, channels, 1, 1), false, false),
      running_var(name + ".running_var", Tensor<T>(1, channels, 1, 1, T(1)), false, false),
      channels_(channels), eps_(eps), momentum_(momentum) {}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode) {
    mode_ = mode;
    if (mode == Mode::eval) return infer(x);
    if (x.c != channels_) throw ShapeError("batch norm: channel mismatch");
    const std::size_t plane = x.plane();
    const double count = static_cast<double>(plane) * x.n;
    xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
    inv_std_.assign(channels_, T(0));
    Tensor<T> y(x.n, x.c, x.h, x.w);
    for (int ch = 0; ch < channels_; ++ch) {
        double sum = 0;
        for (int i = 0; i < x.n; ++i) {
            const T* p = x.channel(i, ch);
            for (std::size_t j = 0; j < plane; ++j) sum += p[j];
        }
        const double mean = sum / count;
        double sq = 0;
        for (int i = 0; i < x.n; ++i) {
            const T* p = x.channel(i, ch);
            for (std::size_t j = 0; j < plane; ++j) {
                const double d = p[j] - mean;
                sq += d * d;
            }
        }
        const double var = sq / count;
        const T inv = static_cast<T>(1.0 / std::sqrt(var + eps_));
        inv_std_[ch] = inv;
        const T m = static_cast<T>(mean);
        const T gm = gamma.value.data[ch];
        const T bt = beta.value.data[ch];
        for (int i = 0; i < x.n; ++i) {
            const T* p = x.channel(i, ch);
            T* xh = xhat_.channel(i, ch);
            T* out = y.channel(i, ch);
            for (std::size_t j = 0; j < plane; ++j) {
                xh[j] = (p[j] - m) * inv;
                out[j] = gm * xh[j] + bt;
            }
        }
        running_mean.value.data[ch] =
            static_cast<T>(momentum_ * running_mean.value.data[ch] + (1 - momentum_) * mean);
        running_var.value.data[ch] =
            static_cast<T>(momentum_ * running_var.value.data[ch] + (1 - momentum_) * var);
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::infer(const Tensor<T>& x) const {
    if (x.c != channels_) throw ShapeError("batch norm: channel mismatch");
    Tensor<T> y(x.n, x.c, x.h, x.w);
    const std::size_t plane = x.plane();
    for (int ch = 0; ch < channels_; ++ch) {
        const T scale = static_cast<T>(gamma.value.data[ch] /
                                       std::sqrt(static_cast<double>(running_var.value.data[ch]) + eps_));
        const T shift = beta.value.data[ch] - running_mean.value.data[ch] * scale;
        for (int i = 0; i < x.n; ++i) {
            const T* p = x.channel(i, ch);
            T* out = y.channel(i, ch);
            for (std::size_t j = 0; j < plane; ++j) out[j] = p[j] * scale + shift;
        }
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad) {
    if (mode_ == Mode::eval) throw Error("batch norm: backward after an eval-mode forward");
    const std::size_t plane = grad.plane();
    const double count = static_cast<double>(plane) * grad.n;
    Tensor<T> dx(grad.n, grad.c, grad.h, grad.w);
    for (int ch = 0; ch < channels_; ++ch) {
        double sum_g = 0, sum_gx = 0;
        for (int i = 0; i < grad.n; ++i) {
            const T* g = grad.channel(i, ch);
            const T* xh = xhat_.channel(i, ch);
            for (std::size_t j = 0; j < plane; ++j) {
                sum_g += g[j];
                sum_gx += static_cast<double>(g[j]) * xh[j];
            }
        }
        gamma.grad.data[ch] += static_cast<T>(sum_gx);
        beta.grad.data[ch] += static_cast<T>(sum_g);
        const T gm = gamma.value.data[ch];
        const T k = gm * inv_std_[ch];
        const T mg = static_cast<T>(sum_g / count);
        const T mgx = static_cast<T>(sum_gx / count);
        for (int i = 0; i < grad.n; ++i) {
            const T* g = grad.channel(i, ch);
            const T* xh = xhat_.channel(i, ch);
            T* out = dx.channel(i, ch);
            for (std::size_t j = 0; j < plane; ++j) out[j] = k * (g[j] - mg - xh[j] * mgx);
        }
    }
    return dx;
}

template <typename T>
void BatchNorm2d<T>::collect(ParamList<T>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
    out.push_back(&running_mean);
    out.push_back(&running_var);
}

// ---------------------------------------------------------------------------
// MaxPool2

template <typename T>
Tensor<T> MaxPool2<T>::forward(const Tensor<T>& x) {
    in_h_ = x.h;
    in_w_ = x.w;
    const int oh = x.h / 2, ow = x.w / 2;
    Tensor<T> y(x.n, x.c, oh, ow);
    argmax_.assign(y.size(), 0);
    std::size_t o = 0;
    for (int i = 0; i < x.n; ++i) {
        for (int ch = 0; ch < x.c; ++ch) {
            const T* p = x.channel(i, ch);
            const std::size_t base = static_cast<std::size_t>(p - x.data.data());
            for (int yy = 0; yy < oh; ++yy) {
                for (int xx = 0; xx < ow; ++xx, ++o) {
                    std::size_t best = static_cast<std::size_t>(2 * yy) * x.w + 2 * xx;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t idx = static_cast<std::size_t>(2 * yy + dy) * x.w + 2 * xx + dx;
                            if (p[idx] > p[best]) best = idx;
                        }
                    }
                    y.data[o] = p[best];
                    argmax_[o] = base + best;
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> MaxPool2<T>::infer(const Tensor<T>& x) const {
    MaxPool2<T> tmp;
    return tmp.forward(x);
}

template <typename T>
Tensor<T> MaxPool2<T>::backward(const Tensor<T>& grad) const {
    Tensor<T> dx(grad.n, grad.c, in_h_, in_w_);
    for (std::size_t o = 0; o < grad.size(); ++o) dx.data[argmax_[o]] += grad.data[o];
    return dx;
}

// ---------------------------------------------------------------------------
// Element-wise and resampling functions

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> y = x;
    for (auto& v : y.data) v = v > T(0) ? v : T(0);
    return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad, const Tensor<T>& output) {
    Tensor<T> g = grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(output.data[i] > T(0))) g.data[i] = T(0);
    }
    return g;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    // Saturated values are kept one half-ulp inside the open interval (0, 1).
    constexpr T lo = std::numeric_limits<T>::epsilon() / 2;
    constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / 2;
    Tensor<T> y = x;
    for (auto& v : y.data) {
        if (v >= T(0)) {
            v = T(1) / (T(1) + std::exp(-v));
        } else {
            const T e = std::exp(v);
            v = e / (T(1) + e);
        }
        v = std::clamp(v, lo, hi);
    }
    return y;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad, const Tensor<T>& output) {
    Tensor<T> g = grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.data[i] *= output.data[i] * (T(1) - output.data[i]);
    }
    return g;
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
    Tensor<T> y(x.n, x.c, x.h * 2, x.w * 2);
    for (int i = 0; i < x.n; ++i) {
        for (int ch = 0; ch < x.c; ++ch) {
            const T* p = x.channel(i, ch);
            T* q = y.channel(i, ch);
            for (int yy = 0; yy < y.h; ++yy) {
                const T* row = p + static_cast<std::size_t>(yy / 2) * x.w;
                T* out = q + static_cast<std::size_t>(yy) * y.w;
                for (int xx = 0; xx < y.w; ++xx) out[xx] = row[xx / 2];
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> upsample_nearest2x_backward(const Tensor<T>& grad) {
    Tensor<T> dx(grad.n, grad.c, grad.h / 2, grad.w / 2);
    for (int i = 0; i < grad.n; ++i) {
        for (int ch = 0; ch < grad.c; ++ch) {
            const T* g = grad.channel(i, ch);
            T* d = dx.channel(i, ch);
            for (int yy = 0; yy < grad.h; ++yy) {
                const T* row = g + static_cast<std::size_t>(yy) * grad.w;
                T* out = d + static_cast<std::size_t>(yy / 2) * dx.w;
                for (int xx = 0; xx < grad.w; ++xx) out[xx / 2] += row[xx];
            }
        }
    }
    return dx;
}

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w) {
    Tensor<T> y(x.n, x.c, out_h, out_w);
    for (int i = 0; i < x.n; ++i) {
        for (int ch = 0; ch < x.c; ++ch) {
            resize_plane_bilinear(x.channel(i, ch), x.h, x.w, y.channel(i, ch), out_h, out_w);
        }
    }
    return y;
}

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& grad, int in_h, int in_w) {
    Tensor<T> dx(grad.n, grad.c, in_h, in_w);
    for (int i = 0; i < grad.n; ++i) {
        for (int ch = 0; ch < grad.c; ++ch) {
            resize_plane_bilinear_adjoint(grad.channel(i, ch), grad.h, grad.w, dx.channel(i, ch),
                                          in_h, in_w);
        }
    }
    return dx;
}

#define CRACKSEG_INSTANTIATE(T)                                                          \
    template class Conv2d<T>;                                                            \
    template class ConvTranspose2d<T>;                                                   \
    template class BatchNorm2d<T>;                                                       \
    template class MaxPool2<T>;                                                          \
    template Tensor<T> relu(const Tensor<T>&);                                           \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                \
    template Tensor<T> sigmoid(const Tensor<T>&);                                        \
    template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);             \
    template Tensor<T> upsample_nearest2x(const Tensor<T>&);                             \
    template Tensor<T> upsample_nearest2x_backward(const Tensor<T>&);                    \
    template Tensor<T> resize_bilinear(const Tensor<T>&, int, int);                      \
    template Tensor<T> resize_bilinear_backward(const Tensor<T>&, int, int);

CRACKSEG_INSTANTIATE(float)
CRACKSEG_INSTANTIATE(double)

#undef CRACKSEG_INSTANTIATE

}  // namespace crackseg::nn
