#pragma once

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "crackseg/errors.hpp"

namespace crackseg::nn {

/// Cache-line aligned storage. Vectorised kernels peel differently for different base
/// alignments, which would make results depend on where the allocator put a buffer.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, alignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Dense NCHW tensor. Row-major within each (n, c) plane.
template <typename T>
struct Tensor {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;
    AlignedVector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
    bool empty() const { return data.empty(); }

    T* sample(int i) { return data.data() + i * sample_size(); }
    const T* sample(int i) const { return data.data() + i * sample_size(); }
    T* channel(int i, int ch) { return sample(i) + ch * plane(); }
    const T* channel(int i, int ch) const { return sample(i) + ch * plane(); }

    T& at(int i, int ch, int y, int x) { return channel(i, ch)[static_cast<std::size_t>(y) * w + x]; }
    T at(int i, int ch, int y, int x) const { return channel(i, ch)[static_cast<std::size_t>(y) * w + x]; }

    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    std::string shape_string() const {
        return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
               std::to_string(w);
    }

    void zero() { std::fill(data.begin(), data.end(), T(0)); }
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(what) + ": shape " + a.shape_string() + " vs " + b.shape_string());
    }
}

/// Element-wise a += b.
template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

/// Channel concatenation of two tensors with equal n, h, w.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.n != b.n || a.h != b.h || a.w != b.w) {
        throw ShapeError("concat: " + a.shape_string() + " vs " + b.shape_string());
    }
    Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
    for (int i = 0; i < a.n; ++i) {
        std::copy(a.sample(i), a.sample(i) + a.sample_size(), out.sample(i));
        std::copy(b.sample(i), b.sample(i) + b.sample_size(), out.sample(i) + a.sample_size());
    }
    return out;
}

/// Inverse of concat_channels for gradients: splits off the first `first_channels`.
template <typename T>
void split_channels(const Tensor<T>& g, int first_channels, Tensor<T>& a, Tensor<T>& b) {
    a = Tensor<T>(g.n, first_channels, g.h, g.w);
    b = Tensor<T>(g.n, g.c - first_channels, g.h, g.w);
    for (int i = 0; i < g.n; ++i) {
        std::copy(g.sample(i), g.sample(i) + a.sample_size(), a.sample(i));
        std::copy(g.sample(i) + a.sample_size(), g.sample(i) + g.sample_size(), b.sample(i));
    }
}

}  // namespace crackseg::nn
