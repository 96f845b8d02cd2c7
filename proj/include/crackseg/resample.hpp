#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace crackseg {

/// One axis of a half-pixel-centred linear resampling: dst[i] = (1-t)*src[lo] + t*src[hi].
struct LinearAxis {
    std::vector<int> lo;
    std::vector<int> hi;
    std::vector<double> t;
};

inline LinearAxis linear_axis(int src_len, int dst_len) {
    LinearAxis a;
    a.lo.resize(dst_len);
    a.hi.resize(dst_len);
    a.t.resize(dst_len);
    const double scale = static_cast<double>(src_len) / dst_len;
    for (int i = 0; i < dst_len; ++i) {
        double s = (i + 0.5) * scale - 0.5;
        if (s < 0) s = 0;
        int lo = static_cast<int>(std::floor(s));
        if (lo > src_len - 1) lo = src_len - 1;
        a.lo[i] = lo;
        a.hi[i] = std::min(lo + 1, src_len - 1);
        a.t[i] = s - lo;
    }
    return a;
}

/// Bilinear resize of one plane (half-pixel centres, edge clamp).
template <typename T>
void resize_plane_bilinear(const T* src, int h, int w, T* dst, int oh, int ow) {
    if (h == oh && w == ow) {
        std::copy(src, src + static_cast<std::size_t>(h) * w, dst);
        return;
    }
    const LinearAxis ay = linear_axis(h, oh);
    const LinearAxis ax = linear_axis(w, ow);
    for (int y = 0; y < oh; ++y) {
        const T* r0 = src + static_cast<std::size_t>(ay.lo[y]) * w;
        const T* r1 = src + static_cast<std::size_t>(ay.hi[y]) * w;
        const T ty = static_cast<T>(ay.t[y]);
        T* out = dst + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            const T tx = static_cast<T>(ax.t[x]);
            const T top = r0[ax.lo[x]] * (T(1) - tx) + r0[ax.hi[x]] * tx;
            const T bot = r1[ax.lo[x]] * (T(1) - tx) + r1[ax.hi[x]] * tx;
            out[x] = top * (T(1) - ty) + bot * ty;
        }
    }
}

/// Adjoint of resize_plane_bilinear: accumulates grad (oh x ow) into src_grad (h x w).
template <typename T>
void resize_plane_bilinear_adjoint(const T* grad, int oh, int ow, T* src_grad, int h, int w) {
    if (h == oh && w == ow) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) src_grad[i] += grad[i];
        return;
    }
    const LinearAxis ay = linear_axis(h, oh);
    const LinearAxis ax = linear_axis(w, ow);
    for (int y = 0; y < oh; ++y) {
        T* r0 = src_grad + static_cast<std::size_t>(ay.lo[y]) * w;
        T* r1 = src_grad + static_cast<std::size_t>(ay.hi[y]) * w;
        const T ty = static_cast<T>(ay.t[y]);
        const T* g = grad + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            const T tx = static_cast<T>(ax.t[x]);
            const T gt = g[x] * (T(1) - ty);
            const T gb = g[x] * ty;
            r0[ax.lo[x]] += gt * (T(1) - tx);
            r0[ax.hi[x]] += gt * tx;
            r1[ax.lo[x]] += gb * (T(1) - tx);
            r1[ax.hi[x]] += gb * tx;
        }
    }
}

/// Nearest-neighbour resize of one plane; source index = floor((i + 0.5) * src / dst).
template <typename T>
void resize_plane_nearest(const T* src, int h, int w, T* dst, int oh, int ow) {
    std::vector<int> xs(ow);
    for (int x = 0; x < ow; ++x) {
        xs[x] = std::min(w - 1, static_cast<int>(std::floor((x + 0.5) * w / ow)));
    }
    for (int y = 0; y < oh; ++y) {
        const int sy = std::min(h - 1, static_cast<int>(std::floor((y + 0.5) * h / oh)));
        const T* row = src + static_cast<std::size_t>(sy) * w;
        T* out = dst + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) out[x] = row[xs[x]];
    }
}

}  // namespace crackseg
