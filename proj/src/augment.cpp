#include "crackseg/augment.hpp"

#include <algorithm>
#include <cmath>

#include "crackseg/resample.hpp"

namespace crackseg {

namespace {

struct D4Parts {
    bool transpose, flip_rows, flip_cols;
};

D4Parts parts(D4 e) {
    switch (e) {
        case D4::identity: return {false, false, false};
        case D4::rot90: return {true, false, true};
        case D4::rot180: return {false, true, true};
        case D4::rot270: return {true, true, false};
        case D4::flip_x_axis: return {false, true, false};
        case D4::flip_y_axis: return {false, false, true};
        case D4::transpose: return {true, false, false};
        case D4::anti_transpose: return {true, true, true};
    }
    return {false, false, false};
}

template <typename V>
void d4_plane(const V* src, int h, int w, V* dst, D4 e) {
    const D4Parts p = parts(e);
    const int oh = p.transpose ? w : h;
    const int ow = p.transpose ? h : w;
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            int a = p.transpose ? x : y;
            int b = p.transpose ? y : x;
            if (p.flip_rows) a = h - 1 - a;
            if (p.flip_cols) b = w - 1 - b;
            dst[static_cast<std::size_t>(y) * ow + x] = src[static_cast<std::size_t>(a) * w + b];
        }
    }
}

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

ImageTensor apply_d4(const ImageTensor& image, D4 element) {
    const bool t = parts(element).transpose;
    ImageTensor out(t ? image.width : image.height, t ? image.height : image.width, image.channels);
    for (int c = 0; c < image.channels; ++c) {
        d4_plane(image.data.data() + c * image.plane(), image.height, image.width,
                 out.data.data() + c * out.plane(), element);
    }
    return out;
}

BinaryMask apply_d4(const BinaryMask& mask, D4 element) {
    const bool t = parts(element).transpose;
    BinaryMask out(t ? mask.width : mask.height, t ? mask.height : mask.width);
    d4_plane(mask.data.data(), mask.height, mask.width, out.data.data(), element);
    return out;
}

std::vector<std::pair<ImageTensor, BinaryMask>> d4_expand(const ImageTensor& image, const BinaryMask& mask) {
    if (image.height != mask.height || image.width != mask.width) {
        throw ShapeError("d4_expand: image and mask dimensions differ");
    }
    std::vector<std::pair<ImageTensor, BinaryMask>> out;
    out.reserve(kD4Elements.size());
    for (D4 e : kD4Elements) out.emplace_back(apply_d4(image, e), apply_d4(mask, e));
    return out;
}

void AugmentPolicy::validate() const {
    if (patch_size < 32 || patch_size % 32 != 0) {
        throw ConfigError("patch size must be a positive multiple of 32, got " + std::to_string(patch_size));
    }
    if (crop_min < 1 || crop_min > patch_size) throw ConfigError("crop_min must be in [1, patch size]");
    for (double p : {p_brightness, p_contrast, p_noise, p_gaussian_branch, p_zoom, p_shrink_branch}) {
        if (!in_unit(p)) throw ConfigError("augmentation probabilities must lie in [0,1]");
    }
    if (brightness_range < 0 || contrast_range < 0 || gaussian_sigma_max < 0) {
        throw ConfigError("augmentation ranges must be nonnegative");
    }
    if (multiplicative_low > multiplicative_high || multiplicative_low < 0) {
        throw ConfigError("multiplicative noise range must be an ordered nonnegative interval");
    }
    if (!(shrink_low > 0) || shrink_low > shrink_high || shrink_high > 1) {
        throw ConfigError("shrink range must satisfy 0 < low <= high <= 1");
    }
}

BinaryMask apply_geometry(const BinaryMask& mask, const PatchGeometry& g, int patch_size) {
    BinaryMask m = crop(mask, g.crop_y, g.crop_x, patch_size, patch_size);
    switch (g.zoom) {
        case PatchGeometry::Zoom::none: break;
        case PatchGeometry::Zoom::shrink: {
            const int before = (patch_size - g.shrink_size) / 2;
            const int after = patch_size - g.shrink_size - before;
            m = pad_reflect(resize_nearest(m, g.shrink_size, g.shrink_size), before, after, before, after);
            break;
        }
        case PatchGeometry::Zoom::sized_crop:
            m = resize_nearest(crop(m, g.sub_y, g.sub_x, g.sub_size, g.sub_size), patch_size, patch_size);
            break;
    }
    return m;
}

namespace {

ImageTensor nearest_resize(const ImageTensor& img, int h, int w) {
    ImageTensor out(h, w, img.channels);
    for (int c = 0; c < img.channels; ++c) {
        resize_plane_nearest(img.data.data() + c * img.plane(), img.height, img.width,
                             out.data.data() + c * out.plane(), h, w);
    }
    return out;
}

}  // namespace

Patch sample_patch(const ImageTensor& image, const BinaryMask& mask, const AugmentPolicy& policy,
                   SeededRng& rng) {
    policy.validate();
    const int size = policy.patch_size;
    if (image.height != mask.height || image.width != mask.width) {
        throw ShapeError("sample_patch: image and mask dimensions differ");
    }
    if (image.height < size || image.width < size) {
        throw ShapeError("sample_patch: image " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + " is smaller than the " + std::to_string(size) +
                         "x" + std::to_string(size) + " patch");
    }

    Patch out;
    PatchGeometry& g = out.geometry;

    // 1. random crop (image, mask)
    g.crop_y = static_cast<int>(rng.uniform_int(0, image.height - size));
    g.crop_x = static_cast<int>(rng.uniform_int(0, image.width - size));
    ImageTensor img = crop(image, g.crop_y, g.crop_x, size, size);

    // 2. brightness (image)
    if (rng.bernoulli(policy.p_brightness)) {
        const auto delta = static_cast<float>(rng.uniform(-policy.brightness_range, policy.brightness_range));
        if (policy.brightness_mode == BrightnessMode::additive) {
            for (auto& v : img.data) v += delta;
        } else {
            for (auto& v : img.data) v *= 1.0f + delta;
        }
    }

    // 3. contrast around the patch mean (image)
    if (rng.bernoulli(policy.p_contrast)) {
        const auto factor = static_cast<float>(1.0 + rng.uniform(-policy.contrast_range, policy.contrast_range));
        double sum = 0;
        for (float v : img.data) sum += v;
        const auto mean = static_cast<float>(sum / static_cast<double>(img.data.size()));
        for (auto& v : img.data) v = mean + (v - mean) * factor;
    }

    // 4. one of additive Gaussian / multiplicative noise (image)
    if (rng.bernoulli(policy.p_noise)) {
        if (rng.bernoulli(policy.p_gaussian_branch)) {
            const double sigma = rng.uniform(0.0, policy.gaussian_sigma_max) / 255.0;
            for (auto& v : img.data) v += static_cast<float>(rng.normal(0.0, sigma));
        } else {
            for (auto& v : img.data) {
                v *= static_cast<float>(rng.uniform(policy.multiplicative_low, policy.multiplicative_high));
            }
        }
    }

    // 5. zoom out (shrink + mirror pad) or zoom in (sized crop + nearest upscale), (image, mask)
    if (rng.bernoulli(policy.p_zoom)) {
        if (rng.bernoulli(policy.p_shrink_branch)) {
            g.zoom = PatchGeometry::Zoom::shrink;
            const double scale = rng.uniform(policy.shrink_low, policy.shrink_high);
            g.shrink_size = std::clamp(static_cast<int>(std::lround(size * scale)), 1, size);
            const int before = (size - g.shrink_size) / 2;
            const int after = size - g.shrink_size - before;
            img = pad_reflect(resize_bilinear(img, g.shrink_size, g.shrink_size), before, after, before, after);
        } else {
            g.zoom = PatchGeometry::Zoom::sized_crop;
            g.sub_size = static_cast<int>(rng.uniform_int(policy.crop_min, size));
            g.sub_y = static_cast<int>(rng.uniform_int(0, size - g.sub_size));
            g.sub_x = static_cast<int>(rng.uniform_int(0, size - g.sub_size));
            img = nearest_resize(crop(img, g.sub_y, g.sub_x, g.sub_size, g.sub_size), size, size);
        }
    }

    for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
    out.image = std::move(img);
    out.mask = apply_geometry(mask, g, size);
    return out;
}

}  // namespace crackseg
