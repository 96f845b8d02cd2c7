#pragma once

#include <array>
#include <utility>
#include <vector>

#include "crackseg/image.hpp"
#include "crackseg/rng.hpp"

namespace crackseg {

// --- D4 expansion ---------------------------------------------------------------

/// The eight symmetries of the square, as (transpose, flip rows, flip columns) applied in
/// that order: output(y, x) = input(flip(transpose(y, x))).
enum class D4 { identity, rot90, rot180, rot270, flip_x_axis, flip_y_axis, transpose, anti_transpose };

inline constexpr std::array<D4, 8> kD4Elements = {D4::identity,    D4::rot90,       D4::rot180,
                                                  D4::rot270,      D4::flip_x_axis, D4::flip_y_axis,
                                                  D4::transpose,   D4::anti_transpose};

ImageTensor apply_d4(const ImageTensor& image, D4 element);
BinaryMask apply_d4(const BinaryMask& mask, D4 element);

/// All 8 variants, in kD4Elements order; image and mask get the same transform.
std::vector<std::pair<ImageTensor, BinaryMask>> d4_expand(const ImageTensor& image, const BinaryMask& mask);

// --- Patch augmentation ------------------------------------------------------------

enum class BrightnessMode {
    additive,        // x + delta
    multiplicative,  // x * (1 + delta)
};

/// Stochastic patch policy. Defaults reproduce the published policy.
struct AugmentPolicy {
    int patch_size = 288;
    double brightness_range = 0.10;       // delta ~ U(-r, r)
    double contrast_range = 0.10;         // factor ~ 1 + U(-r, r), scaled around the patch mean
    double gaussian_sigma_max = 2.55;     // on the 0-255 scale
    double multiplicative_low = 0.75;
    double multiplicative_high = 1.25;
    double shrink_low = 0.75;
    double shrink_high = 1.0;
    int crop_min = 144;
    BrightnessMode brightness_mode = BrightnessMode::additive;

    double p_brightness = 0.5;
    double p_contrast = 0.5;
    double p_noise = 1.0;          // the noise step always runs unless disabled
    double p_gaussian_branch = 0.5;  // else multiplicative noise
    double p_zoom = 0.3;
    double p_shrink_branch = 0.5;    // else random sized crop

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

/// Geometric parameters drawn for one patch; enough to replay the transform on a mask.
struct PatchGeometry {
    enum class Zoom { none, shrink, sized_crop };
    int crop_y = 0;
    int crop_x = 0;
    Zoom zoom = Zoom::none;
    int shrink_size = 0;  // side length after shrinking, before mirror padding
    int sub_y = 0;        // sized crop window
    int sub_x = 0;
    int sub_size = 0;
};

struct Patch {
    ImageTensor image;
    BinaryMask mask;
    PatchGeometry geometry;
};

/// Runs the policy steps in order: random crop (image+mask); brightness (image);
/// contrast (image); one of additive Gaussian / multiplicative noise (image); with p_zoom
/// one of shrink with mirror padding / random sized crop with nearest upscale (image+mask);
/// final clamp to [0,1]. Masks are only ever resampled with nearest neighbour.
Patch sample_patch(const ImageTensor& image, const BinaryMask& mask, const AugmentPolicy& policy,
                   SeededRng& rng);

/// Replays the geometric part of a patch on a mask.
BinaryMask apply_geometry(const BinaryMask& mask, const PatchGeometry& geometry, int patch_size);

}  // namespace crackseg
