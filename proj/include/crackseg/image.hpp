#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crackseg/errors.hpp"

namespace crackseg {

enum class ColorMode { grayscale, rgb };

/// Grayscale or RGB raster, planar (channel-major) float values in [0,1].
struct ImageTensor {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<float> data;

    ImageTensor() = default;
    ImageTensor(int h, int w, int c, float fill = 0.0f)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
    float& at(int c, int y, int x) { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
    float at(int c, int y, int x) const {
        return data[c * plane() + static_cast<std::size_t>(y) * width + x];
    }
    bool operator==(const ImageTensor&) const = default;
};

/// Strictly binary raster: crack annotations and valid-region masks.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const;
    bool operator==(const BinaryMask&) const = default;
};

/// Per-pixel crack confidence in [0,1].
struct ProbabilityMap {
    int height = 0;
    int width = 0;
    std::vector<float> data;

    ProbabilityMap() = default;
    ProbabilityMap(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

    float& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const ProbabilityMap&) const = default;
};

/// ITU-R BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
ImageTensor to_grayscale(const ImageTensor& rgb);

ImageTensor resize_bilinear(const ImageTensor& img, int height, int width);
ProbabilityMap resize_bilinear(const ProbabilityMap& map, int height, int width);
BinaryMask resize_nearest(const BinaryMask& mask, int height, int width);

/// Mirror padding without edge repetition (dcb|abcd|cba), then cropping back is exact.
ImageTensor pad_reflect(const ImageTensor& img, int top, int bottom, int left, int right);
BinaryMask pad_reflect(const BinaryMask& mask, int top, int bottom, int left, int right);
ImageTensor crop(const ImageTensor& img, int y, int x, int height, int width);
ProbabilityMap crop(const ProbabilityMap& map, int y, int x, int height, int width);
BinaryMask crop(const BinaryMask& mask, int y, int x, int height, int width);

// --- File I/O ----------------------------------------------------------------

/// True when the file starts with the signature of a supported raster format.
bool has_image_signature(const std::filesystem::path& path);

/// Decodes an 8- or 16-bit raster, normalised to [0,1]. RGB files are converted to
/// grayscale when `mode` is grayscale; grayscale files are replicated when `mode` is rgb.
ImageTensor read_image(const std::filesystem::path& path, ColorMode mode);

/// Decodes a mask; pixel is set when value >= half of full scale (128 for 8-bit).
BinaryMask read_mask(const std::filesystem::path& path);

/// Reads a prediction: 16-bit PNG (value / 65535), 8-bit raster (value / 255) or a
/// `.f32` raw sidecar.
ProbabilityMap read_probability(const std::filesystem::path& path);

void write_image_png(const std::filesystem::path& path, const ImageTensor& img, int bit_depth = 8);
void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
/// 16-bit grayscale, value = round(p * 65535).
void write_probability_png(const std::filesystem::path& path, const ProbabilityMap& map);

/// Raw sidecar: magic "CSF1", uint32 height, uint32 width, then float32 values, little-endian.
void write_probability_raw(const std::filesystem::path& path, const ProbabilityMap& map);
ProbabilityMap read_probability_raw(const std::filesystem::path& path);

}  // namespace crackseg
