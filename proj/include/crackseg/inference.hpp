#pragma once

#include <string>
#include <utility>
#include <vector>

#include "crackseg/image.hpp"
#include "crackseg/network.hpp"

namespace crackseg {

/// Final output only; auxiliaries are discarded. Dimensions must be divisible by 32.
ProbabilityMap predict(const Model& model, const ImageTensor& image);

/// Reflect-pads to the next multiple of 32, predicts, and crops back to the input size.
ProbabilityMap predict_padded(const Model& model, const ImageTensor& image);

struct WorkingSize {
    int width = 0;
    int height = 0;
    bool operator==(const WorkingSize&) const = default;
};

enum class TtaMode { relative_factors, fixed_sizes };
enum class TtaAggregation { mean, max };

struct TtaPlan {
    TtaMode mode = TtaMode::relative_factors;
    std::vector<double> factors = {1.0};
    std::vector<WorkingSize> sizes;
    TtaAggregation aggregation = TtaAggregation::mean;

    void validate() const;
};

/// Factors used for CFD-family test sets.
TtaPlan cfd_plan();
/// Factors used for CRKWH100 and Stone331.
TtaPlan wide_plan();
/// Fixed working sizes for 544x384 DeepCrack-DB images.
TtaPlan deepcrack_plan();

/// Parses "0.6,0.8,1.0" (factors) or "288x192,416x288" (fixed sizes, width x height).
TtaPlan parse_tta_plan(const std::string& text);
std::string format_tta_plan(const TtaPlan& plan);

/// Relative factors: round(f * dim / 32) * 32 per axis. Fixed sizes: verbatim.
/// Duplicates are removed keeping the first occurrence. Throws ShapeError if a side is < 32.
std::vector<WorkingSize> resolve_plan(const TtaPlan& plan, int width, int height);

/// Bilinear resize to each working size, predict, resize back, then pixelwise mean or max.
/// A working size equal to the image size skips both resizes.
ProbabilityMap predict_tta(const Model& model, const ImageTensor& image, const TtaPlan& plan);

std::string to_string(TtaAggregation a);
TtaAggregation parse_tta_aggregation(const std::string& s);

}  // namespace crackseg
